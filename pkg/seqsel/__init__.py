"""Sequential feature selection with dueling double deep Q-networks."""

__version__ = "0.1.0"
