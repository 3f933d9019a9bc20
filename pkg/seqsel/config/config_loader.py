from pathlib import Path
from typing import Any, Dict
import yaml


CONFIG_DIR = Path(__file__).resolve().parent
DEFAULTS_FILE = "defaults.yaml"
PROFILES_FILE = "profiles.yaml"


def load_yaml(filename: str, base_dir: Path = CONFIG_DIR) -> Dict[str, Any]:
    """
    Loads and returns the parsed YAML object, which must be a top-level mapping.
    JSON documents are accepted too, since YAML is a superset of JSON.
    """
    path = Path(filename)
    if not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        raise FileNotFoundError(f"Missing config file: {path}")

    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)

    if not isinstance(data, dict):
        raise ValueError(f"{path.name} must contain a top-level mapping (key: value)")

    return data


def load_profile(name: str) -> Dict[str, Any]:
    """Training overrides for a named profile in profiles.yaml."""
    profiles = load_yaml(PROFILES_FILE)
    if name not in profiles:
        raise ValueError(f"unknown profile '{name}'; available: {sorted(profiles)}")
    overlay = profiles[name] or {}
    if not isinstance(overlay, dict):
        raise ValueError(f"profile '{name}' must be a mapping of training parameters")
    return overlay
