from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional

from seqsel import __version__
from seqsel.commands import COMMANDS
from seqsel.serialization import json_safe


logger = logging.getLogger("seqsel")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqsel",
        description="Cost-aware sequential feature selection with dueling double deep Q-networks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        dest="log_level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command.name, help=command.help, description=command.help)
        command.add_arguments(p)
        p.set_defaults(handler=command)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)

    command = args.handler
    kwargs = {k: v for k, v in vars(args).items() if k not in {"handler", "command", "log_level"}}
    try:
        summary = command.run(**kwargs)
    except Exception as exc:
        logger.error("%s failed: %s", command.name, exc)
        logger.debug("traceback", exc_info=True)
        error = {"status": "error", "command": command.name, "error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(error), file=sys.stderr)
        return 1

    print(json.dumps(json_safe({"status": "ok", "command": command.name, **summary})))
    return 0


if __name__ == "__main__":
    sys.exit(main())
