"""
Command line surface - root parser assembled from the command modules
"""

import argparse
from typing import Any, Dict

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import UsageError
from app.models.run_config import RunConfig


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting with status 2"""

    def error(self, message):
        raise UsageError(message)


def common_options() -> argparse.ArgumentParser:
    """Options shared by every subcommand"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (env RESCIRCUIT_DEFAULT_SEED)")
    common.add_argument("--workers", type=int, default=None, help="parallel trial workers")
    common.add_argument(
        "--format", choices=["json", "text"], default=None, help="report format (default json, text for resistance)"
    )
    common.add_argument("--output", default=None, help="write the report here instead of stdout")
    common.add_argument("--no-timestamp", dest="no_timestamp", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return common


def build_parser() -> CliParser:
    from app.api.commands import experiment, gw, resistance, selftest

    parser = CliParser(prog="rescircuit", description=settings.APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True, parser_class=CliParser)

    common = common_options()
    for module in (resistance, gw, experiment, selftest):
        module.register(subparsers, common)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Validate parsed flags into a RunConfig; settings fill the seed and worker defaults"""
    fields: Dict[str, Any] = {
        key: value
        for key, value in vars(args).items()
        if key in RunConfig.model_fields and value is not None
    }
    fields.setdefault("seed", settings.DEFAULT_SEED)
    fields.setdefault("workers", settings.WORKERS)
    try:
        return RunConfig(**fields)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise UsageError(problems) from e


__all__ = ["CliParser", "build_parser", "common_options", "config_from_args"]
