"""
Subcommands
Each module exposes register(subparsers, common) and binds its handler via set_defaults
"""

from app.core.exceptions import UsageError
from app.models.run_config import RunConfig


def require(config: RunConfig, *names: str) -> None:
    missing = [name for name in names if getattr(config, name) is None]
    if missing:
        flags = ", ".join("--" + name.replace("_", "-") for name in missing)
        raise UsageError(f"{config.experiment or config.subcommand} needs {flags}")
