"""
Rescircuit - random resistor networks on complete graphs and Galton-Watson trees
Command line entry point

Exit codes: 0 all asserted criteria pass, 1 usage or input error,
2 a criterion failed, 3 the experiment abstained
"""

import logging
import sys
from typing import List, Optional

from app.api import build_parser, config_from_args
from app.core.config import settings
from app.core.exceptions import RescircuitError, TrialFailed, UsageError

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger("rescircuit")


def configure_logging(verbose: bool = False) -> None:
    """Logs go to stderr so stdout carries only the report"""
    logging.basicConfig(
        level=logging.DEBUG if verbose else settings.LOG_LEVEL,
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        configure_logging(args.verbose)
        config = config_from_args(args)
        logger.debug(f"Run configuration: {config.model_dump()}")
        return args.handler(config, args)
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"rescircuit: error: {e}", file=sys.stderr)
        return 1
    except TrialFailed as e:
        logger.error(f"❌ {str(e)}")
        return 1
    except (RescircuitError, ValueError, OSError) as e:
        logger.error(f"❌ {type(e).__name__}: {str(e)}")
        print(f"rescircuit: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(run())
