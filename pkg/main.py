"""
Main Entry Point - BRL Market Engine

Command-line front end for simulating best-response-with-lookahead price
dynamics in CES Fisher markets:

    python main.py generate     CONFIG [-o OUT]   seeded random market file
    python main.py equilibrium  CONFIG [-o OUT]   equilibrium report, cross-checked
    python main.py simulate     CONFIG [-o OUT]   trajectory CSV + decay fit
    python main.py contraction  CONFIG [-o OUT]   contraction-ratio report

One config file per invocation; flags only redirect output and verbosity.
"""

import argparse
import json
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from commands import cmd_contraction, cmd_equilibrium, cmd_generate, cmd_simulate
from config import settings
from utils.errors import (
    ArgumentError,
    DomainError,
    InsufficientDataError,
    PropertyViolation,
    SolverError,
)

logger = logging.getLogger(__name__)

# ============================================================================
# Exit Codes
# ============================================================================

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_PARSE_ERROR = 2
EXIT_DOMAIN_ERROR = 3
EXIT_SOLVER_ERROR = 4
EXIT_PROPERTY_VIOLATION = 5

COMMANDS: Dict[str, Callable[[str, Optional[str]], object]] = {
    "generate": cmd_generate,
    "equilibrium": cmd_equilibrium,
    "simulate": cmd_simulate,
    "contraction": cmd_contraction,
}


# ============================================================================
# Logging
# ============================================================================

def configure_logging(verbose: bool = False) -> None:
    """Console logging always; rotating app/error files when LOG_TO_FILE is set"""
    log_level = logging.DEBUG if verbose else getattr(logging, settings.LOG_LEVEL)
    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)

    # Console handler (stderr, so stdout stays clean for piping)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(logging.Formatter(log_format))
    root_logger.addHandler(console_handler)

    if not settings.LOG_TO_FILE:
        return

    os.makedirs(settings.LOG_DIR, exist_ok=True)

    # File handler with rotation (10MB max, keep 5 backups)
    file_handler = RotatingFileHandler(
        os.path.join(settings.LOG_DIR, "app.log"),
        maxBytes=10*1024*1024,
        backupCount=5,
        encoding='utf-8'
    )
    file_handler.setLevel(log_level)
    file_handler.setFormatter(logging.Formatter(log_format))
    root_logger.addHandler(file_handler)

    # Separate error log file
    error_file_handler = RotatingFileHandler(
        os.path.join(settings.LOG_DIR, "error.log"),
        maxBytes=10*1024*1024,
        backupCount=5,
        encoding='utf-8'
    )
    error_file_handler.setLevel(logging.ERROR)
    error_file_handler.setFormatter(logging.Formatter(log_format))
    root_logger.addHandler(error_file_handler)


# ============================================================================
# Argument Parsing
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brl-market",
        description="Best-response-with-lookahead dynamics in CES Fisher markets",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, handler in COMMANDS.items():
        sub = subparsers.add_parser(name, help=(handler.__doc__ or "").strip().splitlines()[0])
        sub.add_argument("config", help="Experiment config (JSON)")
        sub.add_argument("-o", "--output", default=None, help="Output file (overrides output.path)")
        sub.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    return parser


# ============================================================================
# Dispatch
# ============================================================================

def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command and map failures to exit codes

    0 success, 2 parse error, 3 domain error, 4 solver error,
    5 property violation, 1 anything unexpected.
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    try:
        COMMANDS[args.command](args.config, args.output)
    except (ValidationError, json.JSONDecodeError, FileNotFoundError) as exc:
        logger.error(f"Could not parse input for '{args.command}':\n{exc}")
        return EXIT_PARSE_ERROR
    except PropertyViolation as exc:
        logger.error(f"Property violation: {exc}")
        return EXIT_PROPERTY_VIOLATION
    except SolverError as exc:
        logger.error(f"Solver failure: {exc}")
        return EXIT_SOLVER_ERROR
    except (DomainError, ArgumentError, InsufficientDataError, IndexError) as exc:
        logger.error(f"Domain error: {exc}")
        return EXIT_DOMAIN_ERROR
    except Exception as exc:
        logger.error(f"Unhandled exception: {exc}", exc_info=True)
        return EXIT_UNEXPECTED

    logger.info(f"Command '{args.command}' completed successfully")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
