"""
The `curvint` command line.

    curvint analyze   --curve FILE
    curvint periods   --curve FILE [--cycles FILE|auto] [--check]
    curvint decompose --curve FILE --form FILE [--check]
    curvint integrate --curve FILE --form FILE (--gamma EXPR | --arc FILE) [--check]

or the same inputs gathered in a `--job FILE`. Reports are JSON, on
stdout or in `--output FILE`. The exit status is 0 on success, 2 for
input errors, 3 for numerical failures and 4 when a cross-check fails.
"""


__all__ = ['main']


import logging
import sys
import warnings

from curvint import config, configure
from curvint.core.core import COMMANDS, raise_failed_checks, write_output
from curvint.core.exceptions import EXIT_OK, CurvintError
from curvint.core.parsers import curvint_parser, load_job


logger = logging.getLogger(__name__)

_LEVELS = {-1: logging.ERROR, 0: logging.WARNING, 1: logging.INFO}


def _setup_logging(verbosity):
    level = _LEVELS.get(max(-1, min(verbosity, 2)), logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')
    logging.getLogger().setLevel(level)
    logging.captureWarnings(True)


def main(argv=None):
    """
    Run one command and return the exit status.

    Parameters
    ----------
    argv : list of str, optional
        Arguments without the program name; defaults to `sys.argv[1:]`.

    Returns
    -------
    int
    """
    try:
        args = curvint_parser.parse_args(sys.argv[1:] if argv is None else argv)
        _setup_logging(args.verbosity)
        overrides = {name: getattr(args, name) for name in ('precision', 'seed', 'check')
                     if getattr(args, name, None) is not None}
        configure(**overrides)
        job = load_job(args.job, curve=args.curve,
                       cycles=getattr(args, 'cycles', None),
                       form=getattr(args, 'form', None),
                       gamma=getattr(args, 'gamma', None),
                       arc=getattr(args, 'arc', None))
        job_overrides = {name: getattr(job, name) for name in ('precision', 'seed')
                         if name not in overrides and getattr(job, name) is not None}
        configure(**job_overrides)
        logger.info("running %s with %r", args.command, config)
        with warnings.catch_warnings():
            warnings.simplefilter('default')
            report = COMMANDS[args.command](job)
        write_output(report, args.output)
        raise_failed_checks(report)
    except CurvintError as e:
        print(f"curvint: error: {e}", file=sys.stderr)
        return e.exit_code
    return EXIT_OK
