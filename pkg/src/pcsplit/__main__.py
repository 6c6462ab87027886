"""
Entry point for the pcsplit CLI.

`run` holds the exit-code contract: 0 converged (or certificate ok),
2 iteration cap, 1 anything else, including click usage errors.
"""

from collections.abc import Sequence
import sys

import click

from pcsplit.cli import main as cli_main
from pcsplit.solver import EXIT_ERROR, EXIT_ITERATION_CAP, EXIT_OK


def run(argv: Sequence[str] | None = None) -> int:
    """Invoke the CLI without letting click pick exit codes."""
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        rv = cli_main.main(args=args, prog_name='pcsplit', standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("✗ Aborted", err=True)
        return EXIT_ERROR
    except click.ClickException as e:
        e.show()
        return EXIT_ERROR
    match rv:
        case int() if rv in (EXIT_OK, EXIT_ERROR, EXIT_ITERATION_CAP):
            return rv
        case int():
            return EXIT_ERROR
        case _:
            return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
