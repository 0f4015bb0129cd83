from __future__ import annotations

import sys

def main(argv: list[str] | None = None) -> int:
    """Convenience main dispatcher.

    - `python main.py scan --vmin 0.97 --vmax 0.99 --steps 3` runs the CLI
    """
    from cli.main import main as cli_main

    argv = argv if argv is not None else sys.argv[1:]
    return cli_main(argv)


if __name__ == "__main__":
    raise SystemExit(main())
