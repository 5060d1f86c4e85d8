"""Module entry point so ``python -m epflow`` runs the front end."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
