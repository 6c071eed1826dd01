"""Module runner so `python -m treerisk` behaves like the installed script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
