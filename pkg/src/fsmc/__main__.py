"""Allow `python -m fsmc` as an alias for the `fsmc` console script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
