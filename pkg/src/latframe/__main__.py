"""Allow ``python -m latframe``."""

import sys

from .cli import main

sys.exit(main())
