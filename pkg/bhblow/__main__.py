import sys

from bhblow.cli import main

sys.exit(main())
