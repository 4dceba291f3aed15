import sys

from trailnav.cli import main

sys.exit(main())
