import sys

from conformalrf.cli import main

sys.exit(main())
