import sys

from stpa.cli import main

sys.exit(main())
