import sys

from extinction_lab.cli import main

sys.exit(main())
