import sys

from topsig.cli import main

sys.exit(main())
