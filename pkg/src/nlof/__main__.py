import sys

from nlof.cli import main

sys.exit(main())
