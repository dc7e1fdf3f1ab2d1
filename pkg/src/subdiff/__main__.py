import sys

from subdiff.cli import main

sys.exit(main())
