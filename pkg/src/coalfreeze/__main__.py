import sys

from coalfreeze.cli import main

sys.exit(main())
