import sys

from iclest.cli import main

sys.exit(main())
