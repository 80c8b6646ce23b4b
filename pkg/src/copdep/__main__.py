import sys

from copdep.cli import main

sys.exit(main())
