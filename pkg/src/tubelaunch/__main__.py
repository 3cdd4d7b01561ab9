import sys

from tubelaunch.cli import main

sys.exit(main())
