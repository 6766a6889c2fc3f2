import sys

from pshlab.cli import main

sys.exit(main())
