import sys

from dqgan.cli import main

sys.exit(main())
