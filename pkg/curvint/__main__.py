import sys

from curvint.cli import main


sys.exit(main())
