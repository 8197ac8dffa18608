import sys

from dsrlab.cli import main

sys.exit(main())
