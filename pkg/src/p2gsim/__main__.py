import sys

from p2gsim.cli import main

sys.exit(main())
