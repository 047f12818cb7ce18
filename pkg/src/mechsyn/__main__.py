import sys

from mechsyn.cli import main

sys.exit(main())
