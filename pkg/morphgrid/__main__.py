import sys

from morphgrid.cli import main

sys.exit(main())
