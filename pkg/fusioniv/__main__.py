import sys

from fusioniv.cli import main

sys.exit(main())
