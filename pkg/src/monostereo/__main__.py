import sys

from monostereo.cli import main

sys.exit(main())
