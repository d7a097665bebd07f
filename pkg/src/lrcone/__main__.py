import sys

from lrcone.cli import main

sys.exit(main())
