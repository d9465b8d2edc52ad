import sys

from taskaug.cli.main import main

sys.exit(main())
