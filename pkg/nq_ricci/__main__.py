import sys

from nq_ricci.cli import main

sys.exit(main())
