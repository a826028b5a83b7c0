import sys

from drfpca.main import main

sys.exit(main())
