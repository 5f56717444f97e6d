"""
Starts the tvtree command line application.
"""

from pathlib import Path

from tvtree.app.__main__ import main

import os
import sys

if __name__ == "__main__":
    sys.exit(main(Path(os.path.dirname(os.path.abspath(__file__)))))
