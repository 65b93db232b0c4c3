"""
ghlab main entry point
Run this file to use the command line interface
"""

import sys
from pathlib import Path

# Add the src directory to the path
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))

from ghlab.cli.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
