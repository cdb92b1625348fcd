#!/usr/bin/env python3
"""
sqar command-line entry script.

Usage:
    python sqar.py simulate --dgp asymmetric_arch --n 1000 --seed 7 --output-dir out/
    python sqar.py estimate --input out/series.csv --output-dir out/
"""

import sys
from pathlib import Path

# Add src to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root / "src"))

from cli.main import main


if __name__ == "__main__":
    sys.exit(main())
