"""Generate the GRID4 fixture files.

    python scripts/make_grid4.py [OUTPUT_DIR]
"""

import sys

from voirie.grid4 import write_grid4

if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "grid4"
    for name, path in write_grid4(target).items():
        print(f"{name}: {path}")
