import sys
from pathlib import Path

# in-tree runs: the package sources live in python/, the extension in build/
root = Path(__file__).resolve().parents[2]
for p in (root / "python", root / "build"):
    if p.exists() and str(p) not in sys.path:
        sys.path.insert(0, str(p))
