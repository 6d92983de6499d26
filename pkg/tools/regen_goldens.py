#!/usr/bin/env python3
"""Regenerate the frozen golden heatmaps under tests/golden/.

Run from the repository root after an intentional grid-convention change:

    python3 tools/regen_goldens.py
"""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from priormap import rasterize, write_heatmap  # noqa: E402
from golden_scenes import curated_scenes  # noqa: E402


def main():
    out_dir = ROOT / "tests" / "golden"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, vectors, cfg in curated_scenes():
        grid = rasterize(vectors, cfg)
        path = out_dir / f"scene_{name}.bevh"
        write_heatmap(path, grid)
        print(f"{path}  cells={int(grid.sum())}")


if __name__ == "__main__":
    main()
