"""Generate the bundled target silhouettes (0/1 grids, one row per line).

Usage: python3 scripts/build_silhouettes.py [output_dir]
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

SIZE = 64


def _grid():
    centers = np.arange(SIZE) + 0.5
    x = centers[None, :] - SIZE / 2.0
    y = centers[:, None] - SIZE / 2.0
    return x, y


def disk() -> np.ndarray:
    x, y = _grid()
    r = 0.45 * SIZE
    return (x**2 + y**2 <= r**2).astype(int)


def ring() -> np.ndarray:
    x, y = _grid()
    d2 = x**2 + y**2
    outer = 0.45 * SIZE
    inner = 0.225 * SIZE
    return ((d2 <= outer**2) & (d2 >= inner**2)).astype(int)


def heart() -> np.ndarray:
    x, y = _grid()
    # Classic cardioid-like implicit curve, y flipped so the notch is on top.
    xs = x / (0.30 * SIZE)
    ys = -y / (0.30 * SIZE)
    return ((xs**2 + ys**2 - 1.0) ** 3 - xs**2 * ys**3 <= 0).astype(int)


def star() -> np.ndarray:
    x, y = _grid()
    theta = np.arctan2(-y, x)
    radius = 0.28 * SIZE * (1.0 + 0.55 * np.cos(5.0 * theta))
    return (x**2 + y**2 <= radius**2).astype(int)


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent
        / "src"
        / "wordart_forge"
        / "resources"
        / "silhouettes"
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, build in (("disk", disk), ("ring", ring), ("heart", heart), ("star", star)):
        grid = build()
        lines = ["".join(str(int(v)) for v in row) for row in grid]
        (out_dir / f"{name}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {out_dir / (name + '.txt')} ({int(grid.sum())} occupied)")


if __name__ == "__main__":
    main()
