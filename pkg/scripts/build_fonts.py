"""Build the two bundled fixture fonts deterministically.

Letterforms come from a 5x7 cell table; every lit cell becomes a small
rectangle contour (horizontal runs merged), so outlines stay simple and
the binaries rebuild byte-identically (timestamps pinned).

Usage: python3 scripts/build_fonts.py [output_dir]
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from fontTools.fontBuilder import FontBuilder
from fontTools.pens.ttGlyphPen import TTGlyphPen

UPEM = 1000
CELL = 120
ROWS = 7

# fmt: off
BITMAPS = {
    "A": [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"],
    "B": ["####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."],
    "C": [".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."],
    "D": ["####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."],
    "E": ["#####", "#....", "#....", "####.", "#....", "#....", "#####"],
    "F": ["#####", "#....", "#....", "####.", "#....", "#....", "#...."],
    "G": [".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###."],
    "H": ["#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"],
    "I": [".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."],
    "J": ["..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."],
    "K": ["#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"],
    "L": ["#....", "#....", "#....", "#....", "#....", "#....", "#####"],
    "M": ["#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"],
    "N": ["#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"],
    "O": [".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."],
    "P": ["####.", "#...#", "#...#", "####.", "#....", "#....", "#...."],
    "Q": [".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"],
    "R": ["####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"],
    "S": [".####", "#....", "#....", ".###.", "....#", "....#", "####."],
    "T": ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."],
    "U": ["#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."],
    "V": ["#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."],
    "W": ["#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"],
    "X": ["#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"],
    "Y": ["#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."],
    "Z": ["#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"],
    "0": [".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."],
    "1": ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."],
    "2": [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"],
    "3": [".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."],
    "4": ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."],
    "5": ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."],
    "6": [".###.", "#....", "#....", "####.", "#...#", "#...#", ".###."],
    "7": ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."],
    "8": [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."],
    "9": [".###.", "#...#", "#...#", ".####", "....#", "....#", ".###."],
    ".": [".....", ".....", ".....", ".....", ".....", ".....", "..#.."],
    ",": [".....", ".....", ".....", ".....", ".....", "..#..", ".#..."],
    "-": [".....", ".....", ".....", ".###.", ".....", ".....", "....."],
    "!": ["..#..", "..#..", "..#..", "..#..", "..#..", ".....", "..#.."],
    "?": [".###.", "#...#", "....#", "...#.", "..#..", ".....", "..#.."],
    "'": ["..#..", "..#..", ".....", ".....", ".....", ".....", "....."],
}
CJK_BITMAPS = {
    "和": ["..#.###", "###.#.#", ".#..#.#", "###.###", ".#....."
               , "##..###", ".#..#.#"],
    "春": ["..##...", "#######", "..##...", "#######", ".#...#.", "#.###.#", "..###.."],
}
# fmt: on

# Printable ASCII without a drawn bitmap falls back to this box shape.
BOX = ["#####", "#...#", "#...#", "#...#", "#...#", "#...#", "#####"]


def glyph_from_bitmap(rows: list[str]):
    """One rectangle contour per horizontal run of lit cells."""
    pen = TTGlyphPen(None)
    height = len(rows)
    for r, row in enumerate(rows):
        y_top = (height - r) * CELL
        y_bot = y_top - CELL
        c = 0
        while c < len(row):
            if row[c] != "#":
                c += 1
                continue
            run_start = c
            while c < len(row) and row[c] == "#":
                c += 1
            x0 = run_start * CELL
            x1 = c * CELL
            pen.moveTo((x0, y_bot))
            pen.lineTo((x1, y_bot))
            pen.lineTo((x1, y_top))
            pen.lineTo((x0, y_top))
            pen.closePath()
    return pen.glyph()


def build_font(path: Path, family: str, include_cjk: bool) -> None:
    cmap: dict[int, str] = {}
    glyphs = {".notdef": TTGlyphPen(None).glyph(), "space": TTGlyphPen(None).glyph()}
    widths = {".notdef": (600, 0), "space": (600, 0)}
    cmap[ord(" ")] = "space"

    def add(name: str, rows: list[str], codes: list[int], cells_wide: int) -> None:
        glyphs[name] = glyph_from_bitmap(rows)
        widths[name] = (cells_wide * CELL + 2 * (CELL // 2), CELL // 2)
        for code in codes:
            cmap[code] = name

    for ch, rows in BITMAPS.items():
        codes = [ord(ch)]
        if ch.isalpha():
            codes.append(ord(ch.lower()))
        add(f"u{ord(ch):04X}", rows, codes, 5)
    for code in range(33, 127):
        if code not in cmap:
            add(f"u{code:04X}", BOX, [code], 5)
    if include_cjk:
        for ch, rows in CJK_BITMAPS.items():
            add(f"u{ord(ch):04X}", rows, [ord(ch)], 7)

    order = [".notdef", "space"] + sorted(n for n in glyphs if n not in (".notdef", "space"))
    fb = FontBuilder(UPEM, isTTF=True)
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap(cmap)
    fb.setupGlyf(glyphs)
    fb.setupHorizontalMetrics(widths)
    fb.setupHorizontalHeader(ascent=880, descent=-120)
    fb.setupNameTable({"familyName": family, "styleName": "Regular"})
    fb.setupOS2(sTypoAscender=880, sTypoDescender=-120, usWinAscent=880, usWinDescent=120)
    fb.setupPost()
    # Pin timestamps (seconds since 1904) so rebuilds are byte-identical.
    fb.font["head"].created = 3600000000
    fb.font["head"].modified = 3600000000
    fb.save(str(path))


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "src" / "wordart_forge" / "resources" / "fonts"
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    build_font(out_dir / "forge-sans.ttf", "Forge Sans", include_cjk=False)
    build_font(out_dir / "forge-heritage.ttf", "Forge Heritage", include_cjk=True)
    registry = {
        "forge-sans": {"file": "forge-sans.ttf", "traditional": False},
        "forge-heritage": {"file": "forge-heritage.ttf", "traditional": True},
    }
    with open(out_dir / "fonts.json", "w", encoding="utf-8") as fh:
        json.dump(registry, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out_dir / 'forge-sans.ttf'}")
    print(f"wrote {out_dir / 'forge-heritage.ttf'}")
    print(f"wrote {out_dir / 'fonts.json'}")


if __name__ == "__main__":
    main()
