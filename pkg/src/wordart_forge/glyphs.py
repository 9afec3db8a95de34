"""Glyph documents: font outlines, rasterization, silhouettes, SVG exchange.

A glyph document is a list of characters, each a set of closed cubic
contours in em units (y up, one em = 1.0).  Contour arrays have shape
(n, 6): row i holds the anchor A_i and the two control points of the edge
leaving it, so edge i runs A_i -> C1_i -> C2_i -> A_{i+1 mod n}.  Contours
are closed by construction; there is no explicit close record.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Optional, Sequence

import numpy as np
from fontTools.pens.recordingPen import RecordingPen
from fontTools.ttLib import TTFont

from .core import (
    CharacterCountMismatch,
    MissingGlyph,
    ResolutionMismatch,
    StyleKind,
    UnknownFont,
)

SILHOUETTE_SIZES = (32, 64, 128)

#: Fraction of the raster the fitted content spans along its longer axis.
FIT_FRACTION = 0.9

#: Line segments per cubic edge when flattening for rasterization.
FLATTEN_SEGMENTS = 8


@dataclass(frozen=True)
class CharacterOutline:
    """One positioned character: closed contours plus its advance width."""

    codepoint: int
    contours: tuple[np.ndarray, ...]
    advance: float

    def __post_init__(self) -> None:
        frozen = []
        for contour in self.contours:
            arr = np.asarray(contour, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 6 or arr.shape[0] < 1:
                raise ValueError("contour must have shape (n, 6) with n >= 1")
            arr = arr.copy()
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "contours", tuple(frozen))
        if self.advance < 0:
            raise ValueError("advance must be non-negative")


@dataclass(frozen=True)
class GlyphDocument:
    """Characters laid out left to right, in em units."""

    characters: tuple[CharacterOutline, ...]
    units_per_em: int = 1000
    source_font: str = "synthetic"

    def __post_init__(self) -> None:
        object.__setattr__(self, "characters", tuple(self.characters))
        if self.units_per_em < 1:
            raise ValueError("units_per_em must be positive")

    @property
    def text(self) -> str:
        return "".join(chr(c.codepoint) for c in self.characters)

    def all_contours(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for char in self.characters:
            out.extend(char.contours)
        return out

    def points(self) -> np.ndarray:
        """Every anchor and control point as an (N, 2) array."""
        chunks = []
        for contour in self.all_contours():
            chunks.append(contour[:, 0:2])
            chunks.append(contour[:, 2:4])
            chunks.append(contour[:, 4:6])
        if not chunks:
            return np.zeros((0, 2))
        return np.concatenate(chunks, axis=0)


def rect_contour(x0: float, y0: float, x1: float, y1: float) -> np.ndarray:
    """Axis-aligned rectangle as one closed contour (counterclockwise)."""
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    return contour_from_polygon(corners)


def contour_from_polygon(points: Sequence[tuple[float, float]]) -> np.ndarray:
    """Closed polygon as cubic edges with control points at the thirds."""
    n = len(points)
    if n < 3:
        raise ValueError("polygon needs at least three points")
    rows = np.zeros((n, 6))
    for i, (x, y) in enumerate(points):
        nx, ny = points[(i + 1) % n]
        rows[i] = (x, y, x + (nx - x) / 3.0, y + (ny - y) / 3.0, x + 2 * (nx - x) / 3.0, y + 2 * (ny - y) / 3.0)
    return rows


def reverse_contour(contour: np.ndarray) -> np.ndarray:
    """Same geometry, opposite winding (turns a solid into a hole)."""
    arr = np.asarray(contour, dtype=np.float64)
    n = arr.shape[0]
    rows = np.zeros_like(arr)
    for i in range(n):
        j = (n - i) % n
        nxt = (n - i - 1) % n
        rows[i, 0:2] = arr[j, 0:2]
        rows[i, 2:4] = arr[nxt, 4:6]
        rows[i, 4:6] = arr[nxt, 2:4]
    return rows


def document_from_contours(
    contours: Iterable[np.ndarray], codepoint: int = ord("?"), advance: float = 1.0
) -> GlyphDocument:
    """Wrap bare contours into a one-character document (test scaffolding)."""
    char = CharacterOutline(codepoint=codepoint, contours=tuple(contours), advance=advance)
    return GlyphDocument(characters=(char,), units_per_em=1000, source_font="synthetic")


# -- font loading ------------------------------------------------------------

def _fonts_root():
    return resources.files("wordart_forge") / "resources" / "fonts"


def load_font_registry(registry_path: Optional[str] = None) -> dict:
    """Font registry: id -> {file, traditional}."""
    if registry_path is None:
        text = (_fonts_root() / "fonts.json").read_text(encoding="utf-8")
    else:
        with open(registry_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return json.loads(text)


def resolve_font_id(font_id: str, style: StyleKind, registry: dict) -> str:
    """Pick the effective font: Traditional style insists on a flagged font."""
    if font_id not in registry:
        raise UnknownFont(f"font id {font_id!r} is not registered")
    if style is StyleKind.TRADITIONAL and not registry[font_id].get("traditional", False):
        flagged = sorted(fid for fid, meta in registry.items() if meta.get("traditional"))
        if not flagged:
            raise UnknownFont("no traditional font is registered")
        return flagged[0]
    return font_id


def _segments_from_pen(records, upem: float) -> list[tuple]:
    """Turn pen records into cubic segments (P0, C1, C2, P3) in em units.

    Lines are degree-elevated exactly; TrueType quadratic runs are expanded
    with their implied on-curve midpoints and then elevated.
    """
    segments: list[tuple] = []
    current = None
    start = None

    def em(pt):
        return (pt[0] / upem, pt[1] / upem)

    def add_line(p0, p1):
        c1 = (p0[0] + (p1[0] - p0[0]) / 3.0, p0[1] + (p1[1] - p0[1]) / 3.0)
        c2 = (p0[0] + 2 * (p1[0] - p0[0]) / 3.0, p0[1] + 2 * (p1[1] - p0[1]) / 3.0)
        segments.append((p0, c1, c2, p1))

    def add_quad(p0, q, p1):
        c1 = (p0[0] + 2.0 / 3.0 * (q[0] - p0[0]), p0[1] + 2.0 / 3.0 * (q[1] - p0[1]))
        c2 = (p1[0] + 2.0 / 3.0 * (q[0] - p1[0]), p1[1] + 2.0 / 3.0 * (q[1] - p1[1]))
        segments.append((p0, c1, c2, p1))

    contours: list[list[tuple]] = []
    for op, args in records:
        if op == "moveTo":
            current = start = em(args[0])
            segments = []
        elif op == "lineTo":
            pt = em(args[0])
            add_line(current, pt)
            current = pt
        elif op == "curveTo":
            c1, c2, pt = (em(a) for a in args)
            segments.append((current, c1, c2, pt))
            current = pt
        elif op == "qCurveTo":
            pts = [em(a) if a is not None else None for a in args]
            if pts[-1] is None:
                # All-off-curve contour: the implied end is the midpoint
                # back around to the first off-curve; close via start.
                pts[-1] = start
            offs = pts[:-1]
            end = pts[-1]
            prev = current
            for k, q in enumerate(offs):
                if k + 1 < len(offs):
                    nxt = offs[k + 1]
                    mid = ((q[0] + nxt[0]) / 2.0, (q[1] + nxt[1]) / 2.0)
                else:
                    mid = end
                add_quad(prev, q, mid)
                prev = mid
            if not offs:
                add_line(current, end)
            current = end
        elif op in ("closePath", "endPath"):
            if current is not None and start is not None and current != start:
                add_line(current, start)
            if segments:
                contours.append(segments)
            segments = []
            current = start = None
    return contours


def _contour_from_segments(segments: list[tuple]) -> np.ndarray:
    rows = np.zeros((len(segments), 6))
    for i, (p0, c1, c2, _p3) in enumerate(segments):
        rows[i] = (p0[0], p0[1], c1[0], c1[1], c2[0], c2[1])
    return rows


_font_cache: dict[str, TTFont] = {}


def load_glyph_document(
    text: str,
    font_id: str = "forge-sans",
    style: StyleKind = StyleKind.NORMAL,
    registry_path: Optional[str] = None,
) -> GlyphDocument:
    """Lay out ``text`` in the registered font, outlines in em units.

    Raises UnknownFont for unregistered ids and MissingGlyph when the font
    cannot draw one of the characters.
    """
    if not text:
        raise ValueError("text must be non-empty")
    registry = load_font_registry(registry_path)
    effective = resolve_font_id(font_id, style, registry)
    file_name = registry[effective]["file"]
    cache_key = f"{registry_path or 'bundled'}::{effective}"
    font = _font_cache.get(cache_key)
    if font is None:
        if registry_path is None:
            with resources.as_file(_fonts_root() / file_name) as path:
                font = TTFont(str(path))
        else:
            import os

            font = TTFont(os.path.join(os.path.dirname(registry_path), file_name))
        _font_cache[cache_key] = font
    upem = font["head"].unitsPerEm
    cmap = font.getBestCmap()
    glyph_set = font.getGlyphSet()
    characters = []
    x_offset = 0.0
    for ch in text:
        code = ord(ch)
        if code not in cmap:
            raise MissingGlyph(f"font {effective!r} has no glyph for {ch!r} (U+{code:04X})")
        name = cmap[code]
        pen = RecordingPen()
        glyph_set[name].draw(pen)
        advance = glyph_set[name].width / upem
        contours = []
        for segments in _segments_from_pen(pen.value, upem):
            arr = _contour_from_segments(segments)
            arr[:, 0::2] += x_offset
            contours.append(arr)
        characters.append(CharacterOutline(codepoint=code, contours=tuple(contours), advance=advance))
        x_offset += advance
    return GlyphDocument(characters=tuple(characters), units_per_em=upem, source_font=effective)


# -- rasterization --------------------------------------------------------------

@dataclass(frozen=True)
class FitTransform:
    """Em -> raster mapping: content centered, longer side at FIT_FRACTION."""

    scale: float
    center_x: float
    center_y: float
    resolution: int

    def to_raster(self, points: np.ndarray) -> np.ndarray:
        """Map (N, 2) em points to raster (x, y); raster y grows downward."""
        out = np.empty_like(points, dtype=np.float64)
        half = self.resolution / 2.0
        out[:, 0] = (points[:, 0] - self.center_x) * self.scale + half
        out[:, 1] = (self.center_y - points[:, 1]) * self.scale + half
        return out

    @property
    def cell_width_em(self) -> float:
        return 1.0 / self.scale


def flatten_contour(contour: np.ndarray, segments: int = FLATTEN_SEGMENTS) -> np.ndarray:
    """Flatten a closed (n, 6) contour into an (n*segments + 1, 2) polyline."""
    n = contour.shape[0]
    a = contour[:, 0:2]
    c1 = contour[:, 2:4]
    c2 = contour[:, 4:6]
    a_next = np.roll(a, -1, axis=0)
    t = np.linspace(0.0, 1.0, segments + 1)[1:]
    mt = 1.0 - t
    # (n, segments, 2) points along each edge, excluding the edge start.
    pts = (
        (mt**3)[None, :, None] * a[:, None, :]
        + (3 * mt**2 * t)[None, :, None] * c1[:, None, :]
        + (3 * mt * t**2)[None, :, None] * c2[:, None, :]
        + (t**3)[None, :, None] * a_next[:, None, :]
    )
    poly = np.concatenate([a[:, None, :], pts], axis=1).reshape(-1, 2)
    return np.concatenate([poly, poly[:1]], axis=0)


def _document_polylines(doc: GlyphDocument) -> list[np.ndarray]:
    return [flatten_contour(c) for c in doc.all_contours()]


def fit_transform(doc: GlyphDocument, resolution: int) -> FitTransform:
    """Fit the document's drawn extent into the raster at FIT_FRACTION."""
    if resolution < 1:
        raise ValueError("resolution must be positive")
    polylines = _document_polylines(doc)
    if not polylines:
        return FitTransform(scale=1.0, center_x=0.0, center_y=0.0, resolution=resolution)
    pts = np.concatenate(polylines, axis=0)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = max(hi[0] - lo[0], hi[1] - lo[1], 1e-9)
    scale = FIT_FRACTION * resolution / span
    center = (lo + hi) / 2.0
    return FitTransform(scale=scale, center_x=center[0], center_y=center[1], resolution=resolution)


def polyline_winding(polyline: np.ndarray, transform: FitTransform) -> np.ndarray:
    """Signed winding contribution of one closed polyline at every cell center."""
    res = transform.resolution
    pts = transform.to_raster(polyline)
    x1, y1 = pts[:-1, 0], pts[:-1, 1]
    x2, y2 = pts[1:, 0], pts[1:, 1]
    centers = np.arange(res) + 0.5
    cx = centers[None, None, :]
    cy = centers[None, :, None]
    sy1 = y1[:, None, None]
    sy2 = y2[:, None, None]
    sx1 = x1[:, None, None]
    sx2 = x2[:, None, None]
    cross = (sx2 - sx1) * (cy - sy1) - (sy2 - sy1) * (cx - sx1)
    up = (sy1 <= cy) & (sy2 > cy) & (cross > 0)
    down = (sy2 <= cy) & (sy1 > cy) & (cross < 0)
    winding = up.astype(np.int16) - down.astype(np.int16)
    return winding.sum(axis=0)


def rasterize_with_transform(doc: GlyphDocument, transform: FitTransform) -> np.ndarray:
    """Occupancy raster under a caller-supplied frame (nonzero winding rule)."""
    res = transform.resolution
    total = np.zeros((res, res), dtype=np.int16)
    for polyline in _document_polylines(doc):
        total += polyline_winding(polyline, transform)
    occ = (total != 0).astype(np.float64)
    occ.setflags(write=False)
    return occ


def rasterize(doc: GlyphDocument, resolution: int) -> np.ndarray:
    """Occupancy raster with the document auto-fitted to the grid."""
    return rasterize_with_transform(doc, fit_transform(doc, resolution))


def legibility_score(doc_a: GlyphDocument, doc_b: GlyphDocument, resolution: int = 64) -> float:
    """Shape agreement as raster IoU; both docs fitted independently.

    Raises CharacterCountMismatch when the texts have different lengths.
    """
    if len(doc_a.characters) != len(doc_b.characters):
        raise CharacterCountMismatch(
            f"{len(doc_a.characters)} characters vs {len(doc_b.characters)}"
        )
    ra = rasterize(doc_a, resolution)
    rb = rasterize(doc_b, resolution)
    inter = float(np.logical_and(ra > 0, rb > 0).sum())
    union = float(np.logical_or(ra > 0, rb > 0).sum())
    if union == 0.0:
        return 1.0
    return inter / union


# -- silhouettes ---------------------------------------------------------------

def load_silhouette(name_or_path: str) -> np.ndarray:
    """Load a 0/1 silhouette grid, bundled by bare name or from a path.

    The grid must be square with side in SILHOUETTE_SIZES and contain at
    least one occupied cell.
    """
    if "/" in name_or_path or name_or_path.endswith(".txt"):
        with open(name_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        ref = resources.files("wordart_forge") / "resources" / "silhouettes" / f"{name_or_path}.txt"
        text = ref.read_text(encoding="utf-8")
    rows = [line for line in text.splitlines() if line.strip()]
    grid = []
    for line in rows:
        cells = line.split() if " " in line else list(line.strip())
        grid.append([int(c) for c in cells])
    arr = np.array(grid, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"silhouette must be square, got {arr.shape}")
    if arr.shape[0] not in SILHOUETTE_SIZES:
        raise ValueError(f"silhouette side must be one of {SILHOUETTE_SIZES}")
    if not np.isin(arr, (0.0, 1.0)).all():
        raise ValueError("silhouette cells must be 0 or 1")
    if arr.sum() < 1:
        raise ValueError("silhouette must have at least one occupied cell")
    arr.setflags(write=False)
    return arr


# -- SVG exchange ---------------------------------------------------------------

def to_svg(doc: GlyphDocument) -> str:
    """Serialize to SVG: one group per character, absolute M/C/Z paths only."""
    pts = doc.points()
    if pts.shape[0]:
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
    else:
        lo = np.zeros(2)
        hi = np.ones(2)
    pad = 0.05
    view = (lo[0] - pad, -(hi[1] + pad), (hi[0] - lo[0]) + 2 * pad, (hi[1] - lo[1]) + 2 * pad)
    lines = [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{view[0]} {view[1]} {view[2]} {view[3]}" '
        f'data-upem="{doc.units_per_em}" data-font="{doc.source_font}">'
    ]
    def num(value) -> str:
        return repr(float(value))

    for char in doc.characters:
        lines.append(f'  <g data-codepoint="{char.codepoint}" data-advance="{num(char.advance)}">')
        for contour in char.contours:
            parts = [f"M {num(contour[0, 0])} {num(-contour[0, 1])}"]
            n = contour.shape[0]
            for i in range(n):
                nx, ny = contour[(i + 1) % n, 0:2]
                c1x, c1y, c2x, c2y = contour[i, 2:6]
                parts.append(
                    f"C {num(c1x)} {num(-c1y)} {num(c2x)} {num(-c2y)} {num(nx)} {num(-ny)}"
                )
            parts.append("Z")
            lines.append(f'    <path d="{" ".join(parts)}"/>')
        lines.append("  </g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


_PATH_RE = re.compile(r'<path d="([^"]+)"/>')
_GROUP_RE = re.compile(r'<g data-codepoint="(\d+)" data-advance="([^"]+)">(.*?)</g>', re.S)
_SVG_RE = re.compile(r'data-upem="(\d+)" data-font="([^"]*)"')


def from_svg(text: str) -> GlyphDocument:
    """Rebuild a document from the subset of SVG written by :func:`to_svg`."""
    meta = _SVG_RE.search(text)
    if not meta:
        raise ValueError("not a glyph document SVG (missing data-upem)")
    upem = int(meta.group(1))
    font = meta.group(2)
    characters = []
    for group in _GROUP_RE.finditer(text):
        codepoint = int(group.group(1))
        advance = float(group.group(2))
        contours = []
        for path in _PATH_RE.finditer(group.group(3)):
            tokens = path.group(1).split()
            if tokens[0] != "M" or tokens[-1] != "Z":
                raise ValueError("path must be 'M ... C ... Z'")
            anchors = [(float(tokens[1]), -float(tokens[2]))]
            controls = []
            i = 3
            while i < len(tokens) - 1:
                if tokens[i] != "C":
                    raise ValueError(f"expected C command, got {tokens[i]!r}")
                c1 = (float(tokens[i + 1]), -float(tokens[i + 2]))
                c2 = (float(tokens[i + 3]), -float(tokens[i + 4]))
                end = (float(tokens[i + 5]), -float(tokens[i + 6]))
                controls.append((c1, c2))
                anchors.append(end)
                i += 7
            if len(anchors) < 2 or anchors[0] != anchors[-1]:
                raise ValueError("path does not return to its start")
            anchors = anchors[:-1]
            rows = np.zeros((len(anchors), 6))
            for k, (ax, ay) in enumerate(anchors):
                (c1x, c1y), (c2x, c2y) = controls[k]
                rows[k] = (ax, ay, c1x, c1y, c2x, c2y)
            contours.append(rows)
        characters.append(
            CharacterOutline(codepoint=codepoint, contours=tuple(contours), advance=advance)
        )
    return GlyphDocument(characters=tuple(characters), units_per_em=upem, source_font=font)
