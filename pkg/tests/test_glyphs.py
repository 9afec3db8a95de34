"""Glyph documents: fonts, rasterization, silhouettes, SVG round trips."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wordart_forge.core import CharacterCountMismatch, MissingGlyph, StyleKind, UnknownFont
from wordart_forge.glyphs import (
    GlyphDocument,
    contour_from_polygon,
    document_from_contours,
    fit_transform,
    flatten_contour,
    from_svg,
    legibility_score,
    load_font_registry,
    load_glyph_document,
    load_silhouette,
    rasterize,
    rect_contour,
    resolve_font_id,
    reverse_contour,
    to_svg,
)


class TestContours:
    def test_rect_contour_shape(self):
        c = rect_contour(0, 0, 2, 1)
        assert c.shape == (4, 6)

    def test_polygon_needs_three_points(self):
        with pytest.raises(ValueError):
            contour_from_polygon([(0, 0), (1, 1)])

    def test_flatten_endpoints_match_anchors(self):
        c = rect_contour(0, 0, 1, 1)
        poly = flatten_contour(c)
        assert np.allclose(poly[0], c[0, 0:2])
        assert np.allclose(poly[-1], c[0, 0:2])

    def test_reverse_contour_involution(self):
        c = contour_from_polygon([(0, 0), (2, 0), (2, 1), (1, 2), (0, 1)])
        assert np.allclose(reverse_contour(reverse_contour(c)), c)

    def test_reverse_contour_same_shape_filled(self):
        c = rect_contour(0, 0, 1, 1)
        a = rasterize(document_from_contours([c]), 32)
        b = rasterize(document_from_contours([reverse_contour(c)]), 32)
        assert (a == b).all()


class TestRasterize:
    def test_filled_square_covers_fit_fraction(self):
        doc = document_from_contours([rect_contour(0, 0, 1, 1)])
        occ = rasterize(doc, 64)
        frac = occ.sum() / occ.size
        # Content fits to 90% of the side, so area sits near 0.81.
        assert abs(frac - 0.81) < 0.02

    def test_hole_is_empty(self):
        doc = document_from_contours(
            [rect_contour(0, 0, 1, 1), reverse_contour(rect_contour(0.25, 0.25, 0.75, 0.75))]
        )
        occ = rasterize(doc, 64)
        assert occ[32, 32] == 0.0
        assert occ[32, 4] == 1.0

    def test_deterministic(self):
        doc = document_from_contours([rect_contour(0, 0, 1, 2)])
        a = rasterize(doc, 64)
        b = rasterize(doc, 64)
        assert (a == b).all()

    def test_read_only(self):
        occ = rasterize(document_from_contours([rect_contour(0, 0, 1, 1)]), 32)
        with pytest.raises(ValueError):
            occ[0, 0] = 1.0

    def test_translation_invariant_under_fit(self):
        a = document_from_contours([rect_contour(0, 0, 1, 1)])
        b = document_from_contours([rect_contour(5, 7, 6, 8)])
        assert (rasterize(a, 32) == rasterize(b, 32)).all()

    @given(st.integers(8, 64))
    @settings(max_examples=15, deadline=None)
    def test_values_binary(self, res):
        doc = document_from_contours([rect_contour(0, 0, 2, 1)])
        occ = rasterize(doc, res)
        assert set(np.unique(occ)) <= {0.0, 1.0}

    def test_cell_width_em(self):
        doc = document_from_contours([rect_contour(0, 0, 1, 1)])
        tr = fit_transform(doc, 64)
        # 1 em spans 90% of 64 cells, so a cell is 1/57.6 em.
        assert tr.cell_width_em == pytest.approx(1.0 / 57.6)


class TestFonts:
    def test_load_renders_text(self):
        doc = load_glyph_document("HI", "forge-sans")
        assert doc.text == "HI"
        assert all(len(c.contours) > 0 for c in doc.characters)
        assert rasterize(doc, 64).sum() > 0

    def test_second_char_offset_right(self):
        doc = load_glyph_document("HH", "forge-sans")
        first = np.concatenate(doc.characters[0].contours)[:, 0]
        second = np.concatenate(doc.characters[1].contours)[:, 0]
        assert second.min() > first.min()

    def test_space_has_no_contours(self):
        doc = load_glyph_document("A B", "forge-sans")
        assert doc.characters[1].contours == ()
        assert doc.characters[1].advance > 0

    def test_lowercase_covered(self):
        doc = load_glyph_document("hi", "forge-sans")
        assert all(len(c.contours) > 0 for c in doc.characters)

    def test_missing_glyph(self):
        with pytest.raises(MissingGlyph):
            load_glyph_document("café", "forge-sans")

    def test_unknown_font(self):
        with pytest.raises(UnknownFont):
            load_glyph_document("A", "no-such-font")

    def test_traditional_style_switches_font(self):
        doc = load_glyph_document("A", "forge-sans", style=StyleKind.TRADITIONAL)
        assert doc.source_font == "forge-heritage"

    def test_traditional_font_keeps_itself(self):
        registry = load_font_registry()
        assert resolve_font_id("forge-heritage", StyleKind.TRADITIONAL, registry) == "forge-heritage"

    def test_heritage_draws_cjk(self):
        doc = load_glyph_document("和", "forge-heritage")
        assert rasterize(doc, 32).sum() > 0


class TestLegibility:
    def test_same_doc_scores_one(self):
        doc = load_glyph_document("O", "forge-sans")
        assert legibility_score(doc, doc) == 1.0

    def test_different_letters_score_below_one(self):
        a = load_glyph_document("O", "forge-sans")
        b = load_glyph_document("I", "forge-sans")
        assert 0.0 < legibility_score(a, b) < 0.6

    def test_character_count_mismatch(self):
        a = load_glyph_document("AB", "forge-sans")
        b = load_glyph_document("A", "forge-sans")
        with pytest.raises(CharacterCountMismatch):
            legibility_score(a, b)


class TestSilhouettes:
    @pytest.mark.parametrize("name", ["disk", "ring", "heart", "star"])
    def test_bundled_silhouettes_load(self, name):
        grid = load_silhouette(name)
        assert grid.shape == (64, 64)
        assert grid.sum() >= 1
        assert set(np.unique(grid)) <= {0.0, 1.0}

    def test_path_load(self, tmp_path):
        p = tmp_path / "tiny.txt"
        row = "1" + "0" * 31
        p.write_text("\n".join([row] * 32) + "\n")
        grid = load_silhouette(str(p))
        assert grid.shape == (32, 32)

    def test_rejects_non_square(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("10\n01\n10\n")
        with pytest.raises(ValueError):
            load_silhouette(str(p))

    def test_rejects_odd_size(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("\n".join(["1" * 20] * 20) + "\n")
        with pytest.raises(ValueError):
            load_silhouette(str(p))

    def test_rejects_empty(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("\n".join(["0" * 32] * 32) + "\n")
        with pytest.raises(ValueError):
            load_silhouette(str(p))

    def test_disk_is_round(self):
        disk = load_silhouette("disk")
        assert disk[32, 32] == 1.0
        assert disk[1, 1] == 0.0


class TestSvg:
    def test_round_trip_exact(self):
        doc = load_glyph_document("AB", "forge-sans")
        again = from_svg(to_svg(doc))
        assert again.text == doc.text
        assert again.units_per_em == doc.units_per_em
        assert again.source_font == doc.source_font
        for a, b in zip(doc.characters, again.characters):
            assert a.advance == b.advance
            assert len(a.contours) == len(b.contours)
            for ca, cb in zip(a.contours, b.contours):
                assert (ca == cb).all()

    def test_svg_uses_absolute_commands_only(self):
        svg = to_svg(load_glyph_document("A", "forge-sans"))
        for path in svg.splitlines():
            if "<path" not in path:
                continue
            body = path.split('d="')[1].split('"')[0]
            commands = [t for t in body.split() if t.isalpha()]
            assert set(commands) <= {"M", "C", "Z"}

    def test_rejects_foreign_svg(self):
        with pytest.raises(ValueError):
            from_svg('<svg xmlns="http://www.w3.org/2000/svg"><rect/></svg>')

    def test_raster_survives_round_trip(self):
        doc = load_glyph_document("GO", "forge-sans")
        again = from_svg(to_svg(doc))
        assert (rasterize(doc, 64) == rasterize(again, 64)).all()


class TestDocumentValidation:
    def test_contour_shape_checked(self):
        with pytest.raises(ValueError):
            document_from_contours([np.zeros((3, 5))])

    def test_points_collects_everything(self):
        doc = document_from_contours([rect_contour(0, 0, 1, 1)])
        assert doc.points().shape == (12, 2)

    def test_empty_document_points(self):
        doc = GlyphDocument(characters=())
        assert doc.points().shape == (0, 2)
