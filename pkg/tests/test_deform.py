"""Deformation optimizer: loss definition, convergence, freeze, monotonicity."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wordart_forge.core import ResolutionMismatch
from wordart_forge.deform import (
    mean_sq_displacement,
    optimize,
    semantic_transform,
    shape_loss,
)
from wordart_forge.glyphs import (
    contour_from_polygon,
    document_from_contours,
    fit_transform,
    load_silhouette,
    rasterize,
    rasterize_with_transform,
    rect_contour,
    reverse_contour,
)


def square_doc():
    return document_from_contours([rect_contour(0, 0, 1, 1)])


def ring_doc():
    return document_from_contours(
        [rect_contour(0, 0, 1, 1), reverse_contour(rect_contour(0.25, 0.25, 0.75, 0.75))]
    )


class TestShapeLoss:
    def test_zero_on_own_raster(self):
        doc = square_doc()
        assert shape_loss(doc, doc, rasterize(doc, 64), lam=1.0) == 0.0

    def test_occupancy_term_is_mse(self):
        doc = square_doc()
        target = np.zeros((64, 64))
        occ = rasterize(doc, 64)
        assert shape_loss(doc, doc, target, lam=0.0) == pytest.approx(float((occ**2).mean()))

    def test_displacement_term_scales_with_lam(self):
        doc = square_doc()
        moved = document_from_contours([rect_contour(0.1, 0, 1.1, 1)])
        target = rasterize(doc, 64)
        base = shape_loss(moved, doc, target, lam=0.0)
        heavier = shape_loss(moved, doc, target, lam=2.0)
        disp = mean_sq_displacement(moved, doc)
        assert disp == pytest.approx(0.01)
        assert heavier - base == pytest.approx(2.0 * disp)

    def test_rejects_non_square_target(self):
        doc = square_doc()
        with pytest.raises(ResolutionMismatch):
            shape_loss(doc, doc, np.zeros((32, 64)), lam=0.0)

    def test_rejects_transform_grid_mismatch(self):
        doc = square_doc()
        tr = fit_transform(doc, 32)
        with pytest.raises(ResolutionMismatch):
            shape_loss(doc, doc, np.zeros((64, 64)), lam=0.0, transform=tr)

    def test_displacement_needs_matching_structure(self):
        with pytest.raises(ResolutionMismatch):
            mean_sq_displacement(square_doc(), ring_doc())


class TestOptimize:
    def test_identity_target_returns_start(self):
        doc = square_doc()
        result = optimize(doc, rasterize(doc, 64), lam=0.01, max_iterations=50, seed=3)
        assert result.loss < 1e-9
        assert np.abs(result.document.points() - doc.points()).max() < 1e-6

    def test_block_ring_halves_disk_loss(self):
        doc = ring_doc()
        disk = load_silhouette("disk")
        tr = fit_transform(doc, 64)
        start = float(((rasterize_with_transform(doc, tr) - disk) ** 2).mean())
        result = optimize(doc, disk, lam=1e-4, max_iterations=200, seed=0)
        end = float(((rasterize_with_transform(result.document, tr) - disk) ** 2).mean())
        assert end <= 0.5 * start

    def test_huge_lam_freezes_points(self):
        doc = ring_doc()
        result = optimize(doc, load_silhouette("disk"), lam=1e9, max_iterations=200, seed=0)
        assert np.abs(result.document.points() - doc.points()).max() < 1e-6

    def test_accepted_losses_non_increasing(self):
        doc = ring_doc()
        result = optimize(doc, load_silhouette("star"), lam=1e-3, max_iterations=40, seed=5)
        diffs = np.diff(result.losses)
        assert (diffs <= 0).all()

    def test_seed_changes_only_order_not_validity(self):
        doc = square_doc()
        target = load_silhouette("heart")
        a = optimize(doc, target, lam=1e-3, max_iterations=10, seed=1)
        b = optimize(doc, target, lam=1e-3, max_iterations=10, seed=2)
        assert (np.diff(a.losses) <= 0).all()
        assert (np.diff(b.losses) <= 0).all()

    def test_deterministic_per_seed(self):
        doc = ring_doc()
        target = load_silhouette("disk")
        a = optimize(doc, target, lam=1e-3, max_iterations=15, seed=9)
        b = optimize(doc, target, lam=1e-3, max_iterations=15, seed=9)
        assert a.losses == b.losses
        assert (a.document.points() == b.document.points()).all()

    def test_respects_iteration_budget(self):
        doc = ring_doc()
        result = optimize(doc, load_silhouette("disk"), lam=1e-4, max_iterations=3, seed=0)
        assert result.iterations <= 3

    def test_best_iterate_returned(self):
        doc = ring_doc()
        result = optimize(doc, load_silhouette("disk"), lam=1e-4, max_iterations=60, seed=0)
        assert result.loss == min(result.losses)

    def test_rejects_bad_args(self):
        doc = square_doc()
        target = rasterize(doc, 32)
        with pytest.raises(ValueError):
            optimize(doc, target, lam=-1.0)
        with pytest.raises(ValueError):
            optimize(doc, target, lam=0.1, max_iterations=0)

    @given(st.integers(0, 10_000))
    @settings(max_examples=8, deadline=None)
    def test_random_instances_monotone(self, seed):
        rng = np.random.default_rng(seed)
        pts = [(float(x), float(y)) for x, y in rng.uniform(0.0, 1.0, (5, 2))]
        hull = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), pts[0]]
        doc = document_from_contours([contour_from_polygon(hull)])
        target = load_silhouette("ring" if seed % 2 else "heart")
        result = optimize(doc, target, lam=float(rng.uniform(1e-4, 1e-1)), max_iterations=8, seed=seed)
        assert (np.diff(result.losses) <= 0).all()


class TestSemanticTransform:
    def test_zero_strength_is_identity(self):
        doc = ring_doc()
        result = semantic_transform(doc, load_silhouette("disk"), deform_strength=0.0)
        assert result.document is doc
        assert result.iterations == 0

    def test_full_strength_moves_shape(self):
        doc = ring_doc()
        disk = load_silhouette("disk")
        tr = fit_transform(doc, 64)
        start = float(((rasterize_with_transform(doc, tr) - disk) ** 2).mean())
        result = semantic_transform(doc, disk, deform_strength=0.9, max_iterations=60, seed=0)
        end = float(((rasterize_with_transform(result.document, tr) - disk) ** 2).mean())
        assert end < start

    def test_strength_bounds(self):
        with pytest.raises(ValueError):
            semantic_transform(square_doc(), load_silhouette("disk"), deform_strength=1.5)
