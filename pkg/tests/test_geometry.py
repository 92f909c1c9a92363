"""Distance-field primitives, R-functions, and their jets."""

import numpy as np
import pytest

from helmtrial.geometry import (EPS_FLOOR, CircleAdf, EllipseAdf,
                                EquivalentAdf, NonDifferentiablePointError,
                                Point2, RConj, RDisj, Segment, SegmentAdf,
                                circle_adf, ellipse_adf, equivalent_adf,
                                eval_jet, eval_jet_batch, max_min_boolean,
                                r_conjunction, r_disjunction, r_smooth,
                                segment_adf, signed_distance, trimming)

from conftest import assert_jet_matches_fd

HSEG = Segment(Point2(-1.0, 0.0), Point2(1.0, 0.0))
SQRT125 = np.sqrt(1.25)


def unit_rect_segments():
    corners = [(1, -1), (1, 1), (-1, 1), (-1, -1)]
    return [Segment(Point2(*corners[i]), Point2(*corners[(i + 1) % 4]))
            for i in range(4)]


class TestPrimitives:
    def test_signed_distance(self):
        assert signed_distance(0, 0, HSEG) == 0.0
        assert signed_distance(0, 1, HSEG) == pytest.approx(-1.0)
        assert signed_distance(0, -1, HSEG) == pytest.approx(1.0)

    def test_trimming(self):
        assert trimming(0, 0, HSEG) == pytest.approx(0.5)
        assert trimming(1, 0, HSEG) == pytest.approx(0.0, abs=1e-15)
        assert trimming(0, 1, HSEG) == pytest.approx(0.0, abs=1e-15)

    def test_segment_adf(self):
        assert segment_adf(0, 0, HSEG) == 0.0
        assert segment_adf(0, 1, HSEG) == pytest.approx(SQRT125)
        vseg = Segment(Point2(1, -1), Point2(1, 1))
        assert segment_adf(0, 0, vseg) == pytest.approx(SQRT125)

    def test_segment_validation(self):
        with pytest.raises(ValueError):
            Segment(Point2(0, 0), Point2(0, 0))

    def test_circle_adf(self):
        center = Point2(0, 0)
        assert circle_adf(0, 0, center, 1.0) == pytest.approx(0.5)
        assert circle_adf(1, 0, center, 1.0) == pytest.approx(0.0, abs=1e-15)
        assert circle_adf(2, 0, center, 1.0) == pytest.approx(-1.5)

    def test_ellipse_adf(self):
        assert ellipse_adf(0, 0, 1.0, 0.5) == pytest.approx(0.5)
        assert ellipse_adf(1, 0, 1.0, 0.5) == pytest.approx(0.0, abs=1e-15)
        assert ellipse_adf(0.5, 0.25, 1.0, 0.5) == pytest.approx(0.25)
        with pytest.raises(ValueError):
            ellipse_adf(0, 0, 0.5, 1.0)


class TestRFunctions:
    def test_disjunction_conjunction(self):
        assert r_disjunction(3, 4, 0.0) == pytest.approx(2.0)
        assert r_conjunction(3, 4, 0.0) == pytest.approx(12.0)
        assert r_conjunction(0, 0, 0.0) == 0.0
        assert r_disjunction(0, 0, 0.0) == 0.0

    @pytest.mark.parametrize("beta", [-1.0, 1.0, 2.5])
    def test_beta_rejected(self, beta):
        with pytest.raises(ValueError):
            r_conjunction(1, 2, beta)

    def test_r_smooth(self):
        assert r_smooth("conj", 3, 4, 0.0, 0) == pytest.approx(12.0)
        assert r_smooth("disj", 3, 4, 0.0, 2) == pytest.approx(50.0)
        assert r_smooth("conj", 0, 0, 0.0, 3) == 0.0
        with pytest.raises(ValueError):
            r_smooth("conj", 1, 1, 0.0, -1)

    def test_max_min(self):
        assert max_min_boolean(1, 2) == (2, 1)
        assert max_min_boolean(-3, 5) == (5, -3)
        assert max_min_boolean(7, 7) == (7, 7)

    def test_max_min_exact_on_random_pairs(self, rng):
        # integer-valued doubles: every step of the +/-|.| form is exact
        a = rng.integers(-1_000_000, 1_000_000, 100_000).astype(float)
        b = rng.integers(-1_000_000, 1_000_000, 100_000).astype(float)
        mx, mn = max_min_boolean(a, b)
        assert np.array_equal(mx, np.maximum(a, b))
        assert np.array_equal(mn, np.minimum(a, b))
        # continuous pairs: exact up to the rounding of the composite, whose
        # scale is set by |a| + |b|
        a = rng.uniform(-100, 100, 100_000)
        b = rng.uniform(-100, 100, 100_000)
        mx, mn = max_min_boolean(a, b)
        bound = 2 * np.spacing(np.abs(a) + np.abs(b))
        assert np.all(np.abs(mx - np.maximum(a, b)) <= bound)
        assert np.all(np.abs(mn - np.minimum(a, b)) <= bound)

    def test_beta_limit_matches_max(self, rng):
        # separated positive pairs: agreement is O(1 - beta)
        a = rng.uniform(0.1, 10, 2000)
        b = rng.uniform(0.1, 10, 2000)
        sep = np.abs(a - b) >= 0.1 * np.maximum(a, b)
        a, b = a[sep], b[sep]
        conj = r_conjunction(a, b, 0.999999)
        rel = np.abs(conj - np.maximum(a, b)) / np.maximum(a, b)
        assert rel.max() <= 1e-4
        # equal pairs are limited by the sqrt(2(1-beta)) envelope instead
        beta = 0.999999
        v = rng.uniform(0.1, 10, 100)
        rel_eq = np.abs(r_conjunction(v, v, beta) - v) / v
        envelope = (2.0 + np.sqrt(2.0 * (1 - beta))) / (1 + beta) - 1.0
        assert rel_eq.max() <= envelope * (1 + 1e-9)


class TestEquivalentField:
    def test_rect_center_value(self):
        phi = equivalent_adf([SQRT125] * 4, s=1)
        assert phi == pytest.approx(SQRT125 / 4, abs=1e-9)

    def test_zero_input_gives_zero(self):
        assert equivalent_adf([0.0, 1.0, 2.0, 3.0], s=1) == 0.0
        assert equivalent_adf([EPS_FLOOR / 2, 1.0], s=2) == 0.0

    def test_single_piece_collapses(self, rng):
        phis = rng.uniform(0.1, 3.0, 50)
        np.testing.assert_allclose(equivalent_adf([phis], s=1), phis)

    @pytest.mark.parametrize("s", [1, 2, 4])
    def test_dominated_by_min(self, rng, s):
        phis = rng.uniform(1e-6, 5.0, size=(4, 2000))
        phi_e = equivalent_adf(list(phis), s=s)
        assert np.all(phi_e <= phis.min(axis=0) + 1e-15)


def boundary_samples(rng, n=1000):
    """(expr, on-boundary points) pairs for every primitive."""
    t = rng.uniform(0.0, 1.0, n)
    theta = rng.uniform(0, 2 * np.pi, n)
    seg_pts = np.stack([-1 + 2 * t, np.zeros(n)], axis=1)
    circ_pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    ell_pts = np.stack([np.cos(theta), 0.5 * np.sin(theta)], axis=1)
    segs = unit_rect_segments()
    side = rng.integers(0, 4, n)
    rect_pts = np.empty((n, 2))
    for i in range(4):
        m = side == i
        p1 = np.array(segs[i].p1)
        p2 = np.array(segs[i].p2)
        rect_pts[m] = p1 + t[m, None] * (p2 - p1)
    return [
        (SegmentAdf(HSEG), seg_pts),
        (CircleAdf(Point2(0, 0), 1.0), circ_pts),
        (EllipseAdf(1.0, 0.5), ell_pts),
        (EquivalentAdf(tuple(SegmentAdf(s) for s in segs), s=1), rect_pts),
    ]


class TestInvariants:
    def test_boundary_vanishing(self, rng):
        for expr, pts in boundary_samples(rng):
            vals = np.abs(expr.value(pts[:, 0], pts[:, 1]))
            assert vals.max() <= 1e-10, type(expr).__name__

    def test_interior_positivity(self, rng):
        n = 10_000
        margin = 1e-3
        segs = unit_rect_segments()
        eq = EquivalentAdf(tuple(SegmentAdf(s) for s in segs), s=1)
        x = rng.uniform(-1 + margin, 1 - margin, n)
        y = rng.uniform(-1 + margin, 1 - margin, n)
        assert np.all(eq.value(x, y) > 0)
        r = (1 - margin) * np.sqrt(rng.uniform(0, 1, n))
        th = rng.uniform(0, 2 * np.pi, n)
        assert np.all(CircleAdf(Point2(0, 0), 1.0).value(r * np.cos(th), r * np.sin(th)) > 0)
        scale = rng.uniform(0, 1, n) ** 0.5 * (1 - margin / 0.5)
        ex, ey = scale * np.cos(th), 0.5 * scale * np.sin(th)
        assert np.all(EllipseAdf(1.0, 0.5).value(ex, ey) > 0)


class TestJets:
    def test_circle_jet_at_center(self):
        j = eval_jet(CircleAdf(Point2(0, 0), 1.0), (0.0, 0.0))
        assert (j.v, j.dx, j.dy) == (0.5, 0.0, 0.0)
        assert (j.dxx, j.dyy) == (-1.0, -1.0)

    def test_ellipse_jet_at_origin(self):
        j = eval_jet(EllipseAdf(1.0, 0.5), (0.0, 0.0))
        assert j.dxx == pytest.approx(-1.0)
        assert j.dyy == pytest.approx(-4.0)

    def test_jet_value_matches_plain_evaluation(self, rng):
        segs = unit_rect_segments()
        exprs = [
            SegmentAdf(HSEG),
            CircleAdf(Point2(0, 0), 1.0),
            EllipseAdf(1.0, 0.5),
            EquivalentAdf(tuple(SegmentAdf(s) for s in segs), s=1),
            RConj(SegmentAdf(segs[0]), SegmentAdf(segs[1]), beta=0.0),
            RDisj(CircleAdf(Point2(0, 0), 1.0), EllipseAdf(1.0, 0.5), beta=0.2, s=2),
        ]
        x = rng.uniform(-0.8, 0.8, 20)
        y = rng.uniform(-0.4, 0.4, 20)
        for expr in exprs:
            jet = eval_jet_batch(expr, x, y)
            np.testing.assert_allclose(jet.v, expr.value(x, y), rtol=1e-12, atol=1e-14)

    def test_jets_match_finite_differences(self, rng):
        segs = unit_rect_segments()
        exprs = [
            SegmentAdf(segs[0]),
            CircleAdf(Point2(0.1, -0.2), 1.5),
            EllipseAdf(1.0, 0.5),
            EquivalentAdf(tuple(SegmentAdf(s) for s in segs), s=1),
            EquivalentAdf(tuple(SegmentAdf(s) for s in segs), s=2),
            RConj(SegmentAdf(segs[0]), SegmentAdf(segs[2]), beta=0.3),
            RDisj(SegmentAdf(segs[1]), SegmentAdf(segs[3]), beta=0.0, s=2),
        ]
        # non-singular: keep a safe margin from boundaries and corners
        x = rng.uniform(-0.75, 0.75, 200)
        y = rng.uniform(-0.35, 0.35, 200)
        for expr in exprs:
            jet = eval_jet_batch(expr, x, y)
            assert_jet_matches_fd(jet, expr.value, x, y)

    def test_corner_guard_raises(self):
        segs = unit_rect_segments()
        eq = EquivalentAdf(tuple(SegmentAdf(s) for s in segs), s=1)
        with pytest.raises(NonDifferentiablePointError):
            eval_jet(eq, (1.0, 1.0))
        with pytest.raises(NonDifferentiablePointError):
            eval_jet(SegmentAdf(HSEG), (1.0, 0.0))

    def test_on_boundary_one_sided_jet(self):
        # left of the directed segment is the increasing-distance side
        seg = Segment(Point2(1, -1), Point2(1, 1))
        j = eval_jet(SegmentAdf(seg), (1.0, 0.3))
        assert j.v == 0.0
        assert (j.dx, j.dy) == (-1.0, 0.0)
        assert (j.dxx, j.dyy) == (0.0, 0.0)
