import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from hybridmech._numerics import (
    adaptive_simpson,
    bisect_newton,
    golden_section_max,
    golden_section_min,
    graded_edges,
    integrate_piecewise,
    integrate_segments,
)


class TestRoots:
    def test_sqrt_two(self):
        r = bisect_newton(lambda t: t * t - 2, lambda t: 2 * t, 0.0, 2.0)
        assert r == pytest.approx(math.sqrt(2), abs=1e-15)

    def test_endpoint_root(self):
        assert bisect_newton(lambda t: t, lambda t: 1.0, 0.0, 1.0) == 0.0

    def test_not_bracketed(self):
        with pytest.raises(ValueError, match="not bracketed"):
            bisect_newton(lambda t: t * t + 1, lambda t: 2 * t, -1.0, 1.0)

    @given(st.floats(0.01, 0.99))
    def test_linear_roots(self, a):
        assert bisect_newton(lambda t: t - a, lambda t: 1.0, 0.0, 1.0) == pytest.approx(a, abs=1e-14)


class TestGolden:
    def test_interior_maximum(self):
        x, fx, evals = golden_section_max(lambda t: -((t - 0.3) ** 2), 0.0, 1.0)
        assert x == pytest.approx(0.3, abs=1e-7)
        assert fx == pytest.approx(0.0, abs=1e-14)
        assert evals > 2

    def test_monotone_returns_boundary(self):
        x, fx, _ = golden_section_max(lambda t: t, 0.0, 1.0)
        assert (x, fx) == (1.0, 1.0)

    def test_min(self):
        x, fx, _ = golden_section_min(lambda t: (t - 0.7) ** 2 + 1, 0.0, 1.0)
        assert x == pytest.approx(0.7, abs=1e-7)
        assert fx == pytest.approx(1.0, abs=1e-14)


class TestQuadrature:
    def test_polynomial_exact(self):
        # 5-point Gauss-Legendre integrates degree 9 exactly
        pieces = integrate_segments(lambda t: t**9, np.array([0.0, 0.5, 1.0]))
        assert pieces.sum() == pytest.approx(0.1, abs=1e-15)

    def test_jump_at_edge(self):
        step = lambda t: np.where(t < 0.4, 0.0, 1.0)
        assert integrate_piecewise(step, 0.0, 1.0, breakpoints=[0.4]) == pytest.approx(0.6, abs=1e-14)

    def test_vector_valued(self):
        f = lambda t: np.stack([t, t * t])
        out = integrate_segments(f, np.array([0.0, 1.0, 2.0]))
        assert out.shape == (2, 2)
        assert out.sum(axis=1) == pytest.approx([2.0, 8 / 3], abs=1e-14)

    def test_empty(self):
        assert integrate_segments(lambda t: t, np.array([1.0])).size == 0
        assert integrate_piecewise(lambda t: t, 1.0, 1.0) == 0.0

    @given(st.floats(0.1, 5.0))
    def test_against_scipy_quad(self, k):
        f = lambda t: np.exp(-k * t) * np.cos(3 * t)
        expected, _ = integrate.quad(f, 0.0, 2.0, epsabs=1e-13)
        assert integrate_piecewise(f, 0.0, 2.0, tol=1e-12) == pytest.approx(expected, abs=1e-11)

    def test_adaptive_simpson_finds_unhinted_jump(self):
        step = lambda t: np.where(np.asarray(t) < 1 / 3, 0.25, 1.0)
        assert adaptive_simpson(step, 0.0, 1.0, tol=1e-12) == pytest.approx(0.25 / 3 + 2 / 3, abs=1e-10)

    def test_adaptive_simpson_smooth(self):
        assert adaptive_simpson(np.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-9)


class TestGradedEdges:
    def test_geometric_fill(self):
        e = graded_edges([0.0, 1e-3, 1.0])
        assert e[0] == 0.0 and e[-1] == 1.0 and 1e-3 in e
        inner = e[1:]
        assert np.all(inner[1:] / inner[:-1] <= 2.0 + 1e-12)

    def test_short_segments_untouched(self):
        assert graded_edges([0.0, 0.6, 1.0]).tolist() == [0.0, 0.6, 1.0]

    def test_subnormal_lower_edge(self):
        e = graded_edges([0.0, 5e-324, 1.0])
        assert np.all(np.isfinite(e))
        assert e.size < 70

    def test_resolves_scale_of_small_edge(self):
        # 1 / (1 + t/a) varies on the scale a; exact integral a log(1 + b/a)
        a, b = 1e-7, 1.0
        f = lambda t: 1.0 / (1.0 + t / a)
        got = integrate_segments(f, graded_edges([a, b]), tol=1e-14).sum()
        assert got == pytest.approx(a * math.log1p(b / a) - a * math.log(2), rel=1e-10)
