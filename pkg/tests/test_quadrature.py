import math

import numpy as np
import pytest

from inviscid._quad import (
    geometric_breakpoints,
    integrate_adaptive,
    signed_log_breakpoints,
)
from inviscid.errors import QuadratureError


def test_smooth_integral_matches_closed_form():
    val = integrate_adaptive(np.sin, np.linspace(0.0, math.pi, 5))
    assert abs(val - 2.0) < 1e-12


def test_reciprocal_on_geometric_panels():
    # integral of 1/s over [a, b] is ln(b/a)
    val = integrate_adaptive(lambda s: 1.0 / s, geometric_breakpoints(1e-6, 1.0))
    assert abs(val - math.log(1e6)) < 1e-8 * math.log(1e6)


def test_endpoint_singularity_sqrt():
    # integral of s^(-1/2) over [a, 1] = 2(1 - sqrt(a))
    a = 1e-10
    val = integrate_adaptive(lambda s: s**-0.5, geometric_breakpoints(a, 1.0))
    assert abs(val - 2.0 * (1.0 - math.sqrt(a))) < 1e-9


def test_adaptive_refines_hard_panels():
    # one wide panel over a sharply peaked integrand still converges
    from scipy.special import erf

    val = integrate_adaptive(lambda s: np.exp(-100.0 * (s - 0.3) ** 2), np.array([0.0, 1.0]))
    exact = math.sqrt(math.pi / 100.0) / 2.0 * (erf(3.0) + erf(7.0))
    assert abs(val - exact) < 1e-10


def test_discontinuity_raises_quadrature_error():
    with pytest.raises(QuadratureError):
        integrate_adaptive(lambda s: np.where(s < 1.0 / 3.0, 1.0, 2.0), np.array([0.0, 1.0]))


def test_geometric_breakpoints_cover_range():
    pts = geometric_breakpoints(1e-4, 1.0, factor=2.0)
    assert pts[0] == 1e-4 and pts[-1] == 1.0
    assert np.all(np.diff(pts) > 0.0)


def test_signed_log_breakpoints_span_huge_ranges():
    pts = signed_log_breakpoints(0.0, 1e60)
    assert pts[0] == 0.0 and pts[-1] == 1e60
    assert len(pts) < 600
    assert np.all(np.diff(pts) > 0.0)


def test_signed_log_breakpoints_negative_side():
    pts = signed_log_breakpoints(-700.0, 30.0)
    assert pts[0] == -700.0 and pts[-1] == 30.0
    assert np.all(np.diff(pts) > 0.0)
