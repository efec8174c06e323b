import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from inviscid.admissibility import (
    BetaContext,
    DeepCutoffs,
    EpsSearch,
    GeometricCutoffs,
    ThetaBound,
    Verdict,
    check_admissible,
    check_holder_chain,
    eval_beta,
    eval_beta_eps,
    eval_psi,
    eval_theta,
    integrate_inv_beta,
    integrate_inv_beta_logspace,
)
from inviscid.errors import DomainError

E = math.e


def beta_brute(M, theta, p0, x, n=300_000):
    """Dense-grid reference for beta, independent of the production minimizer."""
    lo = min(1e-8, 0.02 / max(math.log(max(M / x, 2.0)), 1.0))
    eps = np.geomspace(lo, 1.0 / p0, n)
    logs = eps * math.log(M) + (1.0 - eps) * math.log(x) + np.log(eps ** -1.0) + theta.log_value(1.0 / eps)
    return float(np.exp(np.min(logs)))


# -- theta families ----------------------------------------------------------


def test_theta_constant():
    th = ThetaBound.constant(1.0, p0=2.0)
    assert eval_theta(th, 7.0) == 1.0


def test_theta_scale_multiplies():
    th = ThetaBound.constant(3.5, p0=2.0)
    assert eval_theta(th, 10.0) == 3.5


def test_theta_iterlog_one():
    th = ThetaBound.iterated_log(1)
    assert abs(eval_theta(th, math.exp(2.0)) - 2.0) < 1e-14


def test_theta_iterlog_two_at_e_to_e():
    # ln(e^e) * lnln(e^e) = e * 1 = e
    th = ThetaBound.iterated_log(2)
    assert abs(eval_theta(th, math.exp(E)) - E) < 1e-13


def test_theta_iterlog_zero_is_constant():
    th = ThetaBound.iterated_log(0)
    assert eval_theta(th, 123.0) == 1.0


def test_theta_power_law():
    th = ThetaBound.power_law(0.5)
    assert abs(eval_theta(th, 9.0) - 3.0) < 1e-14


def test_theta_domain_errors():
    th = ThetaBound.constant(1.0, p0=2.0)
    with pytest.raises(DomainError):
        eval_theta(th, 1.5)
    with pytest.raises(DomainError):
        ThetaBound.iterated_log(2, p0=2.0)  # lnln not positive at 2
    with pytest.raises(DomainError):
        ThetaBound.power_law(-1.0)


def test_tabulated_profile_interpolates_and_refuses_extrapolation():
    ps = np.linspace(2.0, 50.0, 25)
    th = ThetaBound.tabulated([(p, math.log(p)) for p in ps])
    assert abs(eval_theta(th, 2.0) - math.log(2.0)) < 1e-12
    mid = 17.3
    assert abs(eval_theta(th, mid) - math.log(mid)) < 1e-4
    with pytest.raises(DomainError):
        eval_theta(th, 51.0)
    with pytest.raises(DomainError):
        ThetaBound.tabulated([(2.0, 1.0), (2.0, 2.0)])  # not strictly increasing
    with pytest.raises(DomainError):
        ThetaBound.tabulated([(2.0, 1.0), (3.0, -1.0)])  # nonpositive value


# -- beta_eps ----------------------------------------------------------------


def test_beta_eps_all_ones():
    ctx = BetaContext(M=1.0, theta=ThetaBound.constant(1.0, p0=2.0))
    assert abs(eval_beta_eps(ctx, 0.5, 1.0) - 2.0) < 1e-14


def test_beta_eps_m_four():
    # 4^(1/2) * 1^(1/2) * phi(2) = 2 * 2 = 4, by direct substitution
    ctx = BetaContext(M=4.0, theta=ThetaBound.constant(1.0, p0=2.0))
    assert abs(eval_beta_eps(ctx, 0.5, 1.0) - 4.0) < 1e-14


def test_beta_eps_vanishes_at_zero():
    ctx = BetaContext(M=1.0, theta=ThetaBound.iterated_log(1))
    vals = [eval_beta_eps(ctx, 0.25, x) for x in (1e-2, 1e-6, 1e-12)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-8


def test_beta_eps_domain_errors():
    ctx = BetaContext(M=1.0, theta=ThetaBound.constant(1.0, p0=2.0))
    with pytest.raises(DomainError):
        eval_beta_eps(ctx, 0.6, 1.0)  # above 1/p0
    with pytest.raises(DomainError):
        eval_beta_eps(ctx, 0.0, 1.0)
    with pytest.raises(DomainError):
        eval_beta_eps(ctx, 0.25, -1.0)


# -- beta --------------------------------------------------------------------


def test_beta_at_one_is_two():
    # beta_eps(1) = phi(1/eps) = 1/eps, minimized at the endpoint eps = 1/2
    ctx = BetaContext(M=1.0, theta=ThetaBound.constant(1.0, p0=2.0))
    assert abs(eval_beta(ctx, 1.0) - 2.0) < 1e-12


def test_beta_small_x_closed_form():
    # interior minimizer eps = 1/ln(1/x) gives e * x * ln(1/x)
    ctx = BetaContext(M=1.0, theta=ThetaBound.constant(1.0, p0=2.0))
    x = 1e-6
    want = E * x * math.log(1.0 / x)
    assert abs(eval_beta(ctx, x) - want) < 1e-9 * want


def test_beta_matches_brute_force():
    theta = ThetaBound.iterated_log(1)
    for M in (0.5, 1.0, 7.0):
        ctx = BetaContext(M=M, theta=theta)
        for x in (1e-9, 1e-4, 0.3, 1.0, 4.0):
            got = eval_beta(ctx, x)
            want = beta_brute(M, theta, ctx.p0, x)
            assert got <= want * (1.0 + 1e-9)
            assert abs(got - want) < 2e-6 * want


def test_beta_monotone_in_x():
    ctx = BetaContext(M=1.0, theta=ThetaBound.iterated_log(1))
    xs = np.geomspace(1e-9, 10.0, 50)
    vals = [eval_beta(ctx, x) for x in xs]
    assert all(b >= a * (1.0 - 1e-12) for a, b in zip(vals, vals[1:]))


def test_beta_below_every_beta_eps():
    ctx = BetaContext(M=2.0, theta=ThetaBound.iterated_log(1))
    for x in (1e-6, 0.1, 1.0, 3.0):
        b = eval_beta(ctx, x)
        for eps in np.geomspace(1e-8, 1.0 / ctx.p0, 40):
            assert b <= eval_beta_eps(ctx, float(eps), x) * (1.0 + 1e-12)


def test_beta_tends_to_zero():
    ctx = BetaContext(M=1.0, theta=ThetaBound.constant(1.0, p0=2.0))
    vals = [eval_beta(ctx, 10.0**-k) for k in range(1, 13)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-9


@given(
    x1=st.floats(min_value=1e-8, max_value=10.0),
    factor=st.floats(min_value=1.0, max_value=1e4),
)
def test_beta_monotone_property(x1, factor):
    ctx = BetaContext(M=1.0, theta=ThetaBound.constant(1.0, p0=2.0))
    assert eval_beta(ctx, x1 * factor) >= eval_beta(ctx, x1) * (1.0 - 1e-12)


# -- psi ---------------------------------------------------------------------


def test_psi_at_one():
    assert abs(eval_psi(ThetaBound.constant(1.0, p0=2.0), 1.0) - 2.0) < 1e-12


def test_psi_log_bound():
    # the candidate eps = 1/ln(x) shows psi(x) <= e * ln(x) * theta(ln x)
    theta = ThetaBound.constant(1.0, p0=2.0)
    x = math.exp(10.0)
    assert eval_psi(theta, x) <= E * 10.0 * (1.0 + 1e-9)


def test_psi_domain_error():
    with pytest.raises(DomainError):
        eval_psi(ThetaBound.constant(1.0, p0=2.0), 0.5)


def test_psi_beta_identity_m_one():
    theta = ThetaBound.iterated_log(1)
    ctx = BetaContext(M=1.0, theta=theta)
    for x in np.geomspace(1.0, 1e6, 50):
        lhs = eval_psi(theta, float(x))
        rhs = float(x) * eval_beta(ctx, 1.0 / float(x))
        assert abs(lhs - rhs) < 1e-6 * lhs


def test_psi_matches_brute_force():
    theta = ThetaBound.power_law(1.0)
    for x in (1.0, 10.0, 1e4):
        got = eval_psi(theta, x)
        want = x * beta_brute(1.0, theta, theta.p0, 1.0 / x)
        assert abs(got - want) < 2e-6 * want


# -- the 1/beta improper integral -------------------------------------------


def test_integral_increment_closed_form_theta0():
    # in the interior regime beta(s) = e s ln(1/s), so the integral between
    # cutoffs exp(-u1), exp(-u2) is (ln(u2) - ln(u1)) / e
    ctx = BetaContext(M=1.0, theta=ThetaBound.constant(1.0, p0=2.0))
    got = integrate_inv_beta_logspace(ctx, 8.0, 64.0)
    want = math.log(64.0 / 8.0) / E
    assert abs(got - want) < 1e-8 * want


def test_integral_increment_closed_form_powerlaw_one():
    # psi(e^q) = (e^2/4) q^2 interior, so the tail integral is (4/e^2)(1/u1 - 1/u2)
    ctx = BetaContext(M=1.0, theta=ThetaBound.power_law(1.0))
    got = integrate_inv_beta_logspace(ctx, 50.0, 400.0)
    want = (4.0 / E**2) * (1.0 / 50.0 - 1.0 / 400.0)
    assert abs(got - want) < 1e-6 * want


def test_integrate_inv_beta_s_interface():
    ctx = BetaContext(M=1.0, theta=ThetaBound.constant(1.0, p0=2.0))
    a = integrate_inv_beta(ctx, math.exp(-64.0), math.exp(-8.0))
    b = integrate_inv_beta_logspace(ctx, 8.0, 64.0)
    assert abs(a - b) < 1e-12 * b
    with pytest.raises(DomainError):
        integrate_inv_beta(ctx, 0.5, 0.1)


# -- classifier --------------------------------------------------------------


def test_classifier_basic_profiles():
    for theta, want in (
        (ThetaBound.iterated_log(0), Verdict.DIVERGENT),
        (ThetaBound.iterated_log(1), Verdict.DIVERGENT),
        (ThetaBound.power_law(1.0), Verdict.CONVERGENT),
    ):
        v = check_admissible(BetaContext(M=1.0, theta=theta))
        assert v.verdict is want, theta.kind


def test_classifier_partial_integrals_structure():
    v = check_admissible(BetaContext(M=1.0, theta=ThetaBound.iterated_log(0)))
    vals = [val for _, val in v.partial_integrals]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    logs = list(v.cutoff_log10)
    assert all(b < a for a, b in zip(logs, logs[1:]))
    assert v.growth_per_decade >= 0.0
    assert bool(v) is True


def test_classifier_geometric_cutoffs():
    ctx = BetaContext(M=1.0, theta=ThetaBound.constant(1.0, p0=2.0))
    v = check_admissible(ctx, cutoffs=GeometricCutoffs(delta0=0.1, ratio=0.1, count=13))
    # a twelve-decade ladder shows sustained per-decade growth for theta_0
    assert v.verdict is Verdict.DIVERGENT


def test_cutoff_validation():
    with pytest.raises(DomainError):
        GeometricCutoffs(delta0=0.1, ratio=0.5, count=6)  # under 6 decades
    with pytest.raises(DomainError):
        GeometricCutoffs(delta0=0.1, ratio=1.5, count=10)
    with pytest.raises(DomainError):
        DeepCutoffs(u0=8.0, count=3)
    with pytest.raises(DomainError):
        check_admissible(
            BetaContext(M=1.0, theta=ThetaBound.constant(1.0, p0=2.0)),
            growth_threshold=-1.0,
        )


def test_eps_search_validation():
    with pytest.raises(DomainError):
        EpsSearch(grid_points_per_decade=0)
    with pytest.raises(DomainError):
        BetaContext(M=1.0, theta=ThetaBound.constant(1.0, p0=2.0), eps_search=EpsSearch(eps_min=0.9))
    with pytest.raises(DomainError):
        BetaContext(M=-1.0, theta=ThetaBound.constant(1.0, p0=2.0))


# -- interpolation-inequality chain ------------------------------------------


def test_holder_chain_zero_f():
    g = np.random.default_rng(0).random((8, 8))
    res = check_holder_chain(np.zeros((8, 8)), g, eps=0.3, cell_measure=0.1)
    assert res.holds and res.product_integral == 0.0


def test_holder_chain_one_cell_equality():
    # f = g = indicator of one cell: every inequality in the chain is tight
    f = np.zeros((4, 4))
    f[1, 2] = 1.0
    res = check_holder_chain(f, f, eps=0.5, cell_measure=0.25)
    assert res.holds
    assert abs(res.product_integral - res.interpolated) < 1e-14
    assert abs(res.interpolated - res.factored) < 1e-14


def test_holder_chain_thousand_random_instances(rng):
    violations = 0
    for _ in range(1000):
        shape = (int(rng.integers(2, 12)), int(rng.integers(2, 12)))
        f = rng.random(shape) * rng.uniform(0.1, 5.0)
        g = rng.random(shape) * rng.uniform(0.1, 5.0)
        eps = float(rng.uniform(0.02, 0.98))
        res = check_holder_chain(f, g, eps=eps, cell_measure=float(rng.uniform(0.01, 2.0)))
        if not res.holds:
            violations += 1
    assert violations == 0


@given(
    eps=st.floats(min_value=0.05, max_value=0.95),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_holder_chain_property(eps, seed):
    r = np.random.default_rng(seed)
    f = r.random((6, 6))
    g = r.random((6, 6))
    res = check_holder_chain(f, g, eps=eps, cell_measure=0.37)
    assert res.holds
    assert res.slack >= -1e-10 * max(res.factored, 1.0)


def test_holder_chain_domain_errors():
    f = np.ones((3, 3))
    with pytest.raises(DomainError):
        check_holder_chain(-f, f, eps=0.5, cell_measure=1.0)
    with pytest.raises(DomainError):
        check_holder_chain(f, f, eps=1.5, cell_measure=1.0)
    with pytest.raises(DomainError):
        check_holder_chain(f, f, eps=0.5, cell_measure=1.0, M=0.5)
    with pytest.raises(DomainError):
        check_holder_chain(f, np.ones((2, 2)), eps=0.5, cell_measure=1.0)
