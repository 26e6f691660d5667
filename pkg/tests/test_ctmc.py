import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from aoisched.ctmc import (
    AbsorbingChain,
    Generator,
    SingularSystem,
    exp_action,
    resolvent_moment,
    stationary,
    survival,
)
from aoisched.limits import HeavyTrafficParams, NpbParams, ht_chain, npb_chain
from aoisched.sbpsq import SchedProb, SystemParams, build_foreground

from quadrature import integrate

# 9-state occupancy chain, all rates 1, p1 = 0.5; from an SVD null-space solve
# of P^T (scipy.linalg.null_space), which is a different route from the
# normalization-row LU used by stationary()
SYMMETRIC_PI = np.array([1 / 11, 1 / 11, 1 / 22, 3 / 22, 2 / 11, 1 / 11, 3 / 22, 1 / 22, 2 / 11])


def test_generator_rejects_bad_rows():
    with pytest.raises(ValueError):
        Generator(np.array([[-1.0, 2.0], [1.0, -1.0]]))
    with pytest.raises(ValueError):
        Generator(np.array([[1.0, -1.0], [1.0, -1.0]]))


def test_from_offdiag_fills_diagonal():
    g = Generator.from_offdiag([[0, 2], [3, 0]])
    assert np.allclose(g.rates, [[-2, 2], [3, -3]])
    assert g.n == 2


@pytest.mark.parametrize(
    "a, b, expected",
    [(1.0, 1.0, (0.5, 0.5)), (1.0, 3.0, (0.75, 0.25))],
)
def test_two_state_stationary(a, b, expected):
    pi = stationary(Generator.from_offdiag([[0, a], [b, 0]]))
    assert np.allclose(pi, expected, atol=1e-14)


def test_symmetric_occupancy_chain_golden():
    pi = stationary(build_foreground(SystemParams(1.0, 1.0), SchedProb(0.5)))
    assert np.allclose(pi, SYMMETRIC_PI, atol=1e-13)
    # source exchange maps states 3<->8, 4<->7, 5<->9, 2<->6
    for i, j in [(3, 8), (4, 7), (5, 9), (2, 6)]:
        assert pi[i - 1] == pytest.approx(pi[j - 1], abs=1e-14)


def test_null_space_oracle_agrees():
    gen = build_foreground(SystemParams(0.7, 2.3, nu1=1.5, s1=0.8), SchedProb(0.3))
    ns = linalg.null_space(gen.rates.T)[:, 0]
    ns = ns / ns.sum()
    assert np.allclose(stationary(gen), ns, atol=1e-12)


def test_reducible_chain_raises():
    # state 3 is unreachable
    gen = Generator.from_offdiag([[0, 1, 0], [1, 0, 0], [1, 0, 0]])
    with pytest.raises(SingularSystem):
        stationary(gen)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=2, max_value=9),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_stationary_balance_random_generators(n, seed):
    rng = np.random.default_rng(seed)
    rates = rng.uniform(0.05, 5.0, size=(n, n))
    gen = Generator.from_offdiag(rates)
    pi = stationary(gen)
    assert np.all(pi > 0)
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(pi @ gen.rates)) < 1e-10


def _sym_ht():
    return ht_chain(HeavyTrafficParams(1.0, 1.0, 0.5))


def test_ht_chain_action_at_zero_is_exact():
    ch = _sym_ht()
    v = np.array([0.3, 1.7, 2.0])
    assert exp_action(ch, v, 0.0) == float(ch.alpha @ v)


def test_ht_chain_action_against_ode_oracle():
    # x' = xA from x(0) = (1, 0, 0) integrates to x3(t) = e^{-t/2} - e^{-t}
    # (confirmed by an RK4 step-1e-5 integration: 0.2386512185411939)
    expected = math.exp(-0.5) - math.exp(-1.0)
    ch = _sym_ht()
    got = exp_action(ch, ch.vector("s"), 1.0, tol=1e-12)
    assert got == pytest.approx(expected, rel=1e-10)
    assert got == pytest.approx(0.2386512185411939, rel=1e-10)


def test_action_matches_dense_expm():
    ch = npb_chain(NpbParams(0.7, 1.9, 1.3, 0.6))
    for t in (0.1, 1.0, 7.5, 30.0):
        dense = ch.alpha @ linalg.expm(ch.A * t) @ ch.vector("s")
        assert exp_action(ch, ch.vector("s"), t, tol=1e-12) == pytest.approx(dense, rel=1e-8, abs=1e-14)


def test_grid_propagation_matches_pointwise():
    ch = npb_chain(NpbParams(0.7, 1.9, 1.3, 0.6))
    t = np.array([5.0, 0.0, 1.25, 3.0, 3.0])
    grid = exp_action(ch, ch.vector("s"), t, tol=1e-12)
    single = [exp_action(ch, ch.vector("s"), float(x), tol=1e-12) for x in t]
    assert np.allclose(grid, single, rtol=1e-9, atol=1e-15)


@pytest.mark.parametrize(
    "chain",
    [_sym_ht(), ht_chain(HeavyTrafficParams(2.0, 0.5, 0.3)), npb_chain(NpbParams(0.5, 0.5, 1.0, 1.0))],
)
def test_total_absorption_integrates_to_one(chain):
    total = chain.total_exit()
    upper = 80.0 / float(np.min(-np.diag(chain.A)))
    val = integrate(lambda x: exp_action(chain, total, x), upper, panels=400)
    assert val == pytest.approx(1.0, abs=1e-7)


def test_survival_is_non_increasing():
    ch = npb_chain(NpbParams(0.7, 1.9, 1.3, 0.6))
    t = np.linspace(0.0, 40.0, 400)
    surv = survival(ch, ch.total_exit(), t)
    assert surv[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(surv) <= 1e-14)


def test_resolvent_normalization_and_hand_values():
    ch = _sym_ht()
    s = ch.vector("s")
    beta = 1.0 / resolvent_moment(ch, s, 0)
    assert beta * resolvent_moment(ch, s, 0) == pytest.approx(1.0)
    # 2/mu1 + p2/(mu2 p1) = 3
    assert beta * resolvent_moment(ch, s, 1) == pytest.approx(3.0, rel=1e-13)
    npb = npb_chain(NpbParams(0.5, 0.5, 1.0, 1.0))
    s = npb.vector("s")
    # 1/mu1 + (1 + rho)/lambda1 = 1 + 2/0.5 = 5
    assert resolvent_moment(npb, s, 1) / resolvent_moment(npb, s, 0) == pytest.approx(5.0, rel=1e-13)


@pytest.fixture(scope="module")
def npb_density():
    ch = npb_chain(NpbParams(0.8, 1.4, 1.1, 0.9))
    x = np.linspace(0.0, 300.0, 150_001)
    return ch, x, exp_action(ch, ch.vector("s"), x, tol=1e-12)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_resolvent_against_trapezoid(npb_density, k):
    ch, x, f = npb_density
    quad = float(np.trapezoid(x**k * f, x))
    assert quad == pytest.approx(math.factorial(k) * resolvent_moment(ch, ch.vector("s"), k), rel=1e-6)


def test_resolvent_rejects_negative_order():
    with pytest.raises(ValueError):
        resolvent_moment(_sym_ht(), np.ones(3), -1)


def test_singular_subgenerator():
    # transient state 2 never leaves
    ch = AbsorbingChain(np.array([[-1.0, 1.0], [0.0, 0.0]]), {"s": np.array([0.0, 0.0])}, np.array([1.0, 0.0]))
    with pytest.raises(SingularSystem):
        resolvent_moment(ch, np.array([1.0, 0.0]), 0)


def test_absorbing_chain_validation():
    A = np.array([[-2.0, 1.0], [0.0, -1.0]])
    with pytest.raises(ValueError):
        AbsorbingChain(A, {"s": np.array([0.5, 1.0])}, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        AbsorbingChain(A, {"s": np.array([1.0, 1.0])}, np.array([0.7, 0.0]))
    ch = AbsorbingChain.from_offdiag([[0, 1], [0, 0]], {"s": [1.0, 1.0]}, [1.0, 0.0])
    assert np.allclose(ch.A, A)


def test_exp_action_preconditions():
    ch = _sym_ht()
    with pytest.raises(ValueError):
        exp_action(ch, ch.vector("s"), -1.0)
    with pytest.raises(ValueError):
        exp_action(ch, ch.vector("s"), 1.0, tol=0.1)
