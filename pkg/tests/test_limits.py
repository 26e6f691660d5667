import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoisched.ctmc import resolvent_moment
from aoisched.limits import (
    HeavyTrafficParams,
    NpbParams,
    ht_chain,
    ht_mean_aoi,
    ht_mean_paoi,
    ht_opt_ratio_aoi,
    ht_opt_ratio_paoi,
    ht_weighted_aoi,
    ht_weighted_paoi,
    npb_chain,
    npb_mean_aoi,
    npb_mean_paoi,
    npb_opt_arrival_ratio_paoi,
    npb_opt_mix_aoi,
    npb_opt_mix_paoi,
    npb_weighted_aoi,
    npb_weighted_paoi,
    weight_split,
)

rate = st.floats(0.05, 20.0)


def chain_mean(chain, weight):
    return resolvent_moment(chain, weight, 1) / resolvent_moment(chain, weight, 0)


def test_ht_chain_matrix():
    ch = ht_chain(HeavyTrafficParams(1.0, 1.0, 0.5))
    assert np.allclose(np.diag(ch.A), (-1.0, -0.5, -1.0))
    assert np.allclose(np.tril(ch.A, -1), 0.0)
    assert np.allclose(ch.A.sum(axis=1) + ch.vector("s"), 0.0, atol=1e-15)
    assert ch.alpha.tolist() == [1.0, 0.0, 0.0]


@pytest.mark.parametrize(
    "mu1, mu2, p1, paoi",
    [(1.0, 1.0, 0.5, 3.0), (2.0, 1.0, 0.8, 1.25)],
)
def test_ht_paoi_hand_values(mu1, mu2, p1, paoi):
    assert ht_mean_paoi(HeavyTrafficParams(mu1, mu2, p1)) == pytest.approx(paoi, rel=1e-14)


@pytest.mark.parametrize(
    "mu1, mu2, p1, aoi",
    [(1.0, 1.0, 0.5, 3.0), (2.0, 1.0, 0.5, 7.0 / 3.0)],
)
def test_ht_aoi_hand_values(mu1, mu2, p1, aoi):
    assert ht_mean_aoi(HeavyTrafficParams(mu1, mu2, p1)) == pytest.approx(aoi, rel=1e-14)


def test_ht_paoi_limit_p1_to_one():
    assert ht_mean_paoi(HeavyTrafficParams(2.5, 1.0, 1 - 1e-12)) == pytest.approx(2 / 2.5, rel=1e-9)


@pytest.mark.parametrize("u", [0.3, 1.0, 4.0])
@pytest.mark.parametrize("p1", [0.1, 0.5, 0.77])
def test_ht_equal_rates_reduce(u, p1):
    htp = HeavyTrafficParams(u, u, p1)
    assert ht_mean_aoi(htp) == pytest.approx(1 / u + 1 / (u * p1), rel=1e-13)
    assert ht_mean_aoi(htp) == pytest.approx(ht_mean_paoi(htp), rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(mu1=rate, mu2=rate, p1=st.floats(0.01, 0.99))
def test_ht_closed_forms_match_chain(mu1, mu2, p1):
    htp = HeavyTrafficParams(mu1, mu2, p1)
    for source, h in ((1, htp), (2, htp.swapped())):
        ch = ht_chain(h)
        assert chain_mean(ch, ch.vector("s")) == pytest.approx(ht_mean_paoi(htp, source), rel=1e-10)
        assert chain_mean(ch, ch.vector("h")) == pytest.approx(ht_mean_aoi(htp, source), rel=1e-10)


def test_npb_chain_matrix():
    ch = npb_chain(NpbParams(0.5, 0.5, 1.0, 1.0))
    assert ch.A[1].tolist() == [0.0, -1.0, 0.5, 0.5]
    assert ch.vector("h").tolist() == [0.0, 1.0, 1.0, 1.0]
    assert ch.alpha.tolist() == [1.0, 0.0, 0.0, 0.0]


def test_npb_hand_values():
    p = NpbParams(0.5, 0.5, 1.0, 1.0)
    assert npb_mean_paoi(p) == pytest.approx(5.0, rel=1e-14)
    assert npb_mean_aoi(p) == pytest.approx(4.5, rel=1e-14)
    assert npb_mean_aoi(p) < npb_mean_paoi(p)


@settings(max_examples=50, deadline=None)
@given(l1=rate, l2=rate, m1=rate, m2=rate)
def test_npb_closed_forms_match_chain(l1, l2, m1, m2):
    p = NpbParams(l1, l2, m1, m2)
    for source, q in ((1, p), (2, p.swapped())):
        ch = npb_chain(q)
        assert chain_mean(ch, ch.vector("s")) == pytest.approx(npb_mean_paoi(p, source), rel=1e-10)
        assert chain_mean(ch, ch.vector("h")) == pytest.approx(npb_mean_aoi(p, source), rel=1e-10)


def test_npb_fast_source_limit_against_chain():
    p = NpbParams(1e4, 0.7, 1.3, 0.9)
    ch = npb_chain(p)
    assert chain_mean(ch, ch.vector("s")) == pytest.approx(npb_mean_paoi(p), rel=1e-10)
    # both terms of the closed form tend to 1/mu1 plus the source-2 share
    assert npb_mean_paoi(p) == pytest.approx(2 / 1.3 + (0.7 / 0.9) / 1e4, rel=1e-3)


@pytest.mark.parametrize("c", [0.1, 3.0, 40.0])
def test_npb_time_rescaling(c):
    p = NpbParams(0.6, 1.1, 1.7, 0.4)
    q = NpbParams(0.6 * c, 1.1 * c, 1.7 * c, 0.4 * c)
    for i in (1, 2):
        assert npb_mean_paoi(q, i) == pytest.approx(npb_mean_paoi(p, i) / c, rel=1e-13)
        assert npb_mean_aoi(q, i) == pytest.approx(npb_mean_aoi(p, i) / c, rel=1e-13)


def test_npb_from_load():
    p = NpbParams.from_load(2.0, 0.25, 4.0)
    assert p.rho == pytest.approx(2.0) and p.r1 == pytest.approx(0.25)
    assert p.lambda1 == pytest.approx(2.0 * 0.25 * 4.0)
    assert p.r == pytest.approx(1 / 3)


def test_weight_split():
    assert weight_split(4.0) == pytest.approx((0.8, 0.2))
    assert weight_split(math.inf) == (1.0, 0.0)


# optimal ratios


def test_ht_opt_ratio_paoi_values():
    assert ht_opt_ratio_paoi(4.0, 4.0) == 4.0
    assert ht_opt_ratio_paoi(1.0, 1.0) == 1.0


@pytest.mark.parametrize("omega", [0.25, 1.0, 4.0])
@pytest.mark.parametrize("mu", [0.25, 1.0, 4.0])
def test_ht_paoi_ratio_is_grid_argmin(omega, mu):
    p1 = np.arange(1, 10_000) * 1e-4
    w = [ht_weighted_paoi(omega, mu, 1.0, x) for x in p1]
    best = p1[int(np.argmin(w))]
    p = ht_opt_ratio_paoi(omega, mu)
    assert best == pytest.approx(p / (1 + p), abs=1e-3)


def test_ht_opt_ratio_aoi_equal_rates():
    assert ht_opt_ratio_aoi(4.0, 1.0, 1.0) == pytest.approx(2.0, abs=1e-4)
    assert ht_opt_ratio_aoi(1.0, 2.0, 2.0) == pytest.approx(1.0, abs=1e-4)
    for omega in (0.1, 0.5, 3.0, 9.0):
        assert ht_opt_ratio_aoi(omega, 1.0) == pytest.approx(math.sqrt(omega), rel=1e-4)


def test_ht_opt_ratio_aoi_ordering():
    assert ht_opt_ratio_aoi(4.0, 4.0) > ht_opt_ratio_paoi(4.0, 4.0)
    assert ht_opt_ratio_aoi(4.0, 0.25) < ht_opt_ratio_paoi(4.0, 0.25)


def test_ht_aoi_ratio_deviation_monotone_in_mu():
    omega = 2.0
    above = [ht_opt_ratio_aoi(omega, mu) / ht_opt_ratio_paoi(omega, mu) for mu in (1.0, 1.5, 2.5, 4.0, 8.0)]
    below = [ht_opt_ratio_aoi(omega, mu) / ht_opt_ratio_paoi(omega, mu) for mu in (1.0, 0.7, 0.4, 0.25, 0.1)]
    assert above[0] == pytest.approx(1.0, abs=1e-4)
    assert np.all(np.diff(above) > 0)
    assert np.all(np.diff(below) < 0)


def test_ht_aoi_ratio_is_grid_argmin():
    p1 = np.arange(1, 10_000) * 1e-4
    w = [ht_weighted_aoi(4.0, 4.0, 1.0, x) for x in p1]
    p = ht_opt_ratio_aoi(4.0, 4.0)
    assert p1[int(np.argmin(w))] == pytest.approx(p / (1 + p), abs=1e-4)


def test_npb_opt_mix_values():
    assert npb_opt_mix_paoi(4.0, 4.0) == 1.0
    assert npb_opt_mix_paoi(1.0, 1.0) == 1.0
    assert npb_opt_arrival_ratio_paoi(1.0, 1.0) == 1.0
    assert npb_opt_arrival_ratio_paoi(4.0, 4.0) == 4.0


@pytest.mark.parametrize("omega, mu", [(4.0, 4.0), (4.0, 0.5), (0.3, 2.0)])
def test_npb_paoi_mix_load_independent(omega, mu):
    r1 = np.arange(1, 10_000) * 1e-4
    argmins = []
    for rho in (0.5, 1.0, 10.0):
        w = [npb_weighted_paoi(rho, x, omega, mu) for x in r1]
        argmins.append(r1[int(np.argmin(w))])
    assert max(argmins) - min(argmins) <= 1e-4
    r = npb_opt_mix_paoi(omega, mu)
    assert argmins[0] == pytest.approx(r / (1 + r), abs=1e-3)


def test_npb_mix_aoi_symmetric():
    assert npb_opt_mix_aoi(1.0, 1.0, 1.0) == pytest.approx(1.0, abs=1e-6)


def test_npb_mix_aoi_strict_interior_minimum():
    r = npb_opt_mix_aoi(1.0, 4.0, 4.0)
    r1 = r / (1 + r)
    assert 0.01 < r1 < 0.99
    h = 1e-3
    vals = [npb_weighted_aoi(1.0, x, 4.0, 4.0) for x in (r1 - h, r1, r1 + h)]
    assert vals[0] - 2 * vals[1] + vals[2] > 0
    assert vals[1] <= min(vals[0], vals[2])


def test_npb_mix_aoi_fixture():
    # brute-force grid oracle, step 1e-5 over r1
    r1 = np.arange(1, 100_000) * 1e-5
    w = [npb_weighted_aoi(1.0, x, 4.0, 4.0) for x in r1]
    best = r1[int(np.argmin(w))]
    r = npb_opt_mix_aoi(1.0, 4.0, 4.0)
    assert r / (1 + r) == pytest.approx(best, abs=2e-5)
    assert r == pytest.approx(1.1236, abs=1e-4)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        HeavyTrafficParams(1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        NpbParams(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ht_opt_ratio_paoi(-1.0, 1.0)
    with pytest.raises(ValueError):
        ht_mean_paoi(HeavyTrafficParams(1.0, 1.0, 0.5), 3)
