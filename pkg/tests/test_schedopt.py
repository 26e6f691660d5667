import dataclasses

import numpy as np
import pytest

from aoisched.sbpsq import SchedProb, SystemParams, swap_sources, weighted_metrics
from aoisched.schedopt import (
    GRID_STEP,
    SEARCH_HI,
    SEARCH_LO,
    PolicySpec,
    heuristic_policy,
    normalize_metric,
    npb_policy,
    ops_optimize,
    parse_policy,
)
from aoisched.search import count_local_minima, grid_then_golden


@pytest.mark.parametrize("rho", [1.0, 10.0, 200.0])
@pytest.mark.parametrize("metric", ["PAoI", "AoI"])
def test_ops_symmetric(rho, metric):
    pol = ops_optimize(SystemParams.from_shorthand(rho, 1.0, 1.0, 1.0), metric)
    assert pol.p1 == pytest.approx(0.5, abs=1e-4)
    assert pol.kind == f"OPS-{metric[0]}"


def test_ops_symmetric_light_load():
    # below rho ~ 0.7 the symmetric W_PAoI curve is slightly higher at
    # p1 = 0.5 than at the ends; W_AoI still bottoms out at 0.5
    p = SystemParams.from_shorthand(0.2, 1.0, 1.0, 1.0)
    half = weighted_metrics(p, SchedProb(0.5))
    pol = ops_optimize(p, "PAoI")
    assert pol.p1 in (SEARCH_LO, SEARCH_HI)
    assert pol.objective < half.w_paoi
    assert half.w_paoi - pol.objective < 1e-5 * half.w_paoi
    assert ops_optimize(p, "AoI").p1 == pytest.approx(0.5, abs=1e-4)


def test_ops_heavy_traffic_limit():
    p = SystemParams.from_shorthand(1e4, 1.0, 4.0, 4.0)
    assert ops_optimize(p, "paoi").p1 == pytest.approx(0.8, abs=2e-3)


@pytest.mark.parametrize("metric", ["PAoI", "AoI"])
@pytest.mark.parametrize("shorthand", [(3.0, 0.25, 4.0, 4.0), (30.0, 2.0, 0.5, 2.0)])
def test_ops_beats_every_grid_point(metric, shorthand):
    p = SystemParams.from_shorthand(*shorthand)
    pol = ops_optimize(p, metric)
    grid = np.arange(SEARCH_LO, SEARCH_HI, GRID_STEP / 2)
    key = "w_paoi" if metric == "PAoI" else "w_aoi"
    values = [getattr(weighted_metrics(p, SchedProb(x)), key) for x in grid]
    assert pol.objective <= min(values) + 1e-12
    assert pol.objective == pytest.approx(getattr(weighted_metrics(p, SchedProb(pol.p1)), key), rel=1e-12)


@pytest.mark.parametrize("metric", ["PAoI", "AoI"])
def test_ops_relabel_invariance(metric):
    p = SystemParams.from_shorthand(5.0, 0.5, 3.0, 2.0)
    q, _ = swap_sources(p, SchedProb(0.5))
    assert ops_optimize(q, metric).p1 == pytest.approx(1 - ops_optimize(p, metric).p1, abs=1e-4)


def test_heuristic_values():
    assert heuristic_policy((4.0, 4.0, 1.0), "paoi").p1 == pytest.approx(0.8, abs=1e-12)
    assert heuristic_policy((4.0, 1.0, 1.0), "aoi").p1 == pytest.approx(2 / 3, abs=1e-5)


@pytest.mark.parametrize("omega", [0.2, 1.0, 4.0])
def test_h1_p_equals_h1_a_at_unit_mu(omega):
    a = heuristic_policy((omega, 1.0, 1.0), "paoi").p1
    b = heuristic_policy((omega, 1.0, 1.0), "aoi").p1
    assert a == pytest.approx(b, abs=1e-5)


def test_heuristic_ignores_arrival_rates():
    base = SystemParams.from_shorthand(1.0, 1.0, 4.0, 4.0)
    for lam1, lam2 in [(0.01, 30.0), (500.0, 0.2)]:
        other = dataclasses.replace(base, lambda1=lam1, lambda2=lam2)
        for metric in ("paoi", "aoi"):
            for kind in ("H1", "H2"):
                assert heuristic_policy(other, metric, kind) == heuristic_policy(base, metric, kind)


def test_symmetric_all_half():
    p = SystemParams.from_shorthand(2.0, 1.0, 1.0, 1.0)
    for metric in ("paoi", "aoi"):
        for kind in ("H1", "H2"):
            assert heuristic_policy(p, metric, kind).p1 == pytest.approx(0.5, abs=1e-6)
        assert ops_optimize(p, metric).p1 == pytest.approx(0.5, abs=1e-4)


def test_policy_spec_validation():
    with pytest.raises(ValueError):
        PolicySpec("H1")
    with pytest.raises(ValueError):
        PolicySpec("H2", p1=0.5, bucket_limit=float("inf"))
    with pytest.raises(ValueError):
        PolicySpec("XYZ", p1=0.5)
    assert PolicySpec("NPB").p1 is None
    assert PolicySpec("H2", metric="AoI", p1=0.3).name == "H2-A"


def test_parse_policy_names():
    p = SystemParams.from_shorthand(1.0, 1.0, 4.0, 4.0)
    assert parse_policy("h2-p", p).kind == "H2"
    assert parse_policy("npb", p) == npb_policy()
    assert parse_policy("OPS-A", p).metric == "AoI"
    with pytest.raises(ValueError):
        parse_policy("h3-p", p)
    with pytest.raises(ValueError):
        normalize_metric("peak")


def test_grid_then_golden_locates_interior_minimum():
    res = grid_then_golden(lambda x: (x - 0.3137) ** 2, 0.0, 1.0, 0.01, 1e-9)
    assert res.x == pytest.approx(0.3137, abs=1e-7) and res.refined


def test_grid_then_golden_boundary():
    res = grid_then_golden(lambda x: x, 0.1, 0.9, 0.01, 1e-9)
    assert res.x == pytest.approx(0.1, abs=1e-6)


def test_multimodal_falls_back_to_grid():
    f = lambda x: np.cos(40 * x) + 0.1 * x  # noqa: E731
    grid = np.arange(0.0, 1.0 + 1e-12, 0.01)
    assert count_local_minima(np.array([f(x) for x in grid])) > 1
    res = grid_then_golden(f, 0.0, 1.0, 0.01, 1e-9)
    assert not res.refined
    assert res.fun == pytest.approx(min(f(x) for x in grid))
