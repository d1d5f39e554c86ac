import math

import numpy as np
import pytest

from conftest import params_db, small_sim
from dude_lab import analytic as an
from dude_lab import montecarlo as mc
from dude_lab.model import FEASIBLE_CASES, AssociationCase, SimulationParams, TierId, default_params, with_changes

C1, C2, C3, C4 = AssociationCase


def _drop(macro, small, **kw):
    base = dict(
        interferer_distances=np.empty(0),
        interferer_marks=np.empty(0),
        interferer_fading=np.empty(0),
        serving_fading=1.0,
    )
    base.update(kw)
    return mc.DropRealization(np.atleast_2d(macro).astype(float), np.atleast_2d(small).astype(float), **base)


# point process ---------------------------------------------------------------------------


def test_ppp_count_is_poisson():
    rng = np.random.default_rng(0)
    radius = 1.0
    density = 100.0 / (math.pi * radius**2)
    counts = np.array([mc.sample_ppp(density, radius, rng).shape[0] for _ in range(10_000)])
    z = (counts.mean() - 100.0) / math.sqrt(100.0 / counts.size)
    assert abs(z) < 4.0
    assert counts.var() == pytest.approx(100.0, rel=0.1)


def test_ppp_support_and_determinism():
    pts = mc.sample_ppp(50.0, 2.0, np.random.default_rng(5))
    assert np.all(np.hypot(pts[:, 0], pts[:, 1]) <= 2.0)
    again = mc.sample_ppp(50.0, 2.0, np.random.default_rng(5))
    np.testing.assert_array_equal(pts, again)
    with pytest.raises(ValueError):
        mc.sample_ppp(0.0, 1.0, np.random.default_rng())


def test_ppp_positions_uniform():
    rng = np.random.default_rng(2)
    pts = np.vstack([mc.sample_ppp(30.0, 1.0, rng) for _ in range(300)])
    r2 = np.sum(pts**2, axis=1)  # uniform on [0, 1] for a uniform disk
    assert abs(r2.mean() - 0.5) < 4 * math.sqrt(1 / 12 / r2.size)
    angle = np.arctan2(pts[:, 1], pts[:, 0])
    assert abs(np.mean(np.cos(angle))) < 4 / math.sqrt(2 * angle.size)


# association ---------------------------------------------------------------------------


def test_associate_hand_example():
    p = default_params(p_m=1.0, p_s=10**-2.6, q_m=1.0, q_s=0.1)
    out = mc.associate(_drop([5.0, 0.0], [0.0, 1.0]), p)
    assert out.case is C2
    assert out.ul_serving_tier is TierId.SMALL
    assert out.dl_serving_distance == 5.0 and out.ul_serving_distance == 1.0


def test_associate_macro_near():
    out = mc.associate(_drop([1.0, 0.0], [[10.0, 0.0], [0.0, 12.0]]), default_params())
    assert out.case is C1


def test_associate_small_wins_both():
    p = params_db(10, 10)
    out = mc.associate(_drop([0.0, 2.0], [0.05, 0.0]), p)
    assert out.case is C4
    assert mc.coupled_baseline(_drop([0.0, 2.0], [0.05, 0.0]), p) == out


def test_tie_goes_to_macro():
    p = params_db(10, 10)
    # equal UL received power: Q_M d_m^-a == Q_S d_s^-a with equal powers and distances
    out = mc.associate(_drop([1.0, 0.0], [0.0, 1.0]), p)
    assert out.ul_serving_tier is TierId.MACRO


def test_no_case3_over_many_random_drops(fig_params):
    rng = np.random.default_rng(1)
    d_m = rng.rayleigh(1.0, 1_000_000)
    d_s = rng.rayleigh(0.3, 1_000_000)
    *_, case = mc._classify(d_m, d_s, fig_params)
    assert not np.any(case == 3)
    assert set(np.unique(case)) == {1, 2, 4}


def test_coupled_follows_downlink():
    p = default_params(p_m=1.0, p_s=10**-2.6, q_m=1.0, q_s=0.1)
    drop = _drop([5.0, 0.0], [0.0, 1.0])
    out = mc.coupled_baseline(drop, p)
    assert out.case is C1
    assert out.ul_serving_tier is TierId.MACRO
    assert out.ul_serving_distance == 5.0


# SINR ------------------------------------------------------------------------------------


def test_sinr_noise_only_equals_one():
    p = with_changes(default_params(), noise=0.0)
    drop = _drop([0.5, 0.0], [3.0, 0.0], serving_fading=0.7)
    out = mc.associate(drop, p)
    signal = p.q_m * 0.7 * 0.5**-3
    noisy = with_changes(p, noise=signal)
    assert mc.ul_sinr(drop, out, noisy) == pytest.approx(1.0, rel=1e-14)


def test_sinr_single_matched_interferer_equals_one(fig_params):
    drop = _drop([0.5, 0.0], [3.0, 0.0], serving_fading=0.7,
                 interferer_distances=np.array([0.5]), interferer_marks=np.array([fig_params.q_m]),
                 interferer_fading=np.array([0.7]))
    out = mc.associate(drop, fig_params)
    assert mc.ul_sinr(drop, out, fig_params) == pytest.approx(1.0, rel=1e-14)


def test_block_engine_matches_single_drop_path(fig_params):
    sim = SimulationParams(drops=64, seed=5)
    block = mc.generate_block(fig_params, sim, 0, 64, 3.0)
    out = mc.evaluate_block(block, fig_params)
    for i in (0, 7, 33, 63):
        drop = block.drop(i)
        a = mc.associate(drop, fig_params)
        assert int(a.case) == out.case[i]
        assert a.ul_serving_distance == out.distance[i]
        assert mc.ul_sinr(drop, a, fig_params) == pytest.approx(out.sinr[i], rel=1e-12)
        c = mc.coupled_baseline(drop, fig_params)
        assert mc.ul_sinr(drop, c, fig_params) == pytest.approx(out.coupled_sinr[i], rel=1e-12)


# estimates ----------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def run_fig():
    return mc.run_monte_carlo(default_params(), small_sim(40_000, seed=3))


def test_probabilities_agree_within_4_se(run_fig):
    pr = an.association_probabilities(default_params())
    est = run_fig.decoupled
    assert sum(est.counts.values()) == est.drops
    assert sum(est.probabilities.as_tuple()) == pytest.approx(1.0, abs=1e-15)
    for case in FEASIBLE_CASES:
        assert abs(est.probabilities[case] - pr[case]) < 4 * est.prob_stderr(case)
    assert est.counts[C3] == 0


def test_case_se_within_5_percent(run_fig):
    for case in FEASIBLE_CASES:
        a = an.spectral_efficiency_case(case, default_params())
        m, se = run_fig.decoupled.se[case]
        assert abs(m - a) < max(0.05 * a, 4 * se)


def test_case1_ccdf(run_fig):
    for theta in (0.1, 1.0, 10.0):
        a = an.ul_sinr_ccdf(C1, theta, default_params())
        m, se = run_fig.decoupled.sinr_ccdf(C1, theta)
        assert abs(a - m) < 4 * se + 1e-3


def test_ee_follows_rate(run_fig):
    est = run_fig.decoupled
    p = default_params()
    for case in FEASIBLE_CASES:
        assert est.ee[case][0] == pytest.approx(p.bandwidth_w * est.se[case][0] / an.total_power(case, p), rel=1e-12)


def test_coupled_estimates(run_fig):
    est = run_fig.coupled
    pr = an.association_probabilities(default_params(), coupled=True)
    assert est.counts[C2] == 0
    assert abs(est.probabilities[C1] - pr.pr_case1) < 4 * est.prob_stderr(C1)


def test_single_drop():
    res = mc.run_monte_carlo(default_params(), SimulationParams(drops=1, seed=2))
    probs = res.decoupled.probabilities.as_tuple()
    assert sorted(probs) == [0.0, 0.0, 0.0, 1.0]


def test_result_independent_of_workers_and_backend(fig_params):
    sim = small_sim(5000, seed=9)
    a = mc.run_monte_carlo(fig_params, sim, workers=1)
    b = mc.run_monte_carlo(fig_params, sim, workers=3)
    for attr in ("case", "distance", "sinr"):
        np.testing.assert_array_equal(getattr(a.decoupled, attr), getattr(b.decoupled, attr))
        np.testing.assert_array_equal(getattr(a.coupled, attr), getattr(b.coupled, attr))
    c = mc.run_monte_carlo(fig_params, sim, workers=1, backend="numpy")
    np.testing.assert_array_equal(a.decoupled.case, c.decoupled.case)
    np.testing.assert_allclose(a.decoupled.sinr, c.decoupled.sinr, rtol=1e-12)


def test_seed_changes_result(fig_params):
    a = mc.run_monte_carlo(fig_params, small_sim(2000, seed=1))
    b = mc.run_monte_carlo(fig_params, small_sim(2000, seed=2))
    assert not np.array_equal(a.decoupled.sinr, b.decoupled.sinr)


def test_common_power_dominance_per_drop():
    p = params_db(10, 10)
    res = mc.run_monte_carlo(p, small_sim(20_000, seed=4))
    assert np.all(res.decoupled.sinr >= res.coupled.sinr)
    assert res.decoupled.ee_avg[0] > res.coupled.ee_avg[0]


def test_resampling_counted_for_tiny_window(fig_params):
    res = mc.run_monte_carlo(fig_params, SimulationParams(drops=3000, seed=1, window_radius=0.3))
    assert res.resampled > 0
    assert np.all(np.isfinite(res.decoupled.distance))


def test_default_window(fig_params):
    r = mc.default_window_radius(fig_params)
    assert r >= 6 / math.sqrt(math.pi * fig_params.lambda_m)
    assert r >= 3 * an.serving_distance_quantile(0.999, fig_params)


def test_window_truncation_is_negligible(fig_params):
    """Doubling R leaves the interference law unchanged within sampling error."""
    sim = small_sim(seed=6)
    r = mc.default_window_radius(fig_params)
    a = mc.sample_interference(fig_params, sim, 40_000, radius=r)
    b = mc.sample_interference(fig_params, sim, 40_000, radius=2 * r)
    assert np.median(b) == pytest.approx(np.median(a), rel=0.02)
    la, lb = np.exp(-0.1 * a).mean(), np.exp(-0.1 * b).mean()
    se = math.hypot(np.exp(-0.1 * a).std(), np.exp(-0.1 * b).std()) / math.sqrt(a.size)
    assert abs(la - lb) < 4 * se


def test_serving_distance_samples_follow_consistent_law(fig_params):
    from dude_lab.experiments import ks_statistic

    samples = mc.sample_serving_distances(fig_params, small_sim(seed=8), 10_000)
    for case in FEASIBLE_CASES:
        assert samples[case].size == 10_000
        d = ks_statistic(samples[case], lambda x, c=case: an.serving_distance_cdf(c, x, fig_params))
        assert d < 1.63 / math.sqrt(10_000)


def test_equivalent_field_laplace(fig_params):
    sim = small_sim(seed=12)
    two = mc.sample_interference(fig_params, sim, 30_000)
    one = mc.sample_interference(fig_params, sim, 30_000, equivalent=True)
    for s in (0.1, 1.0):
        e2, e1 = np.exp(-s * two), np.exp(-s * one)
        se = math.hypot(e2.std(ddof=1), e1.std(ddof=1)) / math.sqrt(two.size)
        assert abs(e2.mean() - e1.mean()) < 4 * se
