import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import cvtelelab as cv

# Two-hop reference characterization: per-hop output variances in dB.
HOP1 = cv.TeleporterConfig.from_output_db(2.5, 2.8)
HOP2 = cv.TeleporterConfig.from_output_db(2.3, 2.2)
TWO_HOP = cv.ChainSpec(hops=(HOP1, HOP2), label="reference")


# ---------------------------------------------------------------------------
# closed-form fidelity law


def test_single_hop_no_squeezing_is_classical_limit():
    assert cv.sequential_fidelity_ideal(1, 0.0) == 0.5


def test_single_hop_r035_is_two_thirds():
    assert_allclose(cv.sequential_fidelity_ideal(1, 0.35), 0.668188, atol=1e-6)


def test_two_hops_r035_beats_classical():
    value = cv.sequential_fidelity_ideal(2, 0.35)
    assert_allclose(value, 0.501713, atol=1e-6)
    assert value > 0.5


def test_sequential_fidelity_rejects_bad_args():
    with pytest.raises(ValueError):
        cv.sequential_fidelity_ideal(0, 0.3)
    with pytest.raises(ValueError):
        cv.sequential_fidelity_ideal(1, -0.1)


@settings(max_examples=80, deadline=None)
@given(n=st.integers(1, 6), r=st.floats(0.01, 2.5))
def test_fidelity_monotonicity(n, r):
    value = cv.sequential_fidelity_ideal(n, r)
    assert value < cv.sequential_fidelity_ideal(n, r + 0.1)  # increasing in r
    assert value > cv.sequential_fidelity_ideal(n + 1, r)  # decreasing in n


# ---------------------------------------------------------------------------
# noise budget


def test_budget_reproduces_reference_two_hop_values():
    budget = cv.accumulate_noise(TWO_HOP)
    assert_allclose(budget.out_var_x, 0.6192, atol=1e-4)
    assert_allclose(budget.out_var_p, 0.6413, atol=1e-4)
    assert_allclose(budget.out_db_x, 3.94, atol=5e-3)
    assert_allclose(budget.out_db_p, 4.09, atol=5e-3)


def test_budget_totals_are_sums():
    budget = cv.accumulate_noise(TWO_HOP)
    assert_allclose(
        budget.totals.delta_x, sum(h.delta_x for h in budget.per_hop), rtol=1e-15
    )
    assert_allclose(budget.out_var_x, 0.25 + budget.totals.delta_x, rtol=1e-15)


def test_budget_ideal_hop_is_zero_db():
    spec = cv.ChainSpec(hops=(cv.TeleporterConfig.from_output_db(0.0, 0.0),))
    budget = cv.accumulate_noise(spec)
    assert budget.out_db_x == 0.0
    assert budget.out_db_p == 0.0


@settings(max_examples=40, deadline=None)
@given(
    dbs=st.lists(
        st.tuples(st.floats(0.0, 4.7), st.floats(0.0, 4.7)), min_size=2, max_size=5
    ),
    seed=st.integers(0, 2**16),
)
def test_budget_is_order_invariant(dbs, seed):
    hops = [cv.TeleporterConfig.from_output_db(x, p) for x, p in dbs]
    base = cv.accumulate_noise(cv.ChainSpec(hops=tuple(hops)))
    rng = np.random.default_rng(seed)
    shuffled = list(hops)
    rng.shuffle(shuffled)
    other = cv.accumulate_noise(cv.ChainSpec(hops=tuple(shuffled)))
    assert abs(base.totals.delta_x - other.totals.delta_x) < 1e-12
    assert abs(base.totals.delta_p - other.totals.delta_p) < 1e-12


def test_chain_spec_requires_hops():
    with pytest.raises(ValueError):
        cv.ChainSpec(hops=())


# ---------------------------------------------------------------------------
# unity-gain fidelity from variances


def test_unity_gain_fidelity_examples():
    assert cv.fidelity_unity_gain(0.25, 0.25) == 1.0
    assert_allclose(cv.fidelity_unity_gain(0.4446, 0.4763), 0.704, atol=5e-4)
    assert_allclose(cv.fidelity_unity_gain(0.6192, 0.6413), 0.568, atol=5e-4)


def test_unity_gain_fidelity_rejects_negative():
    with pytest.raises(ValueError):
        cv.fidelity_unity_gain(-0.1, 0.3)


# ---------------------------------------------------------------------------
# chain runs


def test_chain_matches_closed_form_for_pure_hops():
    cfg = cv.TeleporterConfig.from_squeezing(0.35)
    run = cv.run_chain(cv.make_coherent(2.0, 1.0), cv.ChainSpec(hops=(cfg, cfg)))
    assert abs(run.report.chain_fidelity - cv.sequential_fidelity_ideal(2, 0.35)) < 1e-10


def test_chain_reference_fidelities():
    run = cv.run_chain(cv.make_coherent(1.0, 1.0), TWO_HOP)
    assert_allclose(run.report.per_hop_fidelity, (0.70, 0.75), atol=0.005)
    assert_allclose(run.report.chain_fidelity, 0.57, atol=0.005)
    assert run.report.beats_classical
    assert not run.report.beats_no_cloning


def test_chain_ideal_hop_returns_input():
    inp = cv.make_coherent(1.3, -0.4)
    spec = cv.ChainSpec(hops=(cv.TeleporterConfig.from_output_db(0.0, 0.0),))
    run = cv.run_chain(inp, spec)
    assert_allclose(run.output.mean, inp.mean, atol=1e-12)
    assert_allclose(run.output.cov, inp.cov, atol=1e-12)
    assert_allclose(run.report.chain_fidelity, 1.0, rtol=1e-12)


def test_chain_consistency_triangle():
    # per-hop propagation -> accumulated variances -> fidelity equals the
    # closed form for identical pure hops at unity gain
    inp = cv.make_coherent(2.0, 1.0)
    for n in range(1, 6):
        for r in np.arange(0.0, 1.01, 0.1):
            cfg = cv.TeleporterConfig.from_squeezing(float(r))
            run = cv.run_chain(inp, cv.ChainSpec(hops=(cfg,) * n))
            closed = cv.sequential_fidelity_ideal(n, float(r))
            assert abs(run.report.chain_fidelity - closed) < 1e-10
            budget_f = cv.fidelity_unity_gain(run.budget.out_var_x, run.budget.out_var_p)
            assert abs(budget_f - closed) < 1e-10


def test_chain_cov_is_hop_order_invariant():
    inp = cv.make_coherent(0.5, 0.5)
    forward = cv.run_chain(inp, cv.ChainSpec(hops=(HOP1, HOP2))).output
    backward = cv.run_chain(inp, cv.ChainSpec(hops=(HOP2, HOP1))).output
    assert_allclose(forward.cov, backward.cov, atol=1e-12)


def test_chain_report_flags_are_consistent():
    report = cv.FidelityReport.from_fidelities((0.7,), 0.69)
    assert report.beats_classical
    assert report.beats_no_cloning
    assert_allclose(report.classical_margin, 0.19)
    assert_allclose(report.no_cloning_margin, 0.69 - 2.0 / 3.0)


def test_chain_shot_mode_converges():
    inp = cv.make_coherent(2.0, 1.0)
    analytic = cv.run_chain(inp, TWO_HOP).report.chain_fidelity
    run = cv.run_chain(inp, TWO_HOP, mode="shots", seed=31, n_shots=40_000)
    assert isinstance(run.output, cv.ShotEnsemble)
    assert abs(run.report.chain_fidelity - analytic) < 0.01
    mean = run.output.mixture_mean()
    assert np.all(np.abs(mean - [2.0, 1.0]) < 5 * math.sqrt(0.65 / 40_000))


def test_chain_rejects_bad_mode_and_input():
    with pytest.raises(ValueError):
        cv.run_chain(cv.make_coherent(1, 1), TWO_HOP, mode="hybrid")
    with pytest.raises(ValueError):
        cv.run_chain(cv.make_vacuum(2), TWO_HOP)


# ---------------------------------------------------------------------------
# squeezing thresholds


def test_threshold_two_hops_classical():
    assert_allclose(cv.threshold_squeezing(2, 0.5), 0.5 * math.log(2.0), rtol=1e-12)


def test_threshold_single_hop_classical_needs_nothing():
    assert cv.threshold_squeezing(1, 0.5) == 0.0


def test_threshold_single_hop_no_cloning():
    assert_allclose(cv.threshold_squeezing(1, 2.0 / 3.0), 0.5 * math.log(2.0), rtol=1e-12)


def test_threshold_unreachable_marker():
    assert cv.threshold_squeezing(1, 0.4) == math.inf
    assert cv.threshold_squeezing(3, 0.2) == math.inf


def test_threshold_rejects_bad_targets():
    with pytest.raises(ValueError):
        cv.threshold_squeezing(2, 1.0)
    with pytest.raises(ValueError):
        cv.threshold_squeezing(2, 0.0)
    with pytest.raises(ValueError):
        cv.threshold_squeezing(0, 0.5)


def test_threshold_inverts_fidelity_law():
    for n in (1, 2, 4):
        for target in (0.52, 0.6, 0.75):
            r_star = cv.threshold_squeezing(n, target)
            assert abs(cv.sequential_fidelity_ideal(n, r_star) - target) < 1e-12


# ---------------------------------------------------------------------------
# entanglement swapping


def test_swap_ideal_limit_returns_input():
    inp = cv.make_coherent(1.0, -0.5)
    out, report = cv.swap_then_teleport(inp, r=8.0, swap_gain=1.0)
    assert_allclose(out.mean, inp.mean, atol=1e-10)
    assert_allclose(out.cov, inp.cov, atol=1e-5)
    assert report.chain_fidelity > 0.999


def test_swap_unity_gain_matches_sequential_law():
    # at unit swap gain the swapped pair carries twice the added noise,
    # exactly the two-hop sequential budget
    inp = cv.make_coherent(1.0, 1.0)
    for r in (0.1, 0.35, 0.8):
        _, report = cv.swap_then_teleport(inp, r=r, swap_gain=1.0)
        assert abs(report.chain_fidelity - cv.sequential_fidelity_ideal(2, r)) < 1e-10


def test_swap_scan_beats_classical_at_low_squeezing():
    inp = cv.make_coherent(1.0, 1.0)
    scan = cv.scan_swap_gain(inp, r=0.1)
    assert scan.best_fidelity > 0.5
    assert 0.15 <= scan.best_gain <= 0.25  # near tanh(2r) ~ 0.197
    sequential = cv.sequential_fidelity_ideal(2, 0.1)
    assert sequential < 0.5
    assert_allclose(sequential, 0.379152, atol=1e-6)


def test_swap_scan_brute_force_grid_agrees_with_fine_optimum():
    # the scanned maximum should track the best fidelity over a finer grid
    inp = cv.make_coherent(0.5, -0.5)
    coarse = cv.scan_swap_gain(inp, r=0.3)
    fine = cv.scan_swap_gain(inp, r=0.3, gains=np.linspace(0.1, 2.0, 1901))
    assert fine.best_fidelity >= coarse.best_fidelity - 1e-9
    assert abs(fine.best_fidelity - coarse.best_fidelity) < 1e-4


def test_swap_shots_converge_to_analytic():
    inp = cv.make_coherent(1.0, 0.0)
    analytic_out, analytic_report = cv.swap_then_teleport(inp, r=0.4, swap_gain=0.7)
    shot_out, shot_report = cv.swap_then_teleport(
        inp, r=0.4, swap_gain=0.7, seed=11, mode="shots", n_shots=4000
    )
    assert_allclose(shot_out.mean, analytic_out.mean, atol=0.1)
    assert_allclose(shot_out.cov, analytic_out.cov, atol=0.06)
    assert abs(shot_report.chain_fidelity - analytic_report.chain_fidelity) < 0.05


def test_swap_validation():
    with pytest.raises(ValueError):
        cv.swap_then_teleport(cv.make_vacuum(2), r=0.3, swap_gain=1.0)
    with pytest.raises(ValueError):
        cv.swap_then_teleport(cv.make_vacuum(1), r=0.3, swap_gain=1.0, mode="bogus")
    with pytest.raises(ValueError):
        cv.scan_swap_gain(cv.make_vacuum(1), r=0.3, gains=np.array([]))
