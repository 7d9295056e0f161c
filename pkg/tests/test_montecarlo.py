import math
from dataclasses import asdict, replace

import numpy as np
import pytest

from nspradar.montecarlo import (
    ARM_NSP,
    ARM_NSP_PERTURBED,
    ARM_ORIGINAL,
    ARM_STALE,
    ConfigError,
    ExperimentConfig,
    arm_records,
    error_matrix,
    leakage_law,
    paired_bootstrap_rmse,
    run_experiment,
    run_trial,
    run_trials,
    substream,
    summarize,
)

SMALL = ExperimentConfig(num_trials=40, h_rms_values=(0.0, 1.0, 4.0))


def test_defaults():
    c = ExperimentConfig()
    assert (c.m_tx, c.m_rx, c.n_rx, c.num_samples) == (4, 4, 2, 256)
    assert c.grid_step_deg == 0.5 and c.snr_db == 25.0
    assert c.h_rms_values == (1.0, 2.0, 3.0, 4.0)
    assert c.perturbation_style == "real" and c.projection_target == "perturbed"
    # 25 dB with M_T/L per-snapshot transmit power
    assert c.noise_power() == pytest.approx(4 / 256 / 10**2.5)


@pytest.mark.parametrize("kwargs,field", [
    (dict(n_rx=4, m_tx=4), "n_rx"),
    (dict(num_trials=0), "num_trials"),
    (dict(h_rms_values=(1.0, -1.0)), "h_rms_values"),
    (dict(perturbation_style="gauss"), "perturbation_style"),
    (dict(projection_target="x"), "projection_target"),
    (dict(num_samples=250), "num_samples"),
    (dict(master_seed=-1), "master_seed"),
])
def test_config_validation(kwargs, field):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig(**kwargs)
    assert info.value.field == field


def test_substreams_are_independent_of_call_order():
    a = substream(5, 3, 2).standard_normal(4)
    substream(5, 4, 2).standard_normal(10)
    b = substream(5, 3, 2).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, substream(5, 3, 1).standard_normal(4))
    assert not np.array_equal(a, substream(6, 3, 2).standard_normal(4))


def test_trial_structure_and_zero_perturbation_collapse():
    results = run_trial(SMALL, 7)
    assert [r.h_rms for r in results] == [0.0, 1.0, 4.0]
    r0 = results[0]
    assert r0.theta_hat_nsp_perturbed == r0.theta_hat_nsp
    assert r0.leakage_stale == pytest.approx(0.0, abs=1e-12)
    for r in results:
        assert r.nullity == 2 and r.nullity_perturbed == 2
        assert abs(r.theta_true) <= 60
        assert r.leakage_nsp <= 1e-8 and r.leakage_nsp_perturbed <= 1e-8
        assert not r.failed
    assert results[2].leakage_stale > results[1].leakage_stale > 0


def test_noiseless_trial_is_exact():
    cfg = replace(SMALL, snr_db=400.0)
    for tid in range(10):
        for r in run_trial(cfg, tid):
            assert r.theta_hat_original == r.theta_true
            assert r.theta_hat_nsp == r.theta_true


def test_trial_determinism():
    assert repr(run_trial(SMALL, 3)) == repr(run_trial(SMALL, 3))


def test_order_and_worker_invariance():
    seq = run_trials(SMALL)
    rev = run_trials(SMALL, trial_ids=reversed(range(SMALL.num_trials)))
    par = run_trials(SMALL, workers=3)
    assert repr(seq) == repr(rev) == repr(par)


def test_sweep_mode_cycles_targets():
    cfg = replace(SMALL, theta_mode="sweep", num_trials=5)
    got = [run_trial(cfg, t)[0].theta_true for t in range(5)]
    assert got == [-60.0, -59.5, -59.0, -58.5, -58.0]


def test_stale_projection_target_reuses_unperturbed_projection():
    cfg = replace(SMALL, projection_target="stale")
    for r in run_trial(cfg, 2):
        assert r.theta_hat_nsp_perturbed == r.theta_hat_nsp
        assert r.leakage_nsp_perturbed == pytest.approx(r.leakage_stale)


def test_complex_style_runs():
    cfg = replace(SMALL, perturbation_style="complex", num_trials=5)
    res = run_experiment(cfg)
    assert res.summary.get(ARM_NSP_PERTURBED, 4.0).n_trials == 5


def test_arm_records_layout():
    trials = run_trials(replace(SMALL, num_trials=2))
    recs = arm_records(trials)
    # per trial: original, nsp, then 3 perturbed + 3 stale
    assert len(recs) == 2 * (2 + 2 * 3)
    assert [r.arm for r in recs[:8]] == [ARM_ORIGINAL, ARM_NSP] + [ARM_NSP_PERTURBED] * 3 + [ARM_STALE] * 3


def test_summary_against_hand_computation():
    res = run_experiment(replace(SMALL, snr_db=-5.0))
    recs = [r for r in arm_records(res.trials) if r.arm == ARM_NSP_PERTURBED and r.h_rms == 4.0]
    err = np.array([r.theta_hat_deg - r.theta_true_deg for r in recs])
    row = res.summary.get(ARM_NSP_PERTURBED, 4.0)
    assert row.rmse_deg == pytest.approx(math.sqrt(sum(e * e for e in err) / len(err)), rel=1e-12)
    assert row.bias_deg == pytest.approx(sum(err) / len(err), rel=1e-12, abs=1e-15)
    for row in res.summary.rows:
        assert row.rmse_deg >= abs(row.bias_deg) - 1e-12


def test_failed_rows_excluded():
    trials = run_trials(replace(SMALL, num_trials=3))
    trials[0].theta_hat_nsp_perturbed = math.nan
    trials[0].errors = ("nsp_perturbed: synthetic",)
    s = summarize(arm_records(trials))
    assert s.get(ARM_NSP_PERTURBED, 0.0).n_trials == 2
    assert s.n_failed[(ARM_NSP_PERTURBED, 0.0)] == 1
    assert s.get(ARM_ORIGINAL).n_trials == 3


def test_paired_bootstrap_against_known_data():
    rng = np.random.default_rng(0)
    base = rng.standard_normal(500)
    errors = np.column_stack([base, 2 * base, 2 * base])
    b = paired_bootstrap_rmse(errors, n_boot=500)
    np.testing.assert_allclose(b["rmse"][1], 2 * b["rmse"][0])
    # columns 1 and 2 identical: difference is exactly zero in every resample
    np.testing.assert_array_equal(b["diff_ci"][1], [0.0, 0.0])
    assert b["diff_ci"][0][0] > 0
    lo, hi = b["rmse_ci"][0]
    assert lo <= b["rmse"][0] <= hi


def test_error_matrix_pairs_levels():
    trials = run_trials(replace(SMALL, num_trials=4, snr_db=-5.0))
    levels, err = error_matrix(trials)
    assert list(levels) == [0.0, 1.0, 4.0]
    assert err.shape == (4, 3)


def test_leakage_law_is_linear_in_h_squared():
    law = leakage_law(run_trials(replace(SMALL, num_trials=50, h_rms_values=(1.0, 2.0, 3.0, 4.0))))
    assert law["slope"] > 0
    assert law["r2"] >= 0.95


def test_low_snr_degradation_appears():
    # with the noise floor in play, projecting onto the perturbed channel costs accuracy
    cfg = ExperimentConfig(num_trials=1000, snr_db=-5.0)
    s = run_experiment(cfg).summary
    assert s.get(ARM_NSP_PERTURBED, 4.0).rmse_deg > s.get(ARM_NSP).rmse_deg
    assert s.get(ARM_NSP).rmse_deg > s.get(ARM_ORIGINAL).rmse_deg
