import numpy as np
import pytest

from spectral_fdr.ensembles import EnsembleInstance, NoiseSpec, SignalSpec, make_rng, sample_instance
from spectral_fdr.montecarlo import (ExperimentConfig, observable_rank, resolve_workers,
                                     run_experiment, true_fdr_trial, WORKERS_ENV)


def test_zero_noise_truth():
    inst = sample_instance(NoiseSpec("wigner", 30), SignalSpec.spikes([5.0, 4.0, 3.0]), make_rng(1),
                           zero_noise=True)
    t = true_fdr_trial(inst, 6)
    assert t.fdr[2] <= 1e-12
    np.testing.assert_allclose(t.fdr[3:], [1 / 4, 2 / 5, 3 / 6], atol=1e-12)


def test_orthogonal_estimate_is_full_false_discovery():
    n = 10
    I = np.eye(n)
    U = I[:, :2]
    inst = EnsembleInstance(np.zeros((n, n)), np.zeros((n, n)), np.zeros((n, n)), U, None,
                            np.array([1.0, 1.0]))
    t = true_fdr_trial(inst, 3, left=I[:, 2:5])
    np.testing.assert_array_equal(t.fdr, 1.0)
    np.testing.assert_array_equal(t.fd, [1.0, 2.0, 3.0])


def test_missing_basis_and_bad_k():
    n = 6
    inst = EnsembleInstance(np.eye(n), np.eye(n), np.zeros((n, n)), None, None, np.ones(1))
    with pytest.raises(ValueError):
        true_fdr_trial(inst, 2)
    inst = sample_instance(NoiseSpec("wigner", n), SignalSpec.spikes([3.0]), make_rng(0))
    with pytest.raises(ValueError):
        true_fdr_trial(inst, n + 1)


def test_rectangular_truth_has_both_sides():
    inst = sample_instance(NoiseSpec("wishart-factor", 30, 60), SignalSpec.spikes([6.0, 4.0]),
                           make_rng(2))
    t = true_fdr_trial(inst, 5)
    for fd, fdr in ((t.fd, t.fdr), (t.fd_right, t.fdr_right)):
        assert np.all((fdr >= 0) & (fdr <= 1))
        np.testing.assert_array_equal(fd / np.arange(1, 6), fdr)


def test_fd_fdr_identity():
    noise, signal = NoiseSpec("wigner", 80), SignalSpec(r=5, kind="well_separated")
    for i in range(3):
        t = true_fdr_trial(sample_instance(noise, signal, make_rng(4, i)), 12)
        np.testing.assert_array_equal(t.fd / np.arange(1, 13), t.fdr)
        assert np.all(t.fdr_upper >= t.fdr - 1e-12)


def test_zero_noise_experiment():
    cfg = ExperimentConfig(NoiseSpec("wigner", 40), SignalSpec(r=4), repetitions=1, k_max=8,
                           zero_noise=True)
    cols = run_experiment(cfg).columns
    k = np.arange(1, 9)
    expected = np.where(k <= 4, 0.0, (k - 4) / k)
    np.testing.assert_allclose(cols["fdr_mc_mean"], expected, atol=1e-12)


def _small_config(**kw):
    noise, signal = NoiseSpec("wishart-factor", 40, 80), SignalSpec(r=4, kind="well_separated",
                                                                     bbp_estimate=0.84)
    base = dict(repetitions=12, k_max=8, master_seed=3, compute=("mc_truth", "estimate", "oracle"))
    base.update(kw)
    return ExperimentConfig(noise, signal, **base)


def test_schedule_independence():
    a = run_experiment(_small_config(workers=1))
    b = run_experiment(_small_config(workers=5))
    assert a.metadata == b.metadata
    assert a.rank_estimates == b.rank_estimates and a.k_hat_distribution == b.k_hat_distribution
    for name in a.columns:
        assert np.array_equal(a.columns[name], b.columns[name])


def test_report_columns_in_range():
    rep = run_experiment(_small_config())
    for name, col in rep.columns.items():
        if name.startswith("fdr"):
            assert np.all((col >= 0) & (col <= 1)), name
        if name.startswith("fd_"):
            assert np.all(col >= 0)
    assert rep.metadata["oracle_law"] == "exact"
    assert "wall_time_s" not in rep.metadata
    assert len(rep.rows()) == 8 and rep.rows()[0]["k"] == 1


def test_timings_are_opt_in():
    rep = run_experiment(_small_config(repetitions=2, record_timings=True))
    assert rep.metadata["wall_time_s"] > 0 and rep.metadata["workers"] >= 1


def test_config_validation():
    noise, signal = NoiseSpec("wigner", 20), SignalSpec(r=3)
    with pytest.raises(ValueError):
        ExperimentConfig(noise, signal, repetitions=0)
    with pytest.raises(ValueError):
        ExperimentConfig(noise, signal, compute=("truth",))
    with pytest.raises(ValueError):
        ExperimentConfig(noise, signal, alpha=1.0)
    assert ExperimentConfig(noise, signal).k_max == 6
    assert ExperimentConfig(noise, SignalSpec(r=15)).k_max == 20


def test_resolve_workers(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2
    with pytest.raises(ValueError):
        resolve_workers(0)


def test_observable_rank():
    assert observable_rank([3.0, 1.0, 0.5], 1.0) == 1
    assert observable_rank(SignalSpec(kind="entangled").thetas, 1.0) == 9


def test_single_spike_truth(single_spike_experiment):
    report, _ = single_spike_experiment
    assert abs(report.columns["fdr_mc_mean"][0] - 0.25) <= 0.05


def test_wigner_panel_agreement(wigner_well_separated_1000):
    report, _ = wigner_well_separated_1000
    cols = report.columns
    assert np.max(np.abs(cols["fdr_estimate_mean"][:20] - cols["fdr_mc_mean"][:20])) <= 0.10


def test_fd_growth(wigner_well_separated_1000):
    report, _ = wigner_well_separated_1000
    fd = report.columns["fd_mc_mean"]
    assert abs((fd[29] - fd[19]) - 9) <= 2
