"""Shared, session-scoped samples and experiments.

The large Monte Carlo runs are computed once and reused by the module tests
and by the acceptance suite.
"""

import time

import numpy as np
import pytest

from spectral_fdr import ensembles, montecarlo
from spectral_fdr.ensembles import NoiseSpec, SignalSpec, make_rng, preset, sample_instance, sample_noise
from spectral_fdr.rank import rank_estimate
from spectral_fdr.spectral import singular_spectrum, symmetric_spectrum

ACCEPTANCE_LINES = []


def record_outcome(label: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


@pytest.fixture(scope="session")
def goe_2000():
    E = sample_noise(NoiseSpec("wigner", 2000), make_rng(101))
    return symmetric_spectrum(E, vectors=False).values


@pytest.fixture(scope="session")
def goe_4000():
    E = sample_noise(NoiseSpec("wigner", 4000), make_rng(102))
    return symmetric_spectrum(E, vectors=False).values


@pytest.fixture(scope="session")
def wishart_500_2000():
    E = sample_noise(NoiseSpec("wishart", 500, 2000), make_rng(103))
    return symmetric_spectrum(E, vectors=False).values


@pytest.fixture(scope="session")
def single_spike_experiment():
    """Wigner n = 2000 with one spike of strength 2, 100 repetitions."""
    cfg = montecarlo.ExperimentConfig(
        NoiseSpec("wigner", 2000), SignalSpec.spikes([2.0]), repetitions=100, k_max=2,
        master_seed=2024)
    return _timed(lambda: montecarlo.run_experiment(cfg, keep_trials=True))


@pytest.fixture(scope="session")
def wigner_well_separated_1000():
    noise, signal = preset("wigner", "well-separated", 1000)
    cfg = montecarlo.ExperimentConfig(noise, signal, repetitions=50, k_max=40, master_seed=1)
    return _timed(lambda: montecarlo.run_experiment(cfg))


@pytest.fixture(scope="session")
def wigner_well_separated_2000():
    noise, signal = preset("wigner", "well-separated", 2000)
    cfg = montecarlo.ExperimentConfig(noise, signal, repetitions=100, k_max=40, master_seed=5)
    return _timed(lambda: montecarlo.run_experiment(cfg))


@pytest.fixture(scope="session")
def wigner_entangled_ranks_1000():
    """Default-threshold rank estimates on 50 entangled Wigner instances."""
    noise, signal = preset("wigner", "entangled", 1000)
    ranks = []
    for i in range(50):
        inst = sample_instance(noise, signal, make_rng(7, i))
        spec = symmetric_spectrum(inst.X, vectors=False)
        ranks.append(rank_estimate(spec).r_hat)
    return ranks, signal


@pytest.fixture(scope="session")
def wishart_factor_well_separated():
    noise, signal = preset("wishart-factor", "well-separated", 500, 1000)
    cfg = montecarlo.ExperimentConfig(noise, signal, repetitions=50, k_max=40, master_seed=3,
                                      compute=("mc_truth", "estimate", "oracle"))
    return _timed(lambda: montecarlo.run_experiment(cfg))


@pytest.fixture(scope="session")
def subthreshold_spike_2000():
    inst = sample_instance(NoiseSpec("wigner", 2000), SignalSpec.spikes([0.5]), make_rng(404))
    spec = symmetric_spectrum(inst.X)
    overlap = float((spec.left_basis[:, 0] @ inst.signal_left_basis[:, 0]) ** 2)
    return spec.values[0], overlap


@pytest.fixture(scope="session")
def spike_2000():
    inst = sample_instance(NoiseSpec("wigner", 2000), SignalSpec.spikes([2.0]), make_rng(405))
    return inst, symmetric_spectrum(inst.X)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
