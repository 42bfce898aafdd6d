import numpy as np
import pytest

from mimo_pcrb import (
    ArrayConfig,
    RunConfig,
    SceneConfig,
    benchmark_heuristic,
    benchmark_peak_angle,
    compute_moments,
    default_prior,
    optimal_design,
    prior_fisher,
)


@pytest.fixture(scope="session")
def cfg():
    return ArrayConfig(10, 12, 0.5)


@pytest.fixture(scope="session")
def prior():
    return default_prior()


@pytest.fixture(scope="session")
def run():
    # P = 30 dBm, L = 25
    return RunConfig(25, 1.0)


@pytest.fixture(scope="session")
def scene():
    # beta0 / r^2 = -20 dB, psi = 1, sigma^2 = -120 dBm
    return SceneConfig.from_path_loss(0.01, 1.0, 1.0, 1e-15)


def scene_at_snr(snr_db, run, noise=1e-15, phase=0.0):
    mag = np.sqrt(10 ** (snr_db / 10) * noise / (run.power_w * run.num_samples))
    return SceneConfig(mag * np.exp(1j * phase), noise)


@pytest.fixture(scope="session")
def moments(prior, cfg):
    return compute_moments(prior, cfg)


@pytest.fixture(scope="session")
def fp11(prior):
    return prior_fisher(prior).value


@pytest.fixture(scope="session")
def designs(moments, prior, cfg, run):
    return {
        "proposed": optimal_design(moments, run),
        "peak-angle": benchmark_peak_angle(prior, cfg, run),
        "heuristic": benchmark_heuristic(cfg, run),
    }


# acceptance criterion -> list of (part, passed, detail)
ACCEPTANCE = {}


def record(criterion, part, passed, detail):
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    print(f"criterion {criterion} [{part}]: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAILED'} ({d})" for name, good, d in parts)
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'} | {detail}")
