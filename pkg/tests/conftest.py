import numpy as np
import pytest

from nmqrt.ensemble import RateEnsemble, TlsModel
from nmqrt.figures import figure_ensemble

_CRITERIA = {}


def record(number, ok, detail):
    """Register one part of an acceptance criterion; a criterion passes when all its parts do."""
    parts = _CRITERIA.setdefault(number, [])
    parts.append((bool(ok), detail))
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        parts = _CRITERIA[number]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def two_rate():
    return RateEnsemble([1.0, 3.0], [0.5, 0.5])


@pytest.fixture
def fig1_model():
    """Free decay on the b = 2.15 exponential set in mean-rate units."""
    return TlsModel(figure_ensemble(2.15), gamma_phi=0.02)


@pytest.fixture
def fig3_model():
    return TlsModel(figure_ensemble(2.15), gamma_phi=0.02, omega_rabi=0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
