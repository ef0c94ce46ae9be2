import math

import numpy as np
import pytest

from bergman.exceptions import DomainError
from bergman.weights import BUILTIN_WEIGHTS
from bergman.weights import Weight
from bergman.weights import check_suitability
from bergman.weights import log_q_factor
from bergman.weights import make_builtin_weight
from bergman.weights import phi
from bergman.weights import psi
from bergman.weights import q_factor
from bergman.weights import weight_complex


def _constant(y: np.ndarray, k: int) -> np.ndarray:
    return np.ones_like(y) if k == 0 else np.zeros_like(y)


def test_builtin_values() -> None:
    gamma = make_builtin_weight("gamma")
    assert gamma.rho(2.5) == 2.5
    assert gamma.rho(2.5, 1) == 1.0
    assert gamma.rho(2.5, 2) == 0.0

    expcap = make_builtin_weight("expcap")
    assert expcap.rho(1.0) == pytest.approx(1 - math.exp(-1), rel=1e-15)

    logplus = make_builtin_weight("logplus")
    assert logplus.rho(0.0, 1) == 1.0
    assert logplus.rho(3.0, 1) == pytest.approx(0.25)


def test_unknown_weight() -> None:
    with pytest.raises(DomainError, match="gamma, expcap, logplus"):
        make_builtin_weight("flat")


def test_derivative_order_limit() -> None:
    with pytest.raises(DomainError):
        make_builtin_weight("gamma").rho(1.0, 5)


@pytest.mark.parametrize("name", BUILTIN_WEIGHTS)
def test_builtins_are_suitable(name: str) -> None:
    report = check_suitability(make_builtin_weight(name))
    assert report.passed, [c for c in report.checks if not c.passed]


def test_expcap_log_concavity_margin() -> None:
    report = check_suitability(make_builtin_weight("expcap"))
    assert report["log_rate_decreasing"].worst_margin < 0


def test_constant_weight_is_not_suitable() -> None:
    report = check_suitability(Weight("constant", _constant))
    assert not report.passed
    assert not report["rho_vanishes_at_zero"].passed


def test_failing_nodes_are_reported() -> None:
    def broken(y: np.ndarray, k: int) -> np.ndarray:
        if np.any(y > 5.0):
            raise ArithmeticError("overflow")
        return y.copy() if k == 0 else (np.ones_like(y) if k == 1 else np.zeros_like(y))

    report = check_suitability(Weight("broken", broken))
    increasing = report["rho_increasing"]
    assert not increasing.passed
    assert increasing.failed_nodes
    assert min(increasing.failed_nodes) > 5.0


@pytest.mark.parametrize(
    "b, k, expected",
    [
        (1.0, 0, 0.0),
        (2.0, 1, -0.5),
        (2.0, 2, 0.25),
    ]
)
def test_phi_gamma(b: float, k: int, expected: float) -> None:
    assert phi(make_builtin_weight("gamma"), b, k) == pytest.approx(expected)


def test_phi_domain() -> None:
    with pytest.raises(DomainError):
        phi(make_builtin_weight("gamma"), 0.0)


@pytest.mark.parametrize(
    "n, b, k, expected",
    [
        (2, 1.0, 0, -math.log(4.0)),
        (3, 2.0, 1, -1.5),
        (2, 1.0, 2, 2.0),
    ]
)
def test_psi_gamma(n: int, b: float, k: int, expected: float) -> None:
    assert psi(make_builtin_weight("gamma"), n, b, k) == pytest.approx(expected)


def test_psi_matches_finite_differences() -> None:
    w = make_builtin_weight("logplus")
    h = 1e-4
    for n in (2, 3, 4):
        center = psi(w, n, 1.3)
        left, right = psi(w, n, 1.3 - h), psi(w, n, 1.3 + h)
        assert psi(w, n, 1.3, 1) == pytest.approx((right - left) / (2 * h), rel=1e-6)
        assert psi(w, n, 1.3, 2) == pytest.approx((right - 2 * center + left) / h ** 2, rel=1e-4)


def test_q_factor_examples() -> None:
    assert q_factor(make_builtin_weight("gamma"), 2, 1.0) == pytest.approx(1.0)
    assert q_factor(make_builtin_weight("gamma"), 4, 2.0) == pytest.approx(0.0625)
    e = math.e
    assert q_factor(make_builtin_weight("expcap"), 3, 1.0) == pytest.approx(e / (e - 1) ** 3, rel=1e-12)


@pytest.mark.parametrize("name", BUILTIN_WEIGHTS)
def test_log_q_factor(name: str) -> None:
    w = make_builtin_weight(name)
    for n in (2, 3, 5):
        assert log_q_factor(w, n, 0.7) == pytest.approx(math.log(q_factor(w, n, 0.7)), rel=1e-12)


def test_weight_complex_examples() -> None:
    gamma = make_builtin_weight("gamma")
    one = weight_complex(gamma, 1.0, 3.0, 2)
    assert one.log_mag == pytest.approx(0.0, abs=1e-15)
    assert one.phase == pytest.approx(0.0, abs=1e-15)

    assert weight_complex(gamma, 2.0, 0.0, 2).to_complex() == pytest.approx(0.25)

    z = weight_complex(gamma, 1 + 1j, 1.0, 2)
    assert z.log_mag == pytest.approx(-1.5 * math.log(2.0))
    assert z.phase == pytest.approx(-0.75 * math.pi)


@pytest.mark.parametrize("name", BUILTIN_WEIGHTS)
def test_weight_complex_on_real_axis(name: str) -> None:
    w = make_builtin_weight(name)
    z = weight_complex(w, 0.8, 4.0, 3)
    expected = -4.0 * float(w.log_rho(0.8)) + log_q_factor(w, 3, 0.8)
    assert z.log_mag == pytest.approx(expected, rel=1e-12)
    assert z.phase == pytest.approx(0.0, abs=1e-12)


def test_weight_complex_domain() -> None:
    with pytest.raises(DomainError, match="Re T > 0"):
        weight_complex(make_builtin_weight("gamma"), -0.5 + 1j, 1.0)
    with pytest.raises(DomainError, match="no analytic extension"):
        weight_complex(Weight("constant", _constant), 1.0, 1.0)
