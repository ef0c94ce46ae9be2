"""
Vertical weight profiles ρ and the quantities derived from them.

A weight is *suitable* when ρ(0) = 0, ρ'(0) > 0, ρ' > 0, (ρ'/ρ)' < 0 on
(0, ∞), it is smooth, and it does not decay too rapidly. The built-in
families are real-analytic and carry their genuine analytic continuation
to the right half-plane, which stands in for the almost-analytic
extension in the off-diagonal leading term.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from dataclasses import field

import numpy as np
from numpy.typing import ArrayLike

from bergman.exceptions import DomainError
from bergman.numerics.logcomplex import LogComplex


logger = logging.getLogger(__name__)


RealEval = Callable[[np.ndarray, int], np.ndarray]
ComplexEval = Callable[[np.ndarray, int], np.ndarray]
LogEval = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Weight:
    """
    A vertical weight profile ρ with exact derivatives.

    `real_eval(y, k)` returns ρ^{(k)}(y); `complex_eval(T, k)` returns the
    analytic extension's k-th derivative for Re T > 0 (orders 0..2). The
    optional log evaluators avoid cancellation in log ρ.
    """
    name: str
    real_eval: RealEval
    complex_eval: ComplexEval | None = None
    eval_order: int = 4
    log_real: LogEval | None = field(default=None, repr=False)
    log_complex: LogEval | None = field(default=None, repr=False)

    def rho(self, y: ArrayLike, k: int = 0) -> np.ndarray:
        if not 0 <= k <= self.eval_order:
            raise DomainError(f"Weight {self.name} has derivatives up to order {self.eval_order}, not {k}")
        return np.asarray(self.real_eval(np.asarray(y, dtype=float), k), dtype=float)

    def log_rho(self, y: ArrayLike) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.log_real is not None:
            return np.asarray(self.log_real(y), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(self.rho(y))

    def rho_complex(self, T: ArrayLike, k: int = 0) -> np.ndarray:
        if self.complex_eval is None:
            raise DomainError(f"Weight {self.name} has no analytic extension")
        return np.asarray(self.complex_eval(np.asarray(T, dtype=complex), k), dtype=complex)

    def log_rho_complex(self, T: ArrayLike) -> np.ndarray:
        T = np.asarray(T, dtype=complex)
        if self.log_complex is not None:
            return np.asarray(self.log_complex(T), dtype=complex)
        return np.log(self.rho_complex(T))


def _gamma_real(y: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return y.copy()
    return np.ones_like(y) if k == 1 else np.zeros_like(y)


def _gamma_complex(T: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return T.copy()
    return np.ones_like(T) if k == 1 else np.zeros_like(T)


def _expcap_real(y: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return -np.expm1(-y)
    return (-1.0) ** (k + 1) * np.exp(-y)


def _expcap_complex(T: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return -np.expm1(-T)
    return (-1.0) ** (k + 1) * np.exp(-T)


def _logplus_real(y: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return np.log1p(y)
    return (-1.0) ** (k + 1) * math.factorial(k - 1) / (1.0 + y) ** k


def _logplus_complex(T: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return np.log1p(T)
    return (-1.0) ** (k + 1) * math.factorial(k - 1) / (1.0 + T) ** k


def _builtins() -> dict[str, Weight]:
    return {
        "gamma": Weight(
            "gamma",
            _gamma_real,
            _gamma_complex,
            log_real=np.log,
            log_complex=np.log,
        ),
        "expcap": Weight(
            "expcap",
            _expcap_real,
            _expcap_complex,
            log_real=lambda y: np.log(-np.expm1(-y)),
            log_complex=lambda T: np.log(-np.expm1(-T)),
        ),
        "logplus": Weight(
            "logplus",
            _logplus_real,
            _logplus_complex,
            log_real=lambda y: np.log(np.log1p(y)),
            log_complex=lambda T: np.log(np.log1p(T)),
        ),
    }


_BUILTINS = _builtins()
BUILTIN_WEIGHTS = tuple(_BUILTINS)


def make_builtin_weight(name: str) -> Weight:
    """
    Return the built-in weight `name`: "gamma" (ρ = y), "expcap"
    (ρ = 1 - e^{-y}) or "logplus" (ρ = log(1 + y)).
    """
    if name not in _BUILTINS:
        raise DomainError(f"Unknown weight {name!r}; valid names: {", ".join(BUILTIN_WEIGHTS)}")
    return _BUILTINS[name]


def _check_positive(b: ArrayLike, what: str) -> np.ndarray:
    arr = np.asarray(b, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{what} requires b > 0, got {b}")
    return arr


def _scalar(value: np.ndarray) -> np.ndarray | float:
    return float(value) if np.ndim(value) == 0 else value


def _log_derivatives(w: Weight, b: np.ndarray, k: int) -> np.ndarray:
    """
    k-th derivative of log ρ via the ratios ℓ_j = ρ^{(j)}/ρ.
    """
    rho = w.rho(b)
    l1 = w.rho(b, 1) / rho
    if k == 1:
        return l1
    l2 = w.rho(b, 2) / rho
    if k == 2:
        return l2 - l1 ** 2
    l3 = w.rho(b, 3) / rho
    if k == 3:
        return l3 - 3.0 * l1 * l2 + 2.0 * l1 ** 3
    l4 = w.rho(b, 4) / rho
    return l4 - 4.0 * l1 * l3 - 3.0 * l2 ** 2 + 12.0 * l1 ** 2 * l2 - 6.0 * l1 ** 4


def phi(w: Weight, b: ArrayLike, k: int = 0) -> np.ndarray | float:
    """
    k-th derivative (k = 0..4) of φ = -log ρ at b > 0.
    """
    arr = _check_positive(b, "phi")
    if not 0 <= k <= 4:
        raise DomainError(f"phi supports derivative orders 0..4, got {k}")
    if k == 0:
        return _scalar(-w.log_rho(arr))
    return _scalar(-_log_derivatives(w, arr, k))


def _metric_parts(w: Weight, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d1 = -_log_derivatives(w, b, 1)
    d2 = -_log_derivatives(w, b, 2)
    if np.any(~(d2 > 0)) or np.any(~(-d1 > 0)):
        raise DomainError(f"Weight {w.name} is not strictly pseudoconvex at b={b}: phi'={d1}, phi''={d2}")
    return d1, d2


def psi(w: Weight, n: int, b: ArrayLike, k: int = 0) -> np.ndarray | float:
    """
    k-th derivative (k = 0..2) of ψ = log(φ''/4 · (-φ')^{n-2}), the log
    determinant of the Siegel metric.
    """
    if n < 2:
        raise DomainError(f"psi requires n >= 2, got {n}")
    if not 0 <= k <= 2:
        raise DomainError(f"psi supports derivative orders 0..2, got {k}")
    arr = _check_positive(b, "psi")
    d1, d2 = _metric_parts(w, arr)
    if k == 0:
        return _scalar(np.log(d2 / 4.0) + (n - 2) * np.log(-d1))
    d3 = -_log_derivatives(w, arr, 3)
    if k == 1:
        return _scalar(d3 / d2 + (n - 2) * d2 / d1)
    d4 = -_log_derivatives(w, arr, 4)
    return _scalar(d4 / d2 - (d3 / d2) ** 2 + (n - 2) * (d3 / d1 - (d2 / d1) ** 2))


def q_factor(w: Weight, n: int, b: ArrayLike) -> np.ndarray | float:
    """
    Q = (ρ'/ρ)^{n-2} (-ρ'/ρ)', the curvature density of the leading term.
    """
    if n < 2:
        raise DomainError(f"q_factor requires n >= 2, got {n}")
    arr = _check_positive(b, "q_factor")
    rate = _log_derivatives(w, arr, 1)
    return _scalar(rate ** (n - 2) * -_log_derivatives(w, arr, 2))


def log_q_factor(w: Weight, n: int, b: ArrayLike) -> np.ndarray | float:
    """
    log Q, computed without forming Q (which under- or overflows for
    extreme b).
    """
    arr = _check_positive(b, "log_q_factor")
    d1, d2 = _metric_parts(w, arr)
    return _scalar((n - 2) * np.log(-d1) + np.log(d2))


def weight_complex(w: Weight, T: ArrayLike, alpha: float, n: int = 2) -> LogComplex:
    """
    ρ(T)^{-α} Q(T) at complex T with Re T > 0, in log form.

    log ρ(T) is the principal branch, which is continuous from the real
    axis as long as Re ρ(T) > 0; this is asserted for every T.
    """
    if w.complex_eval is None:
        raise DomainError(f"Weight {w.name} has no analytic extension")
    T = np.asarray(T, dtype=complex)
    if np.any(~(T.real > 0)):
        raise DomainError(f"Weight {w.name}: T must satisfy Re T > 0")
    rho = w.rho_complex(T)
    if np.any(~(rho.real > 0)):
        raise DomainError(f"Weight {w.name}: T outside the analytic extension's validity region")
    rate = w.rho_complex(T, 1) / rho
    rate_prime = w.rho_complex(T, 2) / rho - rate ** 2
    log_q = (n - 2) * np.log(rate) + np.log(-rate_prime)
    return LogComplex.from_log(-alpha * w.log_rho_complex(T) + log_q)


@dataclass(frozen=True)
class SuitabilityCheck:
    name: str
    grid: tuple[float, float]
    passed: bool
    worst_margin: float
    note: str = ""
    failed_nodes: tuple[float, ...] = ()


@dataclass(frozen=True)
class SuitabilityReport:
    weight: str
    checks: tuple[SuitabilityCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> SuitabilityCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)


def _evaluate(fn: Callable[[np.ndarray], np.ndarray], grid: np.ndarray) -> np.ndarray:
    """
    Evaluate on the whole grid; on failure fall back to node-by-node
    evaluation so that a failing node becomes NaN instead of an error.
    """
    try:
        with np.errstate(all="ignore"):
            return np.asarray(fn(grid), dtype=float) * np.ones_like(grid)
    except Exception:
        out = np.empty_like(grid)
        for i, y in enumerate(grid):
            try:
                with np.errstate(all="ignore"):
                    out[i] = float(np.asarray(fn(np.array([y])), dtype=float).ravel()[0])
            except Exception as ex:
                logger.debug(f"Evaluation failed at y={y}: {ex}")
                out[i] = np.nan
        return out


def _sign_check(
    name: str,
    grid: np.ndarray,
    values: np.ndarray,
    sign: float,
    note: str = "",
) -> SuitabilityCheck:
    good = np.isfinite(values) & (sign * values > 0)
    finite = values[np.isfinite(values)]
    worst = float(np.min(sign * finite) * sign) if finite.size else float("nan")
    return SuitabilityCheck(
        name,
        (float(grid[0]), float(grid[-1])),
        bool(np.all(good)),
        worst,
        note,
        tuple(float(y) for y in grid[~good]),
    )


def check_suitability(w: Weight, y_max: float = 10.0, grid_size: int = 64) -> SuitabilityReport:
    """
    Check the suitability conditions numerically on a log-spaced grid in
    (0, y_max], plus a sequence approaching 0 for the boundary conditions.
    """
    if not y_max > 0:
        raise DomainError(f"y_max must be positive, got {y_max}")
    if grid_size < 16:
        raise DomainError(f"grid_size must be at least 16, got {grid_size}")

    grid = np.geomspace(y_max * 1e-6, y_max, grid_size)
    near_zero = np.geomspace(1e-2, 1e-10, grid_size)
    checks = []

    rho0 = _evaluate(lambda y: w.rho(y), near_zero)
    tail = rho0[np.isfinite(rho0)]
    vanishes = bool(np.all(np.isfinite(rho0))) and abs(float(rho0[-1])) <= 1e-8 and bool(np.all(np.diff(np.abs(rho0)) <= 0))
    checks.append(SuitabilityCheck(
        "rho_vanishes_at_zero",
        (float(near_zero[-1]), float(near_zero[0])),
        vanishes,
        float(np.abs(tail[-1])) if tail.size else float("nan"),
        "rho(y) along y -> 0+",
        tuple(float(y) for y in near_zero[~np.isfinite(rho0)]),
    ))

    slope0 = _evaluate(lambda y: w.rho(y, 1), near_zero)
    checks.append(_sign_check("rho_prime_at_zero", near_zero[::-1], slope0[::-1], 1.0, "rho'(y) along y -> 0+"))

    slope = _evaluate(lambda y: w.rho(y, 1), grid)
    monotone = _sign_check("rho_increasing", grid, slope, 1.0)
    checks.append(monotone)

    curvature = _evaluate(lambda y: _log_derivatives(w, y, 2), grid)
    checks.append(_sign_check("log_rate_decreasing", grid, curvature, -1.0, "(rho'/rho)' < 0"))

    checks.append(SuitabilityCheck(
        "no_rapid_decay",
        (float(grid[0]), float(grid[-1])),
        monotone.passed,
        float("nan"),
        "implied by rho' > 0; not tested by quadrature",
    ))

    derivs = np.stack([_evaluate(lambda y, k=k: w.rho(y, k), grid) for k in range(w.eval_order + 1)])
    smooth = w.eval_order >= 4 and bool(np.all(np.isfinite(derivs)))
    checks.append(SuitabilityCheck(
        "smooth",
        (float(grid[0]), float(grid[-1])),
        smooth,
        float(w.eval_order),
        "finite derivatives up to order 4",
        tuple(float(y) for y in grid[~np.all(np.isfinite(derivs), axis=0)]),
    ))

    for check in checks:
        if not check.passed:
            logger.info(f"Weight {w.name}: suitability check {check.name} failed (worst margin {check.worst_margin})")
    return SuitabilityReport(w.name, tuple(checks))
