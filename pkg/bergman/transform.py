"""
The weighted Laplace transform ρ̃_α(t) = ∫_0^∞ ρ(y)^α e^{-2ty} dy.

Every kernel formula divides by ρ̃_α, so it is computed in log form with
the integrand normalised at its peak, and memoised per (weight, α, tol)
because kernel quadratures with a common node cluster re-query the same t.
"""

import logging
import threading
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from bergman.exceptions import DomainError
from bergman.numerics.logcomplex import LogComplex
from bergman.numerics.quadrature import quad_semiinfinite_rows
from bergman.numerics.special import log_gamma
from bergman.weights import Weight


logger = logging.getLogger(__name__)


DEFAULT_TOL = 1e-13

_BATCH = 256
_CACHE_LIMIT = 500_000
_NEWTON_STEPS = 100
_LOG_Y_RANGE = 700.0


@dataclass(frozen=True)
class RhoTildeEval:
    """
    log ρ̃_α(t) with the relative error estimate on ρ̃.
    """
    log_value: float
    err_est: float
    alpha: float
    t: float
    converged: bool = True


def _log_rate(w: Weight, y: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        return w.rho(y, 1) / w.rho(y)


def _log_rate_slope(w: Weight, y: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        rho = w.rho(y)
        rate = w.rho(y, 1) / rho
        return w.rho(y, 2) / rho - rate ** 2


def peak_location(w: Weight, alpha: float, t: np.ndarray) -> np.ndarray:
    """
    Maximiser y* of α·log ρ(y) - 2ty, i.e. the root of α·ρ'/ρ = 2t.

    The left side decreases in y for suitable weights, so a bracketed
    Newton iteration in log y with bisection fallback always converges.
    Returns 0 for α = 0, where the integrand is maximal at the boundary.
    """
    t = np.asarray(t, dtype=float)
    if alpha == 0:
        return np.zeros_like(t)

    lo = np.full_like(t, -_LOG_Y_RANGE)
    hi = np.full_like(t, _LOG_Y_RANGE)
    v = np.log(np.maximum(alpha / (2.0 * t), 1e-300)).clip(-_LOG_Y_RANGE + 1, _LOG_Y_RANGE - 1)
    for _ in range(_NEWTON_STEPS):
        y = np.exp(v)
        g = alpha * _log_rate(w, y) - 2.0 * t
        g = np.where(np.isnan(g), np.inf, g)
        lo = np.where(g > 0, v, lo)
        hi = np.where(g <= 0, v, hi)
        slope = alpha * _log_rate_slope(w, y) * y
        with np.errstate(all="ignore"):
            step = v - g / slope
        bisect = 0.5 * (lo + hi)
        v = np.where(np.isfinite(step) & (step > lo) & (step < hi), step, bisect)
        if np.all(hi - lo < 1e-12):
            break
    return np.exp(v)


def laplace_peak(w: Weight, alpha: float, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Peak value M of α·log ρ(y) - 2ty and the node scale y* + 1/(2t) for each t.
    """
    y_star = peak_location(w, alpha, t)
    if alpha > 0:
        peak = alpha * w.log_rho(y_star) - 2.0 * t * y_star
    else:
        peak = np.zeros_like(t)
    return peak, y_star + 0.5 / t


def exponent_spread(w: Weight, alpha: float, t: np.ndarray, peak: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """
    Size of the exponents α·log ρ(y) and 2ty that cancel against the peak
    near the node scale; the quadrature rounding floor grows with it.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        spread = np.abs(peak) + 4.0 * t * scales
        if alpha > 0:
            spread = spread + alpha * np.abs(w.log_rho(scales))
    return np.nan_to_num(spread, nan=0.0, posinf=0.0)


def _batch_log_rho_tilde(w: Weight, alpha: float, t: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    peak, scales = laplace_peak(w, alpha, t)

    def integrand(y: np.ndarray, rows: np.ndarray) -> LogComplex:
        with np.errstate(divide="ignore"):
            log_rho = w.log_rho(y) if alpha > 0 else 0.0
        return LogComplex(alpha * log_rho - 2.0 * t[rows, None] * y - peak[rows, None], 0.0)

    spread = exponent_spread(w, alpha, t, peak, scales)
    result = quad_semiinfinite_rows(integrand, scales, tol, log_scale=spread)
    log_value = peak + np.asarray(result.log_value.log_mag)
    if np.any(~np.isfinite(log_value)):
        raise DomainError(f"Weight {w.name}: rho_tilde integral diverged or vanished at alpha={alpha}")
    converged = np.broadcast_to(result.row_converged, t.shape)
    return log_value, np.asarray(result.rel_err, dtype=float), converged


class RhoTilde:
    """
    Memoised evaluator of log ρ̃_α(t) for one (weight, α, tol).

    The memo maps t to (log value, relative error, converged); inserts
    happen under a lock, and results never depend on whether a value was
    cached.
    """
    def __init__(self, w: Weight, alpha: float, tol: float = DEFAULT_TOL) -> None:
        if alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {alpha}")
        if tol <= 0:
            raise DomainError(f"tolerance must be positive, got {tol}")
        self.weight = w
        self.alpha = float(alpha)
        self.tol = tol
        self._cache: dict[float, tuple[float, float, bool]] = {}
        self._lock = threading.Lock()

    def _compute(self, t: np.ndarray) -> dict[float, tuple[float, float, bool]]:
        values, errs, converged = _batch_log_rho_tilde(self.weight, self.alpha, t, self.tol)
        return dict(zip(t.tolist(), zip(values.tolist(), errs.tolist(), converged.tolist())))

    def __call__(self, t: ArrayLike) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Return (log ρ̃_α(t), relative error, converged) for an array of t > 0.
        """
        arr = np.asarray(t, dtype=float)
        if np.any(~(arr > 0)):
            raise DomainError("rho_tilde requires t > 0")
        flat = arr.ravel()

        with self._lock:
            missing = sorted({float(x) for x in flat if float(x) not in self._cache})
        for start in range(0, len(missing), _BATCH):
            computed = self._compute(np.array(missing[start:start + _BATCH]))
            with self._lock:
                if len(self._cache) > _CACHE_LIMIT:
                    logger.debug(f"rho_tilde memo for {self.weight.name} exceeded {_CACHE_LIMIT} entries, clearing")
                    self._cache.clear()
                self._cache.update(computed)

        with self._lock:
            found = [self._cache.get(float(x)) for x in flat]
        if any(entry is None for entry in found):
            # Evicted by a concurrent clear; recompute the stragglers directly.
            extra = self._compute(np.array([float(x) for x, entry in zip(flat, found) if entry is None]))
            found = [entry if entry is not None else extra[float(x)] for x, entry in zip(flat, found)]
        log_values = np.array([entry[0] for entry in found]).reshape(arr.shape)
        errs = np.array([entry[1] for entry in found]).reshape(arr.shape)
        converged = np.array([entry[2] for entry in found], dtype=bool).reshape(arr.shape)
        return log_values, errs, converged


_registry: dict[tuple[Weight, float, float], RhoTilde] = {}
_registry_lock = threading.Lock()


def rho_tilde_for(w: Weight, alpha: float, tol: float = DEFAULT_TOL) -> RhoTilde:
    """
    Shared memoised evaluator for (w, α, tol).
    """
    key = (w, float(alpha), float(tol))
    with _registry_lock:
        if key not in _registry:
            _registry[key] = RhoTilde(w, alpha, tol)
        return _registry[key]


def log_rho_tilde(w: Weight, alpha: float, t: float, tol: float = DEFAULT_TOL) -> RhoTildeEval:
    """
    log ρ̃_α(t) = α·M + log ∫ exp(α(log ρ(y) - M) - 2ty) dy with M taken at
    the peak of the integrand.
    """
    if alpha < 0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    values, errs, converged = rho_tilde_for(w, alpha, tol)(np.array([t]))
    return RhoTildeEval(float(values[0]), float(errs[0]), float(alpha), float(t), bool(converged[0]))


def rho_tilde_gamma_closed(alpha: float, t: ArrayLike) -> np.ndarray | float:
    """
    log ρ̃_α(t) = log Γ(α+1) - (α+1)·log(2t) for ρ(y) = y.
    """
    if alpha < 0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"t must be > 0, got {t}")
    out = log_gamma(alpha + 1.0) - (alpha + 1.0) * np.log(2.0 * arr)
    return float(out) if np.ndim(out) == 0 else out
