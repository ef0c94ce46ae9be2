"""
Leading asymptotic terms of R_α as α → ∞ and numeric expansion fits.

On the diagonal R_α(b) ≈ α^{n-1} ρ(b)^{-α} C_n Q(b). Off the diagonal the
leading term evaluates ρ(T)^{-α}Q(T) at the complex midpoint
T = (y+b)/2 - i·d·t/2 of the analytically continued weight and averages it
over t with the interval operator I_t (for n = 2, 2·Re at t = 1).
"""

import logging
import math
from collections.abc import Callable
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from bergman.exceptions import DomainError
from bergman.kernels import KernelPoint
from bergman.kernels import jacobi_adaptive
from bergman.kernels import real_part
from bergman.numerics.logcomplex import LogComplex
from bergman.numerics.quadrature import quad_jacobi
from bergman.numerics.special import sphere_area
from bergman.weights import Weight
from bergman.weights import log_q_factor
from bergman.weights import weight_complex


logger = logging.getLogger(__name__)


DEFAULT_ALPHAS = (25.0, 50.0, 100.0, 200.0, 400.0)

# Above this the least-squares design no longer separates the coefficients.
ILL_CONDITIONED = 1e10


def _check(n: int, alpha: float) -> None:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n}")
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")


def log_c_n(n: int) -> float:
    """
    log C_n, C_n = 2^{3-2n} / (π^{(n-1)/2} Γ((n-1)/2)).
    """
    return (3 - 2 * n) * math.log(2.0) - 0.5 * (n - 1) * math.log(math.pi) - special.gammaln(0.5 * (n - 1))


def log_diag_leading(w: Weight, n: int, alpha: float, b: float) -> float:
    _check(n, alpha)
    if not b > 0:
        raise DomainError(f"b must be > 0, got {b}")
    return (
        (n - 1) * math.log(alpha)
        - alpha * float(w.log_rho(np.asarray(b)))
        + log_c_n(n)
        + float(log_q_factor(w, n, b))
    )


def diag_leading(w: Weight, n: int, alpha: float, b: float) -> float:
    """
    α^{n-1} ρ(b)^{-α} C_n Q(b).
    """
    return math.exp(log_diag_leading(w, n, alpha, b))


def i_t(F: Callable[[np.ndarray], LogComplex], n: int, m: int | None = None, tol: float = 1e-12) -> LogComplex:
    """
    I_t[F] = 2^{2-2n} ω_{n-2} ∫_{-1}^{1} (1-t²)^{(n-4)/2} F(t) dt for n > 2.

    With `m` the m-point Gauss–Jacobi rule is used as is; otherwise nodes
    are doubled until two rules agree to `tol`.
    """
    if n <= 2:
        raise DomainError(f"I_t is defined for n > 2, got n={n}")
    lam = 0.5 * (n - 4)
    if m is None:
        integral, _, _ = jacobi_adaptive(F, lam, tol)
    else:
        integral = quad_jacobi(F, lam, m)
    return integral.scale((2 - 2 * n) * math.log(2.0) + math.log(sphere_area(n - 2)))


def leading_bracket(w: Weight, n: int, alpha: float, p: KernelPoint, m_nodes: int | None = None) -> LogComplex:
    """
    2·Re[ρ(T)^{-α}Q(T)] at T = (y+b)/2 - i·d/2 for n = 2, and
    I_t[ρ(T)^{-α}Q(T)] at T = (y+b)/2 - i·d·t/2 for n > 2, in log form.
    """
    if p.n != n:
        raise DomainError(f"KernelPoint is for n={p.n}, requested n={n}")
    mid = 0.5 * (p.y + p.b)
    if n == 2:
        value = weight_complex(w, complex(mid, -0.5 * p.d), alpha, n)
        return real_part(value.scale(math.log(2.0)))

    def along_t(t: np.ndarray) -> LogComplex:
        return weight_complex(w, mid - 0.5j * p.d * t, alpha, n)
    return real_part(i_t(along_t, n, m_nodes))


def log_offdiag_leading(w: Weight, n: int, alpha: float, p: KernelPoint, m_nodes: int | None = None) -> LogComplex:
    _check(n, alpha)
    bracket = leading_bracket(w, n, alpha, p, m_nodes)
    if n == 2:
        return bracket.scale(math.log(alpha) - math.log(4.0 * math.pi))
    return bracket.scale((n - 1) * (math.log(alpha) - math.log(math.pi)))


def offdiag_leading(w: Weight, n: int, alpha: float, p: KernelPoint, m_nodes: int | None = None) -> float:
    """
    Leading term of R_α off the diagonal, truncated at c₀ = 1:
    α/(4π)·2·Re[ρ(T)^{-α}Q(T)] for n = 2 and α^{n-1}/π^{n-1}·I_t[ρ(T)^{-α}Q(T)]
    for n > 2. At d = 0 both reduce to diag_leading.
    """
    return float(log_offdiag_leading(w, n, alpha, p, m_nodes).real)


@dataclass(frozen=True)
class ExpansionFit:
    """
    value ≈ Σ_j coefficients[j] α^{-j}. `uncertainty[j]` is the largest
    change in c_j over the leave-one-out refits.
    """
    alphas: tuple[float, ...]
    coefficients: np.ndarray
    residual_norm: float
    uncertainty: np.ndarray
    condition: float

    @property
    def ill_conditioned(self) -> bool:
        return self.condition > ILL_CONDITIONED

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    def __call__(self, alpha: ArrayLike) -> np.ndarray | float:
        a = np.asarray(alpha, dtype=float)
        out = np.polynomial.polynomial.polyval(1.0 / a, self.coefficients)
        return float(out) if out.ndim == 0 else out


def _validate_samples(samples: Sequence[tuple[float, float]], minimum: int) -> tuple[np.ndarray, np.ndarray]:
    if len(samples) < minimum:
        raise DomainError(f"Need at least {minimum} samples, got {len(samples)}")
    alphas = np.array([a for a, _ in samples], dtype=float)
    values = np.array([v for _, v in samples], dtype=float)
    if np.any(~(alphas > 0)) or np.any(np.diff(alphas) <= 0):
        raise DomainError("Sample alphas must be positive and strictly increasing")
    if np.any(~np.isfinite(values)):
        raise DomainError("Sample values must be finite")
    return alphas, values


def _lstsq(alphas: np.ndarray, values: np.ndarray, k: int) -> tuple[np.ndarray, float, float]:
    design = np.vander(1.0 / alphas, k + 1, increasing=True)
    norms = np.linalg.norm(design, axis=0)
    scaled = design / norms
    coef, *_ = np.linalg.lstsq(scaled, values, rcond=None)
    coef = coef / norms
    residual = float(np.linalg.norm(design @ coef - values))
    return coef, residual, float(np.linalg.cond(scaled))


def richardson_fit(samples: Sequence[tuple[float, float]], k: int) -> ExpansionFit:
    """
    Least-squares fit of Σ_{j<=k} c_j α^{-j} to (α, value) samples.
    """
    if k < 0:
        raise DomainError(f"Fit order must be >= 0, got {k}")
    alphas, values = _validate_samples(samples, k + 2)
    coef, residual, condition = _lstsq(alphas, values, k)
    if condition > ILL_CONDITIONED:
        logger.warning(f"Expansion fit of order {k} is ill-conditioned (condition {condition:.2e}); widen the alpha range")

    spread = np.zeros_like(coef)
    for i in range(alphas.size):
        keep = np.arange(alphas.size) != i
        refit, _, _ = _lstsq(alphas[keep], values[keep], k)
        spread = np.maximum(spread, np.abs(refit - coef))
    logger.debug(f"Expansion fit order {k}: coefficients {coef}, residual {residual:.3e}")
    return ExpansionFit(tuple(alphas.tolist()), coef, residual, spread, condition)


def richardson_extrapolate(values: Sequence[float], p: int = 1, r: float = 2.0) -> float:
    """
    Richardson table for a sequence at α, rα, r²α, … whose error is a
    series in α^{-p}, α^{-p-1}, …; each level removes the next power.
    """
    n = len(values)
    if n < 2:
        raise DomainError("richardson_extrapolate requires at least two values")
    if not r > 1:
        raise DomainError(f"Ratio must be > 1, got {r}")
    vals = [float(v) for v in values]
    for j in range(1, n):
        factor = r ** (p + j - 1)
        for i in range(n - 1, j - 1, -1):
            vals[i] = (factor * vals[i] - vals[i - 1]) / (factor - 1.0)
    return vals[-1]


def convergence_order(samples: Sequence[tuple[float, float]]) -> float:
    """
    Least-squares slope of log|error| against log α.
    """
    if len(samples) < 3:
        raise DomainError(f"convergence_order needs at least 3 samples, got {len(samples)}")
    alphas = np.array([a for a, _ in samples], dtype=float)
    errors = np.array([e for _, e in samples], dtype=float)
    if np.any(~(errors > 0)):
        raise DomainError("convergence_order needs positive errors")
    if np.any(~(alphas > 0)):
        raise DomainError("convergence_order needs positive alphas")
    slope, _ = np.polyfit(np.log(alphas), np.log(errors), 1)
    return float(slope)
