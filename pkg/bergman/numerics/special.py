"""
Special functions used by the kernel formulas.
"""

import math

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from bergman.exceptions import DomainError


# Below this |z| the power series of 0F1 converges without cancellation.
_SERIES_LIMIT = 1.0
_SERIES_TERMS = 40


def log_gamma(x: ArrayLike) -> np.ndarray | float:
    """
    Natural logarithm of Γ(x) for x > 0.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0) or np.any(~np.isfinite(arr)):
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    out = special.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def sphere_area(n: int) -> float:
    """
    Surface area ω_n = 2π^{n/2}/Γ(n/2) of the unit sphere S^{n-1} in R^n.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"sphere_area requires an integer n >= 1, got {n}")
    return math.exp(math.log(2.0) + 0.5 * n * math.log(math.pi) - special.gammaln(0.5 * n))


def _hyp0f1_series(b: float, z: np.ndarray) -> np.ndarray:
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(_SERIES_TERMS):
        term = term * z / ((b + k) * (k + 1))
        total = total + term
    return total


def _hyp0f1_bessel(b: float, z: np.ndarray) -> np.ndarray:
    # 0F1(ν+1; -x²/4) = Γ(ν+1) (x/2)^{-ν} J_ν(x)
    nu = b - 1.0
    x = 2.0 * np.sqrt(-z)
    log_prefactor = special.gammaln(b) - nu * np.log(0.5 * x)
    return np.exp(log_prefactor) * special.jv(nu, x)


def hyp0f1(b: float, z: ArrayLike) -> np.ndarray | float:
    """
    The confluent limit function 0F1(b; z) for b > 0 and real z <= 0.

    Small arguments are summed as a power series; larger ones go through
    the Bessel function J_{b-1}, which avoids the cancellation the series
    suffers for large negative z.
    """
    if b <= 0:
        raise DomainError(f"hyp0f1 requires b > 0, got b={b}")
    arr = np.asarray(z, dtype=float)
    if np.any(arr > 0):
        raise DomainError("hyp0f1 is only implemented for z <= 0")

    flat = np.atleast_1d(arr).ravel()
    small = np.abs(flat) <= _SERIES_LIMIT
    out = np.empty_like(flat)
    out[small] = _hyp0f1_series(b, flat[small])
    out[~small] = _hyp0f1_bessel(b, flat[~small])
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)
