"""
Holomorphic Siegel-slice kernel K⁰_α and harmonic half-space kernel R_α.

R_α is computed by two routes that share nothing but ρ̃_α: a single radial
quadrature with the ₀F₁ sphere factor, and the reduction to K⁰_α through a
Gauss–Jacobi integral over t ∈ [-1, 1] (or 2·Re K⁰_α when n = 2). For the
gamma weight ρ(y) = y both have closed forms.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import special

from bergman.exceptions import DomainError
from bergman.numerics.logcomplex import LogComplex
from bergman.numerics.logcomplex import logc_sum
from bergman.numerics.quadrature import jacobi_rule
from bergman.numerics.quadrature import quad_semiinfinite
from bergman.numerics.special import hyp0f1
from bergman.numerics.special import sphere_area
from bergman.transform import DEFAULT_TOL
from bergman.transform import rho_tilde_for
from bergman.weights import Weight


logger = logging.getLogger(__name__)


DEFAULT_KERNEL_TOL = 1e-12

JACOBI_START = 32
JACOBI_MAX = 1024

RADIAL = "radial"
HOLOMORPHIC = "holomorphic-reduction"
CLOSED_FORM = "closed-form"


@dataclass(frozen=True)
class KernelPoint:
    """
    A pair of points of H^n reduced to what R_α depends on: the horizontal
    separation d = |x - a| and the heights y, b.
    """
    n: int
    d: float
    y: float
    b: float

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n}")
        if not self.d >= 0:
            raise DomainError(f"d must be >= 0, got {self.d}")
        if not self.y > 0:
            raise DomainError(f"y must be > 0, got {self.y}")
        if not self.b > 0:
            raise DomainError(f"b must be > 0, got {self.b}")

    @property
    def on_diagonal(self) -> bool:
        return self.d == 0 and self.y == self.b

    def swapped(self) -> "KernelPoint":
        return KernelPoint(self.n, self.d, self.b, self.y)


@dataclass(frozen=True)
class KernelValue:
    """
    A kernel value with its absolute error estimate. `log_value` holds the
    same number in log form, finite even where `value` overflows.
    """
    value: float | complex
    err_est: float
    route: str
    log_value: LogComplex
    converged: bool = True
    rel_err: float = 0.0


def _check_common(n: int, alpha: float) -> None:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n}")
    if not alpha >= 0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")


def _check_point(n: int, p: KernelPoint) -> None:
    if p.n != n:
        raise DomainError(f"KernelPoint is for n={p.n}, kernel requested for n={n}")


def _peak_scale(n: int, alpha: float, decay: float) -> float:
    # r^{n-2} e^{-decay·r} / ρ̃_α(r) peaks near (α + n - 1)/decay.
    return max(alpha + n - 1.0, 1.0) / decay


def real_part(z: LogComplex) -> LogComplex:
    """
    Re z kept in log form (phase 0 or π).
    """
    cos = np.cos(np.asarray(z.phase))
    with np.errstate(divide="ignore"):
        return LogComplex(np.asarray(z.log_mag) + np.log(np.abs(cos)), np.where(cos < 0, np.pi, 0.0))


def _kernel_value(log_value: LogComplex, rel_err: float, route: str, converged: bool, real: bool) -> KernelValue:
    """
    `rel_err` is relative to |log_value|; for real kernels the real part is
    reported and the absolute error carried over unchanged.
    """
    log_abs = float(log_value.log_mag)
    err = rel_err * math.exp(min(log_abs, 700.0)) if np.isfinite(log_abs) else 0.0
    if real:
        log_value = real_part(log_value)
        value: float | complex = float(log_value.real)
        scale = float(log_value.log_mag)
        if np.isfinite(scale) and np.isfinite(log_abs):
            rel_err = rel_err * math.exp(min(log_abs - scale, 700.0))
    else:
        value = complex(log_value.to_complex())
    return KernelValue(value, err, route, log_value, converged, rel_err)


def radial_integral(
    w: Weight,
    n: int,
    alpha: float,
    decay: float,
    factor: Callable[[np.ndarray], LogComplex] | None,
    tol: float,
    power: int = 1,
) -> tuple[LogComplex, float, bool]:
    """
    ∫_0^∞ r^{n-2} e^{-decay·r} ρ̃_α(r)^{-power} · factor(r) dr in log form.
    """
    rho_tilde = rho_tilde_for(w, alpha, min(DEFAULT_TOL, tol))
    worst_rt = [0.0]
    rt_converged = [True]

    def integrand(r: np.ndarray) -> LogComplex:
        log_rt, rt_err, rt_ok = rho_tilde(r)
        worst_rt[0] = max(worst_rt[0], float(np.max(rt_err, initial=0.0)))
        rt_converged[0] = rt_converged[0] and bool(np.all(rt_ok))
        base = LogComplex((n - 2) * np.log(r) - decay * r - power * log_rt, 0.0)
        return base * factor(r) if factor is not None else base

    result = quad_semiinfinite(integrand, decay, tol, scale=_peak_scale(n, alpha, decay))
    if not rt_converged[0]:
        logger.warning(f"rho_tilde did not converge at every node (weight {w.name}, alpha={alpha})")
    return result.log_value, float(result.rel_err) + power * worst_rt[0], result.converged and rt_converged[0]


def log_k0_constant(n: int) -> float:
    """
    log of 2^{n-3}/π^{n-1}.
    """
    return (n - 3) * math.log(2.0) - (n - 1) * math.log(math.pi)


def log_radial_constant(n: int) -> float:
    """
    log of 2^{2-n} π^{(1-n)/2} / Γ((n-1)/2).
    """
    return (2 - n) * math.log(2.0) + 0.5 * (1 - n) * math.log(math.pi) - special.gammaln(0.5 * (n - 1))


def k0_alpha(
    w: Weight,
    n: int,
    alpha: float,
    x: float,
    y: float,
    b: float,
    tol: float = DEFAULT_KERNEL_TOL,
) -> KernelValue:
    """
    The Siegel-slice kernel
    K⁰_α(x+iy; ib) = 2^{n-3}/π^{n-1} ∫_0^∞ r^{n-2} e^{ixr-(b+y)r}/ρ̃_α(r) dr.
    """
    _check_common(n, alpha)
    if not y > 0 or not b > 0:
        raise DomainError(f"k0_alpha requires y > 0 and b > 0, got y={y}, b={b}")

    factor = (lambda r: LogComplex(np.zeros_like(r), x * r)) if x != 0 else None
    log_value, rel_err, converged = radial_integral(w, n, alpha, b + y, factor, tol)
    return _kernel_value(log_value.scale(log_k0_constant(n)), rel_err, RADIAL, converged, real=False)


def _sphere_factor(n: int, d: float) -> Callable[[np.ndarray], LogComplex] | None:
    if d == 0:
        return None
    if n == 2:
        def cosine(r: np.ndarray) -> LogComplex:
            return LogComplex.from_complex(np.cos(r * d))
        return cosine

    def bessel(r: np.ndarray) -> LogComplex:
        return LogComplex.from_complex(hyp0f1(0.5 * (n - 1), -0.25 * (r * d) ** 2))
    return bessel


def r_alpha_radial(
    w: Weight,
    n: int,
    alpha: float,
    p: KernelPoint,
    tol: float = DEFAULT_KERNEL_TOL,
) -> KernelValue:
    """
    R_α by the polar-coordinate formula
    2^{2-n}π^{(1-n)/2}/Γ((n-1)/2) ∫ r^{n-2} e^{-(b+y)r}/ρ̃_α(r) ₀F₁((n-1)/2; -r²d²/4) dr,
    with cos(rd) in place of ₀F₁ when n = 2.
    """
    _check_common(n, alpha)
    _check_point(n, p)
    log_value, rel_err, converged = radial_integral(w, n, alpha, p.b + p.y, _sphere_factor(n, p.d), tol)
    return _kernel_value(log_value.scale(log_radial_constant(n)), rel_err, RADIAL, converged, real=True)


def r_alpha_diagonal(
    w: Weight,
    n: int,
    alpha: float,
    b: float,
    tol: float = DEFAULT_KERNEL_TOL,
) -> KernelValue:
    """
    R_α(a, b; a, b), where the sphere factor is identically 1.
    """
    _check_common(n, alpha)
    if not b > 0:
        raise DomainError(f"b must be > 0, got {b}")
    log_value, rel_err, converged = radial_integral(w, n, alpha, 2.0 * b, None, tol)
    return _kernel_value(log_value.scale(log_radial_constant(n)), rel_err, RADIAL, converged, real=True)


def diagonal_from_slice(w: Weight, n: int, alpha: float, b: float, tol: float = DEFAULT_KERNEL_TOL) -> KernelValue:
    """
    2^{4-2n} ω_{n-1} K⁰_α(ib; ib), the holomorphic expression of the diagonal.
    """
    k0 = k0_alpha(w, n, alpha, 0.0, b, b, tol)
    log_factor = (4 - 2 * n) * math.log(2.0) + math.log(sphere_area(n - 1))
    return _kernel_value(k0.log_value.scale(log_factor), k0.rel_err, HOLOMORPHIC, k0.converged, real=True)


def jacobi_adaptive(
    F: Callable[[np.ndarray], LogComplex],
    lam: float,
    tol: float,
    m_start: int = JACOBI_START,
    m_max: int = JACOBI_MAX,
) -> tuple[LogComplex, float, int]:
    """
    Gauss–Jacobi sum of a log-domain F with the node count doubled until two
    rules agree to `tol` relative to the sum of |terms|.

    Returns (value, relative error estimate, nodes of the final rule).
    """
    def rule(m: int) -> tuple[LogComplex, float]:
        nodes, weights = jacobi_rule(m, lam)
        values = F(nodes)
        log_mag = np.asarray(values.log_mag) + np.log(weights)
        total = logc_sum(LogComplex(log_mag, values.phase))
        absolute = logc_sum(LogComplex(log_mag, 0.0))
        return total, float(absolute.log_mag)

    m = m_start
    previous, _ = rule(m)
    while True:
        m *= 2
        current, log_abs = rule(m)
        gap = logc_sum([current, -previous])
        if np.isneginf(gap.log_mag):
            rel = 0.0
        else:
            rel = math.exp(float(gap.log_mag) - max(float(current.log_mag), log_abs - 30.0))
        floor = 64.0 * np.finfo(float).eps * math.exp(min(log_abs - float(current.log_mag), 700.0)) if np.isfinite(current.log_mag) else 0.0
        if rel <= max(tol, floor) or m >= m_max:
            if rel > max(tol, floor):
                logger.warning(f"Jacobi rule with {m} nodes still differs by {rel:.3e} (tol {tol:.1e})")
            return current, rel, m
        previous = current


def r_alpha_via_holomorphic(
    w: Weight,
    n: int,
    alpha: float,
    p: KernelPoint,
    tol: float = DEFAULT_KERNEL_TOL,
) -> KernelValue:
    """
    R_α through the holomorphic slice: 2·Re K⁰_α(d+iy; ib) for n = 2,
    2^{4-2n} ω_{n-2} ∫_{-1}^{1} (1-t²)^{(n-4)/2} K⁰_α(dt+iy; ib) dt for n > 2.
    """
    _check_common(n, alpha)
    _check_point(n, p)
    if n == 2:
        k0 = k0_alpha(w, n, alpha, p.d, p.y, p.b, tol)
        return _kernel_value(k0.log_value.scale(math.log(2.0)), k0.rel_err, HOLOMORPHIC, k0.converged, real=True)

    converged = True
    worst = 0.0

    def slice_values(t: np.ndarray) -> LogComplex:
        nonlocal converged, worst
        mags = np.empty(t.size)
        phases = np.empty(t.size)
        for i, ti in enumerate(t):
            k0 = k0_alpha(w, n, alpha, p.d * float(ti), p.y, p.b, tol)
            converged &= k0.converged
            worst = max(worst, k0.rel_err)
            mags[i] = k0.log_value.log_mag
            phases[i] = k0.log_value.phase
        return LogComplex(mags, phases)

    if p.d == 0:
        # The slice is constant in t; ∫(1-t²)^{(n-4)/2} dt = B(1/2, (n-2)/2).
        k0 = k0_alpha(w, n, alpha, 0.0, p.y, p.b, tol)
        log_beta = 0.5 * math.log(math.pi) + special.gammaln(0.5 * (n - 2)) - special.gammaln(0.5 * (n - 1))
        integral = k0.log_value.scale(log_beta)
        converged, worst, jacobi_err = k0.converged, k0.rel_err, 0.0
    else:
        integral, jacobi_err, _ = jacobi_adaptive(slice_values, 0.5 * (n - 4), tol)

    log_factor = (4 - 2 * n) * math.log(2.0) + math.log(sphere_area(n - 2))
    return _kernel_value(integral.scale(log_factor), worst + jacobi_err, HOLOMORPHIC, converged, real=True)


def log_k0_gamma_closed(n: int, alpha: float, x: float, y: float, b: float) -> LogComplex:
    """
    log form of 2^{n+α-2} Γ(n+α) / (π^{n-1} Γ(α+1)) · (b - ix + y)^{-n-α}.
    """
    _check_common(n, alpha)
    if not y > 0 or not b > 0:
        raise DomainError(f"requires y > 0 and b > 0, got y={y}, b={b}")
    log_const = (
        (n + alpha - 2) * math.log(2.0)
        + special.gammaln(n + alpha)
        - (n - 1) * math.log(math.pi)
        - special.gammaln(alpha + 1)
    )
    return LogComplex.from_log(-(n + alpha) * np.log(complex(b + y, -x))).scale(log_const)


def k0_gamma_closed(n: int, alpha: float, x: float, y: float, b: float) -> complex:
    """
    The Siegel-slice kernel for ρ(y) = y in closed form.
    """
    return complex(log_k0_gamma_closed(n, alpha, x, y, b).to_complex())


def r_alpha_gamma_closed(n: int, alpha: float, p: KernelPoint, tol: float = DEFAULT_KERNEL_TOL) -> KernelValue:
    """
    R_α for ρ(y) = y:
    2^{α-n+3}Γ(α+n)/(π^{n/2}Γ(α+1)Γ((n-2)/2)) ∫ (1-t²)^{(n-4)/2} (y+b-idt)^{-α-n} dt.

    For n = 2 the same chain gives 2·Re K⁰_α(d+iy; ib).
    """
    _check_common(n, alpha)
    _check_point(n, p)
    if n == 2:
        log_value = log_k0_gamma_closed(2, alpha, p.d, p.y, p.b).scale(math.log(2.0))
        return _kernel_value(log_value, 0.0, CLOSED_FORM, True, real=True)

    log_const = (
        (alpha - n + 3) * math.log(2.0)
        + special.gammaln(alpha + n)
        - 0.5 * n * math.log(math.pi)
        - special.gammaln(alpha + 1)
        - special.gammaln(0.5 * (n - 2))
    )

    def integrand(t: np.ndarray) -> LogComplex:
        return LogComplex.from_log(-(alpha + n) * np.log(p.y + p.b - 1j * p.d * t))

    integral, rel_err, _ = jacobi_adaptive(integrand, 0.5 * (n - 4), tol)
    return _kernel_value(integral.scale(log_const), rel_err, CLOSED_FORM, True, real=True)


def k0_fourier_check(
    w: Weight,
    alpha: float,
    xi: float,
    y: float,
    b: float,
    x_max: float = 4000.0,
    panel: float = 1.0,
) -> tuple[complex, float]:
    """
    Invert the n = 2 gamma slice numerically: ∫_R K⁰_α(x+iy; ib) e^{-iξx} dx
    by Gauss–Legendre panels on [-x_max, x_max], against the transform
    e^{-(b+y)ξ}/ρ̃_α(ξ) (which is supported on ξ > 0).

    Returns (numeric, expected).
    """
    if w.name != "gamma":
        raise DomainError("k0_fourier_check uses the closed-form slice of the gamma weight")
    if not xi > 0:
        raise DomainError(f"xi must be > 0, got {xi}")
    nodes, weights = np.polynomial.legendre.leggauss(24)
    edges = np.arange(-x_max, x_max, panel)
    x = (edges[:, None] + 0.5 * panel * (nodes[None, :] + 1.0)).ravel()
    wts = np.tile(0.5 * panel * weights, edges.size)
    kernel = log_k0_gamma_closed(2, alpha, 0.0, y, b)
    log_const = float(kernel.log_mag) + (2 + alpha) * math.log(b + y)
    values = np.exp(log_const) * (b + y - 1j * x) ** (-(2.0 + alpha)) * np.exp(-1j * xi * x)
    numeric = complex(np.sum(wts * values))
    log_rt, _, _ = rho_tilde_for(w, alpha)(np.array([xi]))
    expected = math.exp(-(b + y) * xi - float(log_rt[0]))
    return numeric, expected
