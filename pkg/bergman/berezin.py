"""
Harmonic Berezin transform of vertical symbols and its expansion operators.

B_α g(b) is evaluated inner-y-first: for every outer node r the average of
g under the probability density ρ(y)^α e^{-2ry}/ρ̃_α(r) is a peak-normalised
quadrature sharing the machinery of the weight transform; the outer
integral then runs against the same density as the diagonal kernel.

Q₂ needs Δ̃² of h(z, w) = g(Im w - |z|²). Functions of u = Im w - |z|² and
s = |z|² stay in that class under Δ̃, so Δ̃ is applied on the pair (u, s)
with the Siegel metric assembled at z = (√s, 0, …, 0).
"""

import abc
import logging
import math
from collections.abc import Callable
from collections.abc import Iterable
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from bergman.exceptions import DomainError
from bergman.kernels import DEFAULT_KERNEL_TOL
from bergman.kernels import r_alpha_diagonal
from bergman.kernels import radial_integral
from bergman.numerics.logcomplex import LogComplex
from bergman.numerics.quadrature import quad_semiinfinite_rows
from bergman.numerics.special import sphere_area
from bergman.transform import DEFAULT_TOL
from bergman.transform import exponent_spread
from bergman.transform import laplace_peak
from bergman.transform import rho_tilde_for
from bergman.weights import Weight
from bergman.weights import make_builtin_weight
from bergman.weights import phi
from bergman.weights import psi


logger = logging.getLogger(__name__)


SymbolEval = Callable[[np.ndarray, int], np.ndarray]

MAX_ORDER = 4
_BATCH = 128
# Inner averages whose outer weight is this far (in log) below the peak
# contribute nothing at double precision.
_NEGLIGIBLE = 40.0
_LOOSE_TOL = 1e-3


@dataclass(frozen=True)
class VerticalSymbol:
    """
    A bounded smooth function g of the vertical coordinate, with exact
    derivatives of order 0..4 and |g| <= bound on (0, ∞).
    """
    name: str
    eval: SymbolEval
    bound: float

    def __call__(self, y, k: int = 0) -> np.ndarray | float:
        if not 0 <= k <= MAX_ORDER:
            raise DomainError(f"Symbol {self.name}: derivative order must be 0..{MAX_ORDER}, got {k}")
        out = self.eval(np.asarray(y, dtype=float), k)
        return float(out) if np.ndim(out) == 0 else out


def _one(y: np.ndarray, k: int) -> np.ndarray:
    return np.ones_like(y) if k == 0 else np.zeros_like(y)


def exp_symbol(c: float = 1.0) -> VerticalSymbol:
    """
    g(y) = e^{-cy} for c >= 0.
    """
    if not c >= 0:
        raise DomainError(f"exp symbol needs c >= 0, got {c}")

    def g(y: np.ndarray, k: int) -> np.ndarray:
        return (-c) ** k * np.exp(-c * y)
    name = "exp" if c == 1.0 else f"exp:{c:g}"
    return VerticalSymbol(name, g, 1.0)


def _inv1p(y: np.ndarray, k: int) -> np.ndarray:
    return (-1.0) ** k * math.factorial(k) / (1.0 + y) ** (k + 1)


def _ratio(y: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return y / (1.0 + y)
    return -_inv1p(y, k)


def scaled(g: VerticalSymbol, c: float) -> VerticalSymbol:
    return linear_combination([(c, g)])


def linear_combination(terms: Iterable[tuple[float, VerticalSymbol]]) -> VerticalSymbol:
    """
    Σ c_i g_i with derivatives taken termwise.
    """
    terms = list(terms)
    if not terms:
        raise DomainError("linear_combination needs at least one term")

    def g(y: np.ndarray, k: int) -> np.ndarray:
        return sum(c * sym.eval(y, k) for c, sym in terms)
    name = " + ".join(f"{c:g}*{sym.name}" for c, sym in terms)
    return VerticalSymbol(name, g, sum(abs(c) * sym.bound for c, sym in terms))


BUILTIN_SYMBOLS = ("one", "exp", "inv1p", "ratio")


def make_symbol(name: str) -> VerticalSymbol:
    """
    Built-in symbol by name; `exp:c` selects e^{-cy}.
    """
    match name.split(":", 1):
        case ["one"]:
            return VerticalSymbol("one", _one, 1.0)
        case ["exp"]:
            return exp_symbol(1.0)
        case ["exp", c]:
            try:
                rate = float(c)
            except ValueError:
                raise DomainError(f"Invalid exp symbol rate: {c!r}") from None
            return exp_symbol(rate)
        case ["inv1p"]:
            return VerticalSymbol("inv1p", _inv1p, 1.0)
        case ["ratio"]:
            return VerticalSymbol("ratio", _ratio, 1.0)
    raise DomainError(f"Unknown symbol {name!r}; expected one of {', '.join(BUILTIN_SYMBOLS)} or exp:c")


def _symbol_average(
    w: Weight,
    alpha: float,
    g: VerticalSymbol,
    t: np.ndarray,
    tol: np.ndarray | float,
) -> tuple[LogComplex, np.ndarray, np.ndarray]:
    """
    ∫ g ρ^α e^{-2ty} dy / ∫ ρ^α e^{-2ty} dy for each t, both integrals on the
    same nodes so that g ≡ 1 gives exactly 1. `tol` may differ per t.

    Returns the averages, their relative errors and per-t convergence.
    """
    peak, scales = laplace_peak(w, alpha, t)
    rows = t.size
    both_t = np.concatenate([t, t])
    both_peak = np.concatenate([peak, peak])

    def integrand(y: np.ndarray, idx: np.ndarray) -> LogComplex:
        with np.errstate(divide="ignore"):
            log_rho = w.log_rho(y) if alpha > 0 else 0.0
        base = LogComplex(alpha * log_rho - 2.0 * both_t[idx, None] * y - both_peak[idx, None], 0.0)
        weight = np.ones_like(y)
        symbol_rows = idx >= rows
        weight[symbol_rows] = g(y[symbol_rows])
        return base * LogComplex.from_complex(weight)

    tols = np.broadcast_to(np.asarray(tol, dtype=float), t.shape)
    spread = exponent_spread(w, alpha, t, peak, scales)
    result = quad_semiinfinite_rows(
        integrand,
        np.concatenate([scales, scales]),
        np.concatenate([tols, tols]),
        log_scale=np.concatenate([spread, spread]),
    )
    log_value = result.log_value
    average = log_value[rows:] / log_value[:rows]
    rel_err = np.asarray(result.rel_err)
    converged = np.asarray(result.row_converged)
    return average, rel_err[:rows] + rel_err[rows:], converged[:rows] & converged[rows:]


def log_berezin_constant(n: int) -> float:
    """
    log of 2^{1-n} π^{1-n} ω_{n-1}.
    """
    return (1 - n) * math.log(2.0) + (1 - n) * math.log(math.pi) + math.log(sphere_area(n - 1))


@dataclass(frozen=True)
class BerezinValue:
    value: float
    rel_err: float
    converged: bool


def berezin_vertical_detail(
    w: Weight,
    n: int,
    alpha: float,
    g: VerticalSymbol,
    b: float,
    tol: float = DEFAULT_KERNEL_TOL,
) -> BerezinValue:
    """
    (B_α g)(a, b) = 2^{1-n}π^{1-n}ω_{n-1} / R_α(a,b;a,b)
    · ∫∫ g(y) ρ(y)^α r^{n-2} e^{-2(b+y)r} / ρ̃_α(r)² dy dr.

    The inner average at an outer node r only needs the accuracy its outer
    weight r^{n-2}e^{-2br}/ρ̃_α(r) carries, so its tolerance is relaxed by
    how far that weight sits below the largest one on the same level.
    """
    if not alpha >= 0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    if not b > 0:
        raise DomainError(f"b must be > 0, got {b}")
    inner_tol = min(tol, 1e-13)
    rho_tilde = rho_tilde_for(w, alpha, min(DEFAULT_TOL, tol))
    worst_inner = 0.0
    inner_converged = True

    def average(r: np.ndarray) -> LogComplex:
        nonlocal worst_inner, inner_converged
        log_rt, _, _ = rho_tilde(r)
        log_weight = (n - 2) * np.log(r) - 2.0 * b * r - log_rt
        below = np.max(log_weight) - log_weight
        row_tol = np.minimum(inner_tol * np.exp(np.minimum(below, _NEGLIGIBLE)), _LOOSE_TOL)
        mags = np.empty(r.size)
        phases = np.empty(r.size)
        for start in range(0, r.size, _BATCH):
            chunk = slice(start, start + _BATCH)
            avg, err, ok = _symbol_average(w, alpha, g, r[chunk], row_tol[chunk])
            mags[chunk] = avg.log_mag
            phases[chunk] = avg.phase
            worst_inner = max(worst_inner, float(np.max(np.minimum(err, 1.0) * np.exp(-below[chunk]), initial=0.0)))
            inner_converged = inner_converged and bool(np.all(ok))
        return LogComplex(mags, phases)

    numerator, num_err, num_ok = radial_integral(w, n, alpha, 2.0 * b, average, tol)
    diagonal = r_alpha_diagonal(w, n, alpha, b, tol)
    ratio = numerator.scale(log_berezin_constant(n)) / diagonal.log_value
    value = float(ratio.real)
    converged = num_ok and inner_converged and diagonal.converged
    if not converged:
        logger.warning(f"Berezin transform at alpha={alpha}, b={b} did not converge")
    if abs(value) > g.bound * (1.0 + 1e-6):
        logger.warning(f"Berezin value {value} exceeds the symbol bound {g.bound}")
    return BerezinValue(value, num_err + worst_inner + diagonal.rel_err, converged)


def berezin_vertical(
    w: Weight,
    n: int,
    alpha: float,
    g: VerticalSymbol,
    b: float,
    tol: float = DEFAULT_KERNEL_TOL,
) -> float:
    return berezin_vertical_detail(w, n, alpha, g, b, tol).value


def berezin_gamma_exp(n: int, alpha: float, c: float, b: float, tol: float = DEFAULT_KERNEL_TOL) -> float:
    """
    B_α e^{-cy} for ρ(y) = y with the inner integral in closed form,
    Γ(α+1)/(2r+c)^{α+1}, leaving a single radial integral.
    """
    if not c >= 0:
        raise DomainError(f"c must be >= 0, got {c}")
    w = make_builtin_weight("gamma")

    def average(r: np.ndarray) -> LogComplex:
        return LogComplex((alpha + 1.0) * (np.log(2.0 * r) - np.log(2.0 * r + c)), 0.0)

    numerator, _, _ = radial_integral(w, n, alpha, 2.0 * b, average, tol)
    denominator, _, _ = radial_integral(w, n, alpha, 2.0 * b, None, tol)
    return float((numerator / denominator).real)


def _check_vertical(w: Weight, n: int, b: float) -> tuple[float, float]:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n}")
    if not b > 0:
        raise DomainError(f"b must be > 0, got {b}")
    d1 = float(phi(w, b, 1))
    d2 = float(phi(w, b, 2))
    if not d2 > 0 or not -d1 > 0:
        raise DomainError(f"Weight {w.name}: Siegel metric degenerate at u={b} (phi'={d1}, phi''={d2})")
    return d1, d2


def siegel_metric_inverse_at_origin(w: Weight, n: int, b: float) -> tuple[float, float]:
    """
    Inverse metric at (0, ib): (-1/φ'(b)) on the n-2 horizontal directions
    and 4/φ''(b) in the w direction.
    """
    d1, d2 = _check_vertical(w, n, b)
    return -1.0 / d1, 4.0 / d2


@dataclass(frozen=True)
class SiegelMetric:
    """
    g_{jk̄} = ∂²φ(u)/∂z_j∂z̄_k with u = Im w - |z|², in coordinates
    (z_1, …, z_{n-2}, w).
    """
    n: int
    phi1: float
    phi2: float
    z: np.ndarray

    @classmethod
    def at(cls, w: Weight, n: int, u: float, s: float) -> "SiegelMetric":
        """
        Metric at the representative point z = (√s, 0, …, 0).
        """
        if s < 0:
            raise DomainError(f"s = |z|² must be >= 0, got {s}")
        d1, d2 = _check_vertical(w, n, u)
        z = np.zeros(n - 2, dtype=complex)
        if n > 2:
            z[0] = math.sqrt(s)
        return cls(n, d1, d2, z)

    def matrix(self) -> np.ndarray:
        m = self.n - 1
        zbar = np.conj(self.z)
        g = np.empty((m, m), dtype=complex)
        g[:-1, :-1] = -self.phi1 * np.eye(m - 1) + self.phi2 * np.outer(zbar, self.z)
        g[:-1, -1] = -0.5j * zbar * self.phi2
        g[-1, :-1] = 0.5j * self.z * self.phi2
        g[-1, -1] = 0.25 * self.phi2
        return g

    def determinant(self) -> float:
        return float(np.real(np.linalg.det(self.matrix())))


@dataclass(frozen=True)
class USPartials:
    F: float
    F_u: float
    F_s: float
    F_uu: float
    F_us: float
    F_ss: float


class USFunction(abc.ABC):
    """
    A function F(u, s) standing for h(z, w) = F(Im w - |z|², |z|²).
    """
    @abc.abstractmethod
    def partials(self, u: float, s: float) -> USPartials:
        ...

    def __call__(self, u: float, s: float) -> float:
        return self.partials(u, s).F


class VerticalLift(USFunction):
    """
    h(z, w) = g(Im w - |z|²).
    """
    def __init__(self, g: VerticalSymbol) -> None:
        self.g = g

    def partials(self, u: float, s: float) -> USPartials:
        g = self.g
        return USPartials(g(u), g(u, 1), 0.0, g(u, 2), 0.0, 0.0)


class SeparableUS(USFunction):
    """
    F(u, s) = f(u)·k(s).
    """
    def __init__(self, f: VerticalSymbol, k: VerticalSymbol) -> None:
        self.f = f
        self.k = k

    def partials(self, u: float, s: float) -> USPartials:
        f, k = self.f, self.k
        return USPartials(
            f(u) * k(s),
            f(u, 1) * k(s),
            f(u) * k(s, 1),
            f(u, 2) * k(s),
            f(u, 1) * k(s, 1),
            f(u) * k(s, 2),
        )


def _hessian(F: USPartials, z: np.ndarray) -> np.ndarray:
    """
    ∂²h/∂z_j∂z̄_k for h = F(Im w - |z|², |z|²).
    """
    m = z.size + 1
    zbar = np.conj(z)
    D = F.F_s - F.F_u
    D_slope = F.F_uu - 2.0 * F.F_us + F.F_ss
    M = np.empty((m, m), dtype=complex)
    M[:-1, :-1] = D * np.eye(m - 1) + D_slope * np.outer(zbar, z)
    M[:-1, -1] = zbar * (F.F_uu - F.F_us) / 2j
    M[-1, :-1] = z * (F.F_us - F.F_uu) / 2j
    M[-1, -1] = 0.25 * F.F_uu
    return M


def tilde_laplace_us(w: Weight, n: int, F: USFunction, u: float, s: float = 0.0) -> float:
    """
    (Δ̃F)(u, s) = Σ g^{j̄k} ∂²h/∂z̄_j∂z_k, contracted by a Hermitian solve.
    """
    metric = SiegelMetric.at(w, n, u, s)
    M = _hessian(F.partials(u, s), metric.z)
    try:
        solved = scipy.linalg.solve(metric.matrix(), M, assume_a="her")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise DomainError(f"Siegel metric is singular at u={u}, s={s}") from e
    return float(np.real(np.trace(solved)))


class TildeLaplaceImage(USFunction):
    """
    Δ̃F as a (u, s) function; its derivatives come from a finite-difference
    stencil of tilde_laplace_us with step `step`·max(1, u).
    """
    def __init__(self, w: Weight, n: int, inner: USFunction, step: float | None = None) -> None:
        self.w = w
        self.n = n
        self.inner = inner
        self.step = 1e-3 if step is None else step
        if not self.step > 0:
            raise DomainError(f"Finite-difference step must be positive, got {step}")

    def _value(self, u: float, s: float) -> float:
        return tilde_laplace_us(self.w, self.n, self.inner, u, s)

    def partials(self, u: float, s: float) -> USPartials:
        hu = self.step * max(1.0, u)
        if not u - hu > 0:
            raise DomainError(f"Finite-difference step {hu} too large at u={u}")
        f0 = self._value(u, s)
        fp = self._value(u + hu, s)
        fm = self._value(u - hu, s)
        F_u = (fp - fm) / (2.0 * hu)
        F_uu = (fp - 2.0 * f0 + fm) / hu ** 2
        if self.n == 2:
            return USPartials(f0, F_u, 0.0, F_uu, 0.0, 0.0)

        hs = self.step * max(1.0, s)
        if s >= 2.0 * hs:
            sp, sm = self._value(u, s + hs), self._value(u, s - hs)
            F_s = (sp - sm) / (2.0 * hs)
            F_ss = (sp - 2.0 * f0 + sm) / hs ** 2
            F_us = (
                self._value(u + hu, s + hs) - self._value(u + hu, s - hs)
                - self._value(u - hu, s + hs) + self._value(u - hu, s - hs)
            ) / (4.0 * hu * hs)
        else:
            # One-sided in s: h is only defined for s >= 0.
            s1, s2, s3 = self._value(u, s + hs), self._value(u, s + 2 * hs), self._value(u, s + 3 * hs)
            F_s = (-3.0 * f0 + 4.0 * s1 - s2) / (2.0 * hs)
            F_ss = (2.0 * f0 - 5.0 * s1 + 4.0 * s2 - s3) / hs ** 2
            du0 = F_u
            du1 = (self._value(u + hu, s + hs) - self._value(u - hu, s + hs)) / (2.0 * hu)
            du2 = (self._value(u + hu, s + 2 * hs) - self._value(u - hu, s + 2 * hs)) / (2.0 * hu)
            F_us = (-3.0 * du0 + 4.0 * du1 - du2) / (2.0 * hs)
        return USPartials(f0, F_u, F_s, F_uu, F_us, F_ss)


def tilde_laplace_squared(w: Weight, n: int, g: VerticalSymbol, b: float, fd_step: float | None = None) -> float:
    """
    (Δ̃²h)(0, ib) for h = g(Im w - |z|²), composing the variable-coefficient
    Δ̃ with itself.
    """
    image = TildeLaplaceImage(w, n, VerticalLift(g), fd_step)
    return tilde_laplace_us(w, n, image, b, 0.0)


def tilde_laplace_oracle(w: Weight, n: int, F: USFunction, u: float, s: float, step: float = 1e-3) -> float:
    """
    Δ̃h by dense central differences in the 2n-2 real coordinates, with the
    metric itself differenced from φ(Im w - |z|²) and a generic solve.
    """
    m = n - 1
    base = np.zeros(2 * m)
    if n > 2:
        base[0] = math.sqrt(s)
    base[2 * m - 1] = u + s

    def coords(x: np.ndarray) -> tuple[float, float]:
        zs = x[: 2 * (m - 1)]
        sq = float(np.sum(zs ** 2))
        return x[2 * m - 1] - sq, sq

    def h(x: np.ndarray) -> float:
        uu, ss = coords(x)
        return F(uu, max(ss, 0.0))

    def potential(x: np.ndarray) -> float:
        uu, _ = coords(x)
        return float(phi(w, uu))

    def complex_hessian(f: Callable[[np.ndarray], float]) -> np.ndarray:
        # real coordinates ordered (x_1, y_1, …, x_{m}, y_{m}) with z_m = w
        real = np.empty((2 * m, 2 * m))
        eye = np.eye(2 * m) * step
        for a in range(2 * m):
            for c in range(2 * m):
                real[a, c] = (
                    f(base + eye[a] + eye[c]) - f(base + eye[a] - eye[c])
                    - f(base - eye[a] + eye[c]) + f(base - eye[a] - eye[c])
                ) / (4.0 * step ** 2)
        xx = real[0::2, 0::2]
        yy = real[1::2, 1::2]
        xy = real[0::2, 1::2]
        yx = real[1::2, 0::2]
        return 0.25 * (xx + yy + 1j * (xy - yx))

    G = complex_hessian(potential)
    M = complex_hessian(h)
    return float(np.real(np.trace(np.linalg.solve(G, M))))


def q1_vertical(w: Weight, n: int, g: VerticalSymbol, b: float) -> float:
    """
    Q₁g(b) = g''(b)/φ''(b) + (n-2)·g'(b)/φ'(b).
    """
    d1, d2 = _check_vertical(w, n, b)
    return g(b, 2) / d2 + (n - 2) * g(b, 1) / d1


def ricci_term_vertical(w: Weight, n: int, g: VerticalSymbol, b: float) -> float:
    """
    ψ''(b)g''(b)/(2φ''(b)²) + (n-2)·ψ'(b)g'(b)/(2φ'(b)²).
    """
    d1, d2 = _check_vertical(w, n, b)
    return psi(w, n, b, 2) * g(b, 2) / (2.0 * d2 ** 2) + (n - 2) * psi(w, n, b, 1) * g(b, 1) / (2.0 * d1 ** 2)


def q2_vertical(
    w: Weight,
    n: int,
    g: VerticalSymbol,
    b: float,
    fd_step: float | None = None,
    ricci_sign: int = -1,
) -> float:
    """
    Q₂g(b) = ½(Δ̃²h)(0, ib) + ricci_sign·[ψ''g''/(2φ''²) + (n-2)ψ'g'/(2φ'²)].

    With ricci_sign = -1 this matches the α⁻² coefficient of B_α g, which is
    exact for the gamma weight; +1 is the alternative sign convention.
    """
    if ricci_sign not in (-1, 1):
        raise DomainError(f"ricci_sign must be -1 or +1, got {ricci_sign}")
    _check_vertical(w, n, b)
    return 0.5 * tilde_laplace_squared(w, n, g, b, fd_step) + ricci_sign * ricci_term_vertical(w, n, g, b)


def q2_gamma_exact(n: int, g: VerticalSymbol, b: float) -> float:
    """
    α⁻² coefficient of B_α g(b) for ρ(y) = y from the beta-prime moments:
    m(m-1)b g' + ½(m-1)(m-6)b² g'' + (3-m)b³ g''' + ½b⁴ g'''' with m = n-1.
    """
    m = n - 1
    return (
        m * (m - 1) * b * g(b, 1)
        + 0.5 * (m - 1) * (m - 6) * b ** 2 * g(b, 2)
        + (3 - m) * b ** 3 * g(b, 3)
        + 0.5 * b ** 4 * g(b, 4)
    )


@dataclass(frozen=True)
class BerezinRow:
    alpha: float
    b: float
    value: float
    g_b: float
    q1: float
    q2: float
    residual1: float
    residual2: float
    converged: bool = True


def berezin_residuals(
    w: Weight,
    n: int,
    g: VerticalSymbol,
    b: float,
    alphas: Sequence[float],
    tol: float = DEFAULT_KERNEL_TOL,
    fd_step: float | None = None,
) -> list[BerezinRow]:
    """
    B_α g(b) with the expansion residuals α(B - g) and α²(B - g - Q₁/α)
    for every α.
    """
    q1 = q1_vertical(w, n, g, b)
    q2 = q2_vertical(w, n, g, b, fd_step)
    g_b = g(b)
    rows = []
    for alpha in alphas:
        result = berezin_vertical_detail(w, n, alpha, g, b, tol)
        diff = result.value - g_b
        rows.append(BerezinRow(
            alpha, b, result.value, g_b, q1, q2,
            alpha * diff,
            alpha ** 2 * (diff - q1 / alpha) if alpha > 0 else math.nan,
            result.converged,
        ))
    return rows
