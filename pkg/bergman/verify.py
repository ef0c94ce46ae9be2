"""
The verification suite: identities and convergence rates checked against
closed forms and independent code paths.

Each check measures a deviation (or a fitted decay order) and passes when
it does not exceed its tolerance. The "quick" level runs the gamma-weight
closed-form checks; "full" adds cross-route, Fourier and expansion-fit
checks over all built-in weights.
"""

import functools
import logging
import math
from collections.abc import Callable
from collections.abc import Iterable
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from bergman.asymptotics import convergence_order
from bergman.asymptotics import log_c_n
from bergman.asymptotics import log_diag_leading
from bergman.asymptotics import log_offdiag_leading
from bergman.asymptotics import offdiag_leading
from bergman.asymptotics import richardson_extrapolate
from bergman.asymptotics import richardson_fit
from bergman.berezin import SeparableUS
from bergman.berezin import SiegelMetric
from bergman.berezin import VerticalLift
from bergman.berezin import VerticalSymbol
from bergman.berezin import berezin_gamma_exp
from bergman.berezin import berezin_vertical
from bergman.berezin import exp_symbol
from bergman.berezin import linear_combination
from bergman.berezin import make_symbol
from bergman.berezin import q1_vertical
from bergman.berezin import q2_gamma_exact
from bergman.berezin import q2_vertical
from bergman.berezin import tilde_laplace_oracle
from bergman.berezin import tilde_laplace_us
from bergman.kernels import KernelPoint
from bergman.kernels import diagonal_from_slice
from bergman.kernels import k0_alpha
from bergman.kernels import k0_fourier_check
from bergman.kernels import k0_gamma_closed
from bergman.kernels import r_alpha_diagonal
from bergman.kernels import r_alpha_gamma_closed
from bergman.kernels import r_alpha_radial
from bergman.kernels import r_alpha_via_holomorphic
from bergman.numerics.special import hyp0f1
from bergman.transform import log_rho_tilde
from bergman.transform import rho_tilde_gamma_closed
from bergman.weights import BUILTIN_WEIGHTS
from bergman.weights import Weight
from bergman.weights import log_q_factor
from bergman.weights import make_builtin_weight
from bergman.weights import phi
from bergman.weights import psi


logger = logging.getLogger(__name__)


LEVELS = ("quick", "full")

FIRST_ORDER_ALPHAS = (80.0, 160.0, 320.0)
SECOND_ORDER_ALPHAS = (40.0, 80.0, 160.0, 320.0)
RESIDUAL_ALPHAS = (40.0, 80.0, 160.0, 320.0)
SWEEP_ALPHAS = (25.0, 50.0, 100.0, 200.0, 400.0)


@dataclass(frozen=True)
class CheckResult:
    id: str
    desc: str
    value: float
    tol: float
    passed: bool
    informational: bool = False

    def to_dict(self) -> dict:
        value = self.value if math.isfinite(self.value) else str(self.value)
        out = {"id": self.id, "desc": self.desc, "value": value, "tol": self.tol, "pass": self.passed}
        if self.informational:
            out["informational"] = True
        return out


@dataclass
class VerifyReport:
    level: str
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed and not c.informational]

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "checks": [c.to_dict() for c in self.checks],
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class _Check:
    id: str
    desc: str
    tol: float
    level: str
    fn: Callable[[], float]
    informational: bool


_CHECKS: list[_Check] = []


def check(id: str, desc: str, tol: float, level: str = "quick", informational: bool = False):
    def decorator(fn: Callable[[], float]) -> Callable[[], float]:
        _CHECKS.append(_Check(id, desc, tol, level, fn, informational))
        return fn
    return decorator


def _rel(a: float | complex, b: float | complex) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _builtins() -> list[Weight]:
    return [make_builtin_weight(name) for name in BUILTIN_WEIGHTS]


GAMMA = make_builtin_weight("gamma")
OFF_DIAGONAL = ((0.5, 0.7, 1.2), (1.0, 1.0, 1.0))


# kernels

@check("kernels.gamma_radial_closed", "radial R_α matches the gamma closed form, n in {3,4,5}", 1e-8)
def _gamma_radial_closed() -> float:
    worst = 0.0
    for n in (3, 4, 5):
        for alpha in (0.0, 1.0, 5.0, 20.0):
            for d, y, b in ((0.0, 1.0, 1.0), *OFF_DIAGONAL):
                p = KernelPoint(n, d, y, b)
                worst = max(worst, _rel(r_alpha_radial(GAMMA, n, alpha, p).value, r_alpha_gamma_closed(n, alpha, p).value))
    return worst


@check("kernels.hand_values", "gamma diagonal at b=1, α=0: 3/(8π²) for n=4 and 1/(4π) for n=3", 1e-8)
def _hand_values() -> float:
    n4 = r_alpha_radial(GAMMA, 4, 0.0, KernelPoint(4, 0.0, 1.0, 1.0)).value
    n3 = r_alpha_radial(GAMMA, 3, 0.0, KernelPoint(3, 0.0, 1.0, 1.0)).value
    return max(_rel(n4, 3.0 / (8.0 * math.pi ** 2)), _rel(n3, 1.0 / (4.0 * math.pi)))


@check("kernels.n2_chain", "n=2 gamma diagonal at b=1 equals (α+1)/(2π)", 1e-8)
def _n2_chain() -> float:
    return max(
        _rel(r_alpha_diagonal(GAMMA, 2, alpha, 1.0).value, (alpha + 1.0) / (2.0 * math.pi))
        for alpha in (0.0, 1.0, 5.0, 20.0, 100.0)
    )


@check("kernels.k0_closed", "K⁰_α quadrature matches the gamma closed form", 1e-8)
def _k0_closed() -> float:
    worst = 0.0
    for n in (2, 3, 4):
        for alpha in (0.0, 1.0, 5.0, 20.0):
            for x in (0.0, 0.5, 1.0):
                worst = max(worst, _rel(k0_alpha(GAMMA, n, alpha, x, 1.0, 1.0).value, k0_gamma_closed(n, alpha, x, 1.0, 1.0)))
    return worst


def _slice_diagonal(weights: Iterable[Weight]) -> float:
    worst = 0.0
    for w in weights:
        for n in (2, 3, 4):
            for alpha in (0.0, 5.0, 50.0):
                diag = r_alpha_diagonal(w, n, alpha, 1.0)
                holo = diagonal_from_slice(w, n, alpha, 1.0)
                worst = max(worst, math.expm1(abs(float(diag.log_value.log_mag) - float(holo.log_value.log_mag))))
    return worst


@check("kernels.slice_diagonal_gamma", "diagonal equals 2^{4-2n} ω_{n-1} K⁰_α(ib; ib), gamma weight", 1e-9)
def _slice_diagonal_gamma() -> float:
    return _slice_diagonal([GAMMA])


@check("kernels.slice_diagonal", "diagonal equals 2^{4-2n} ω_{n-1} K⁰_α(ib; ib), all weights", 1e-9, "full")
def _slice_diagonal_all() -> float:
    return _slice_diagonal(_builtins())


def _route_gap(a: float, a_err: float, b: float, b_err: float) -> float:
    """
    Gap between two routes as a multiple of its allowance. Both 1e-7
    relative and three times the summed error estimates must hold, so the
    worse ratio counts.
    """
    gap = abs(a - b)
    if gap == 0:
        return 0.0
    bound = 3.0 * (a_err + b_err)
    return max(_rel(a, b) / 1e-7, gap / bound if bound > 0 else math.inf)


@check(
    "kernels.cross_route",
    "radial and holomorphic-reduction routes agree within 3x err_est and 1e-7 relative, all weights",
    1.0,
    "full",
)
def _cross_route() -> float:
    rng = np.random.default_rng(20240611)
    worst = 0.0
    for w in _builtins():
        for n in (2, 3, 4, 5):
            for alpha in (0.0, 1.0, 5.0, 20.0):
                for _ in range(5):
                    y, b = rng.uniform(0.5, 2.0, size=2)
                    d = rng.uniform(0.0, min(y, b))
                    p = KernelPoint(n, float(d), float(y), float(b))
                    radial = r_alpha_radial(w, n, alpha, p)
                    holo = r_alpha_via_holomorphic(w, n, alpha, p)
                    score = _route_gap(radial.value, radial.err_est, holo.value, holo.err_est)
                    if score > 1.0:
                        logger.error(f"{w.name} n={n} α={alpha} {p}: routes differ by {abs(radial.value - holo.value):.3e}")
                    worst = max(worst, score)
    return worst


@check("kernels.fourier", "Fourier transform of the n=2 gamma slice is e^{-(b+y)ξ}/ρ̃_α(ξ)", 1e-6, "full")
def _fourier() -> float:
    return max(
        _rel(*k0_fourier_check(GAMMA, 2.0, xi, 1.0, 1.0))
        for xi in (0.5, 1.0, 2.0)
    )


# weights and numerics

@check("transform.gamma_closed", "ρ̃_α matches Γ(α+1)/(2t)^{α+1} for ρ(y) = y", 1e-10)
def _transform_closed() -> float:
    worst = 0.0
    for alpha in (0.0, 1.0, 20.0, 400.0):
        for t in (0.01, 0.5, 1.0, 10.0):
            got = log_rho_tilde(GAMMA, alpha, t).log_value
            worst = max(worst, math.expm1(abs(got - rho_tilde_gamma_closed(alpha, t))))
    return worst


@check("special.hyp0f1_cos", "₀F₁(1/2; -z) = cos(2√z) on [0, 100]", 1e-11)
def _hyp0f1_cos() -> float:
    z = np.linspace(0.0, 100.0, 100)
    return float(np.max(np.abs(hyp0f1(0.5, -z) - np.cos(2.0 * np.sqrt(z)))))


def _metric_det(weights: Iterable[Weight]) -> float:
    worst = 0.0
    for w in weights:
        for n in (2, 3, 4):
            for b in (0.5, 1.0, 2.0):
                expected = float(phi(w, b, 2)) / 4.0 * (-float(phi(w, b, 1))) ** (n - 2)
                worst = max(worst, _rel(math.exp(psi(w, n, b)), expected))
                worst = max(worst, _rel(SiegelMetric.at(w, n, b, 0.3).determinant(), expected))
    return worst


@check("berezin.metric_det_gamma", "det g = (φ''/4)(-φ')^{n-2} = e^ψ, also away from z = 0, gamma weight", 1e-12)
def _metric_det_gamma() -> float:
    return _metric_det([GAMMA])


@check("berezin.metric_det", "det g = (φ''/4)(-φ')^{n-2} = e^ψ, also away from z = 0, all weights", 1e-12, "full")
def _metric_det_all() -> float:
    return _metric_det(_builtins())


# asymptotics

def _offdiag_constant(weights: Iterable[Weight]) -> float:
    worst = 0.0
    for w in weights:
        for n in (2, 3, 4):
            for alpha in (1.0, 10.0, 100.0):
                p = KernelPoint(n, 0.0, 1.5, 1.5)
                off = float(log_offdiag_leading(w, n, alpha, p).log_mag)
                worst = max(worst, math.expm1(abs(off - log_diag_leading(w, n, alpha, 1.5))))
    return worst


@check("asym.offdiag_constant_gamma", "off-diagonal leading term at d=0 equals the diagonal one, gamma", 1e-10)
def _offdiag_constant_gamma() -> float:
    return _offdiag_constant([GAMMA])


@check("asym.offdiag_constant", "off-diagonal leading term at d=0 equals the diagonal one, all weights", 1e-10, "full")
def _offdiag_constant_all() -> float:
    return _offdiag_constant(_builtins())


@check("asym.gamma_fit", "fit of α^{1-n}ρ(b)^α R_α for n=2 gamma gives c₀ = c₁ = 1/(2π)", 1e-8)
def _gamma_fit() -> float:
    samples = [(alpha, (alpha + 1.0) / (2.0 * math.pi) / alpha) for alpha in SWEEP_ALPHAS]
    fit = richardson_fit(samples, 1)
    return float(np.max(np.abs(fit.coefficients - 1.0 / (2.0 * math.pi))))


@functools.lru_cache(maxsize=None)
def _diagonal_sweep(w: Weight, n: int, b: float) -> tuple[float, float]:
    log_rho_b = float(w.log_rho(np.asarray(b)))
    scaled, deviations = [], []
    for alpha in SWEEP_ALPHAS:
        log_exact = float(r_alpha_diagonal(w, n, alpha, b).log_value.log_mag)
        scaled.append((alpha, math.exp(log_exact - (n - 1) * math.log(alpha) + alpha * log_rho_b)))
        deviations.append((alpha, abs(math.expm1(log_exact - log_diag_leading(w, n, alpha, b)))))
    c0 = float(richardson_fit(scaled, 2).coefficients[0])
    target = math.exp(log_c_n(n) + float(log_q_factor(w, n, b)))
    return _rel(c0, target), abs(convergence_order(deviations) + 1.0)


@check("asym.diag_limit", "fitted c₀ of α^{1-n}ρ(b)^α R_α equals C_n Q(b)", 1e-2, "full")
def _diag_limit() -> float:
    return max(_diagonal_sweep(w, n, b)[0] for w in _builtins() for n in (2, 3) for b in (0.5, 1.0, 2.0))


@check("asym.diag_order", "R_α/leading - 1 decays with order -1", 0.2, "full")
def _diag_order() -> float:
    return max(_diagonal_sweep(w, n, b)[1] for w in _builtins() for n in (2, 3) for b in (0.5, 1.0, 2.0))


@check("asym.offdiag_order", "gamma closed form over off-diagonal leading term tends to 1 with order -1", 0.2, "full")
def _offdiag_order() -> float:
    worst = 0.0
    for n in (2, 4):
        for d in (0.25, 0.5):
            p = KernelPoint(n, d, 1.0, 1.0)
            deviations = [
                (alpha, abs(r_alpha_gamma_closed(n, alpha, p).value / offdiag_leading(GAMMA, n, alpha, p) - 1.0))
                for alpha in SWEEP_ALPHAS
            ]
            worst = max(worst, abs(convergence_order(deviations) + 1.0))
    return worst


# berezin

def _normalization(weights: Iterable[Weight], ns: Sequence[int], alphas: Sequence[float], bs: Sequence[float]) -> float:
    one = make_symbol("one")
    return max(
        abs(berezin_vertical(w, n, alpha, one, b) - 1.0)
        for w in weights for n in ns for alpha in alphas for b in bs
    )


@check("berezin.normalization_gamma", "B_α 1 = 1 for the gamma weight", 1e-8)
def _normalization_gamma() -> float:
    return _normalization([GAMMA], (2, 3), (0.0, 5.0, 50.0), (1.0,))


@check("berezin.normalization", "B_α 1 = 1 for all weights, n, α and b", 1e-8, "full")
def _normalization_all() -> float:
    return _normalization(_builtins(), (2, 3, 4), (0.0, 5.0, 50.0, 200.0), (0.5, 1.0, 2.0))


@check("berezin.gamma_exp", "B_α e^{-cy} matches the closed-form inner integral, gamma", 1e-8)
def _gamma_exp() -> float:
    worst = 0.0
    for n in (2, 3):
        for alpha in (2.0, 20.0):
            for c in (0.5, 1.0):
                worst = max(worst, abs(berezin_vertical(GAMMA, n, alpha, exp_symbol(c), 1.0) - berezin_gamma_exp(n, alpha, c, 1.0)))
    return worst


@check("berezin.q1_gamma", "Q₁ for the gamma weight is b²g'' + (2-n)b g'", 1e-12)
def _q1_gamma() -> float:
    worst = 0.0
    for name in ("exp", "inv1p", "ratio"):
        g = make_symbol(name)
        for n in (2, 3, 4):
            for b in (0.5, 1.0, 2.0):
                expected = b ** 2 * g(b, 2) + (2 - n) * b * g(b, 1)
                worst = max(worst, abs(q1_vertical(GAMMA, n, g, b) - expected))
    return worst


@check("berezin.q2_gamma", "Q₂ matches the exact α⁻² coefficient of the gamma Berezin transform", 1e-4)
def _q2_gamma() -> float:
    worst = 0.0
    for name in ("exp", "inv1p"):
        g = make_symbol(name)
        for n in (2, 3, 4):
            for b in (1.0, 2.0):
                exact = q2_gamma_exact(n, g, b)
                worst = max(worst, abs(q2_vertical(GAMMA, n, g, b) - exact) / max(abs(exact), 1e-3))
    return worst


@check(
    "berezin.q2_printed_sign",
    "deviation of Q₂ with the ψ-part added (+1) from the exact gamma coefficient",
    1e-4,
    informational=True,
)
def _q2_printed_sign() -> float:
    g = make_symbol("exp")
    exact = q2_gamma_exact(2, g, 1.0)
    return abs(q2_vertical(GAMMA, 2, g, 1.0, ricci_sign=1) - exact) / abs(exact)


def _linearity(weights: Iterable[Weight]) -> float:
    g1, g2 = make_symbol("exp"), make_symbol("inv1p")
    combined = linear_combination([(2.0, g1), (-3.0, g2)])
    worst = 0.0
    for w in weights:
        lhs = berezin_vertical(w, 2, 10.0, combined, 1.0)
        rhs = 2.0 * berezin_vertical(w, 2, 10.0, g1, 1.0) - 3.0 * berezin_vertical(w, 2, 10.0, g2, 1.0)
        worst = max(worst, abs(lhs - rhs))
    return worst


@check("berezin.linearity_gamma", "B_α is linear in the symbol, gamma weight", 1e-9)
def _linearity_gamma() -> float:
    return _linearity([GAMMA])


@check("berezin.linearity", "B_α is linear in the symbol, all weights", 1e-9, "full")
def _linearity_all() -> float:
    return _linearity(_builtins())


@check("berezin.tilde_oracle", "Δ̃ on (u, s) functions matches dense finite differences", 1e-5, "full")
def _tilde_oracle() -> float:
    rng = np.random.default_rng(7)
    F = SeparableUS(make_symbol("exp"), make_symbol("inv1p"))
    worst = 0.0
    for w in _builtins():
        for n in (3, 4):
            for _ in range(20 // len(BUILTIN_WEIGHTS) + 1):
                u, s = rng.uniform(0.5, 2.0), rng.uniform(0.05, 1.0)
                worst = max(worst, _rel(tilde_laplace_us(w, n, F, u, s), tilde_laplace_oracle(w, n, F, u, s)))
    return worst


def _tilde_closure(weights: Iterable[Weight]) -> float:
    worst = 0.0
    for w in weights:
        for name in ("exp", "ratio"):
            g = make_symbol(name)
            for n in (2, 3, 4):
                expected = q1_vertical(w, n, g, 1.3)
                worst = max(worst, abs(tilde_laplace_us(w, n, VerticalLift(g), 1.3, 0.0) - expected))
    return worst


@check("berezin.tilde_closure_gamma", "Δ̃ of a vertical lift at s = 0 reproduces Q₁, gamma weight", 1e-9)
def _tilde_closure_gamma() -> float:
    return _tilde_closure([GAMMA])


@check("berezin.tilde_closure", "Δ̃ of a vertical lift at s = 0 reproduces Q₁, all weights", 1e-9, "full")
def _tilde_closure_all() -> float:
    return _tilde_closure(_builtins())


def _expansion_grid() -> Iterable[tuple[Weight, int, str, float]]:
    for w in _builtins():
        for n in (2, 3):
            for name in ("exp", "inv1p"):
                for b in (1.0, 2.0):
                    yield w, n, name, b


@check("berezin.first_order", "Richardson limit of α(B_α g - g) is Q₁g", 2e-2, "full")
def _first_order() -> float:
    worst = 0.0
    for w, n, name, b in _expansion_grid():
        g = make_symbol(name)
        values = [alpha * (berezin_vertical(w, n, alpha, g, b) - g(b)) for alpha in FIRST_ORDER_ALPHAS]
        q1 = q1_vertical(w, n, g, b)
        worst = max(worst, abs(richardson_extrapolate(values, 1) - q1) / max(abs(q1), 1e-12))
    return worst


@check("berezin.second_order", "Richardson limit of α²(B_α g - g - Q₁g/α) is Q₂g", 5e-2, "full")
def _second_order() -> float:
    worst = 0.0
    for w, n, name, b in _expansion_grid():
        g = make_symbol(name)
        q1 = q1_vertical(w, n, g, b)
        values = [
            alpha ** 2 * (berezin_vertical(w, n, alpha, g, b) - g(b) - q1 / alpha)
            for alpha in SECOND_ORDER_ALPHAS
        ]
        q2 = q2_vertical(w, n, g, b)
        worst = max(worst, abs(richardson_extrapolate(values, 1) - q2) / max(abs(q2), 1e-12))
    return worst


def _residual_order(w: Weight, n: int, g: VerticalSymbol, b: float, berezin: Callable[[float], float]) -> float:
    """
    Fitted order of |B_α g - g - Q₁g/α - Q₂g/α²| over RESIDUAL_ALPHAS.
    """
    q1 = q1_vertical(w, n, g, b)
    q2 = q2_vertical(w, n, g, b)
    samples = [(alpha, abs(berezin(alpha) - g(b) - q1 / alpha - q2 / alpha ** 2)) for alpha in RESIDUAL_ALPHAS]
    order = convergence_order(samples)
    logger.debug(f"{w.name} n={n} {g.name} b={b}: residual order {order:.3f}")
    return order


def _gamma_exp_at(n: int, b: float, alpha: float) -> float:
    return berezin_gamma_exp(n, alpha, 1.0, b)


@check("berezin.residual_order_gamma", "B_α g - g - Q₁g/α - Q₂g/α² decays with order <= -2.5, gamma weight", -2.5)
def _residual_order_gamma() -> float:
    g = exp_symbol(1.0)
    return max(
        _residual_order(GAMMA, n, g, b, functools.partial(_gamma_exp_at, n, b))
        for n in (2, 3) for b in (1.0, 2.0)
    )


@check("berezin.residual_order", "B_α g - g - Q₁g/α - Q₂g/α² decays with order <= -2.5, all weights", -2.5, "full")
def _residual_order_all() -> float:
    worst = -math.inf
    for w, n, name, b in _expansion_grid():
        g = make_symbol(name)
        worst = max(worst, _residual_order(w, n, g, b, lambda alpha: berezin_vertical(w, n, alpha, g, b)))
    return worst


def selected_checks(level: str, only: Sequence[str] | None = None) -> list[_Check]:
    if level not in LEVELS:
        raise ValueError(f"Unknown verification level: {level}")
    levels = {"quick"} if level == "quick" else set(LEVELS)
    return [
        c for c in _CHECKS
        if c.level in levels and (not only or any(c.id.startswith(prefix) for prefix in only))
    ]


def cmd_verify(level: str = "quick", only: Sequence[str] | None = None) -> VerifyReport:
    """
    Run the checks of `level` (optionally only ids starting with one of
    the `only` prefixes) and collect the results.
    """
    report = VerifyReport(level)
    for c in selected_checks(level, only):
        logger.info(f"check {c.id}")
        try:
            value = float(c.fn())
        except Exception as ex:
            logger.error(f"check {c.id} raised {type(ex).__name__}: {ex}")
            value = math.nan
        passed = math.isfinite(value) and value <= c.tol
        if not passed:
            log = logger.warning if c.informational else logger.error
            log(f"check {c.id} failed: {value:.3e} > {c.tol:.1e} ({c.desc})")
        report.checks.append(CheckResult(c.id, c.desc, value, c.tol, passed, c.informational))
    return report
