"""
Quadrature engines.

`quad_semiinfinite` integrates log-domain integrands over (0, ∞) with a
double-exponential substitution r = s·exp(t - e^{-t}) and the trapezoidal
rule in t, halving the step until two successive levels agree. Nodes depend
only on the scale s and the level, so repeated integrals with the same scale
query identical abscissae (the weight transform memo relies on this).

`quad_jacobi` is a Gauss–Jacobi rule for ∫_{-1}^{1} (1-t²)^λ F(t) dt.
"""

import functools
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from bergman.exceptions import DomainError
from bergman.numerics.logcomplex import LogComplex
from bergman.numerics.logcomplex import logc_sum


logger = logging.getLogger(__name__)


LogIntegrand = Callable[[np.ndarray], LogComplex]
RowIntegrand = Callable[[np.ndarray, np.ndarray], LogComplex]

MAX_NODES = 2 ** 20

_T_LO = -4.5
_T_HI_START = 4.0
_T_HI_CAP = 12.0
_H0 = 0.125
_MIN_LEVELS = 2
# A term this far (in log) below the row peak no longer matters.
_NEGLIGIBLE = 40.0
# Per-node and per-unit-of-exponent rounding of a log-domain sum.
_ROUNDOFF = 16.0 * np.finfo(float).eps
# Integrand evaluations per call to f.
_CHUNK_TERMS = 2 ** 20


@dataclass(frozen=True)
class QuadratureResult:
    """
    Outcome of one (or a batch of) integral evaluations.

    The value is kept in log form so that results far outside the double
    range survive; `value` and `err_est` convert on demand. `converged`
    holds for the whole batch, `row_converged` row by row.
    """
    log_value: LogComplex
    rel_err: np.ndarray | float
    nodes_used: int
    converged: bool
    row_converged: np.ndarray | bool = True

    @property
    def value(self) -> np.ndarray | complex:
        return self.log_value.to_complex()

    @property
    def err_est(self) -> np.ndarray | float:
        with np.errstate(over="ignore"):
            err = np.asarray(self.rel_err) * np.exp(np.asarray(self.log_value.log_mag))
        return float(err) if err.ndim == 0 else err

    def __getitem__(self, index) -> "QuadratureResult":
        row_converged = np.broadcast_to(self.row_converged, np.shape(self.rel_err))[index]
        return QuadratureResult(
            self.log_value[index],
            np.asarray(self.rel_err)[index],
            self.nodes_used,
            bool(np.all(row_converged)),
            row_converged,
        )


def _de_terms(f: RowIntegrand, t: np.ndarray, scales: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Log-terms f(r(t))·dr/dt for the selected rows.
    """
    e = np.exp(-t)
    log_r = np.log(scales[rows])[:, None] + (t - e)[None, :]
    r = np.exp(log_r)
    values = f(r, rows)
    log_mag = np.broadcast_to(np.asarray(values.log_mag, dtype=float), r.shape)
    phase = np.broadcast_to(np.asarray(values.phase, dtype=float), r.shape)
    log_jac = log_r + np.log1p(e)[None, :]
    with np.errstate(invalid="ignore"):
        log_mag = np.where(np.isneginf(log_mag), -np.inf, log_mag + log_jac)
    return log_mag, phase


@dataclass(frozen=True)
class _LevelSums:
    signed: LogComplex
    log_abs: np.ndarray
    peak: np.ndarray
    tail: np.ndarray


def _level_sums(f: RowIntegrand, t: np.ndarray, scales: np.ndarray, rows: np.ndarray) -> _LevelSums:
    """
    Per-row sums of the DE terms at abscissae t, evaluated in column chunks
    of at most _CHUNK_TERMS terms.
    """
    step = max(1, _CHUNK_TERMS // max(rows.size, 1))
    mags, phases, abs_mags, peaks = [], [], [], []
    for start in range(0, t.size, step):
        log_mag, phase = _de_terms(f, t[start:start + step], scales, rows)
        part = logc_sum(LogComplex(log_mag, phase), axis=1)
        mags.append(np.asarray(part.log_mag))
        phases.append(np.asarray(part.phase))
        abs_mags.append(np.asarray(logc_sum(LogComplex(log_mag, 0.0), axis=1).log_mag))
        peaks.append(np.max(log_mag, axis=1))
    signed = logc_sum(LogComplex(np.stack(mags), np.stack(phases)), axis=0)
    log_abs = np.logaddexp.reduce(np.stack(abs_mags), axis=0)
    return _LevelSums(signed, log_abs, np.max(np.stack(peaks), axis=0), log_mag[:, -1])


def _relative_gap(fine: LogComplex, coarse: LogComplex) -> np.ndarray:
    diff = logc_sum(
        LogComplex(
            np.stack([np.asarray(fine.log_mag), np.asarray(coarse.log_mag)]),
            np.stack([np.asarray(fine.phase), np.asarray(coarse.phase) + np.pi]),
        ),
        axis=0,
    )
    fine_mag = np.asarray(fine.log_mag)
    diff_mag = np.asarray(diff.log_mag)
    with np.errstate(invalid="ignore", over="ignore"):
        gap = np.exp(diff_mag - fine_mag)
    gap = np.where(np.isneginf(diff_mag), 0.0, gap)
    return np.where(np.isneginf(fine_mag) & ~np.isneginf(diff_mag), np.inf, gap)


def quad_semiinfinite_rows(
    f: RowIntegrand,
    scales: ArrayLike,
    tol: ArrayLike = 1e-12,
    max_nodes: int = MAX_NODES,
    *,
    log_scale: ArrayLike = 0.0,
) -> QuadratureResult:
    """
    Integrate a batch of log-domain integrands over (0, ∞).

    `f(r, rows)` receives abscissae of shape (len(rows), k) for the row
    indices `rows` and returns a LogComplex of the same shape; row i
    clusters its nodes at `scales[i]`. `tol` may differ per row.

    A row stops refining once the gap between two levels is within
    tol·|value|, or within the rounding floor
    eps·(nodes + log_scale)·∫|f|/|∫f|, where `log_scale` bounds the size of
    the exponents f cancels internally; `rel_err` is the larger of gap and
    floor. Converged rows are no longer evaluated, and only running sums are
    kept.
    """
    scales = np.atleast_1d(np.asarray(scales, dtype=float))
    if np.any(scales <= 0) or np.any(~np.isfinite(scales)):
        raise DomainError("Quadrature scales must be positive and finite")
    tols = np.broadcast_to(np.asarray(tol, dtype=float), scales.shape)
    if np.any(~(tols > 0)):
        raise DomainError(f"Quadrature tolerance must be positive, got {tol}")
    log_scale = np.broadcast_to(np.abs(np.asarray(log_scale, dtype=float)), scales.shape)
    everything = np.arange(scales.size)

    t_hi = _T_HI_START
    while True:
        count = int(math.ceil((t_hi - _T_LO) / _H0)) + 1
        first = _level_sums(f, _T_LO + _H0 * np.arange(count), scales, everything)
        live = np.isfinite(first.peak)
        if t_hi >= _T_HI_CAP or not np.any(live & (first.tail > first.peak - _NEGLIGIBLE)):
            break
        t_hi += 1.0

    h = _H0
    nodes = count
    sum_mag = np.array(first.signed.log_mag, dtype=float)
    sum_phase = np.array(first.signed.phase, dtype=float)
    abs_mag = np.array(first.log_abs, dtype=float)
    log_h = np.full(scales.shape, math.log(h))
    rel_err = np.full(scales.shape, np.inf)
    done = np.zeros(scales.shape, dtype=bool)
    level = 0

    while not np.all(done) and 2 * nodes <= max_nodes:
        active = np.flatnonzero(~done)
        coarse = LogComplex(sum_mag[active] + log_h[active], sum_phase[active])
        new_t = _T_LO + h * (np.arange(nodes - 1) + 0.5)
        h *= 0.5
        level += 1
        nodes += new_t.size

        part = _level_sums(f, new_t, scales, active)
        merged = logc_sum(
            LogComplex(
                np.stack([sum_mag[active], np.asarray(part.signed.log_mag)]),
                np.stack([sum_phase[active], np.asarray(part.signed.phase)]),
            ),
            axis=0,
        )
        sum_mag[active] = merged.log_mag
        sum_phase[active] = merged.phase
        abs_mag[active] = np.logaddexp(abs_mag[active], part.log_abs)
        log_h[active] = math.log(h)

        gap = _relative_gap(LogComplex(sum_mag[active] + log_h[active], sum_phase[active]), coarse)
        with np.errstate(invalid="ignore", over="ignore"):
            floor = _ROUNDOFF * (nodes + log_scale[active]) * np.exp(abs_mag[active] - sum_mag[active])
        rel_err[active] = np.where(np.isfinite(floor), np.maximum(gap, floor), gap)
        if level >= _MIN_LEVELS:
            done[active] = (gap <= tols[active]) | (gap <= floor)
        logger.debug(f"DE level {level}: {nodes} nodes, {active.size} rows refined, worst gap {np.max(gap):.3e}")

    converged = bool(np.all(done))
    if not converged:
        logger.warning(
            f"Semi-infinite quadrature did not converge: {nodes} nodes, {np.count_nonzero(~done)} rows open, "
            f"worst relative gap {np.max(rel_err[~done]):.3e} (tol {np.min(tols):.1e})"
        )
    return QuadratureResult(LogComplex(sum_mag + log_h, sum_phase), rel_err, nodes, converged, done)


def quad_semiinfinite(
    f: LogIntegrand,
    decay_rate_hint: float,
    tol: float = 1e-12,
    *,
    scale: float | None = None,
    max_nodes: int = MAX_NODES,
    log_scale: float = 0.0,
) -> QuadratureResult:
    """
    Integrate one log-domain integrand r ↦ LogComplex over (0, ∞).

    The node cluster sits at 1/decay_rate_hint unless `scale` places it
    explicitly (e.g. at the peak of a Laplace-type integrand).
    """
    if decay_rate_hint <= 0:
        raise DomainError(f"decay_rate_hint must be positive, got {decay_rate_hint}")
    s = scale if scale is not None else 1.0 / decay_rate_hint

    def row(r: np.ndarray, rows: np.ndarray) -> LogComplex:
        return _as_row(f(r[0]))

    result = quad_semiinfinite_rows(row, np.array([s]), tol, max_nodes, log_scale=log_scale)
    return result[0]


def _as_row(value: LogComplex) -> LogComplex:
    return LogComplex(np.atleast_2d(value.log_mag), np.atleast_2d(value.phase))


@functools.lru_cache(maxsize=128)
def jacobi_rule(m: int, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights of the m-point Gauss–Jacobi rule for (1-t²)^λ.
    """
    if lam < -0.5:
        raise DomainError(f"Jacobi exponent must be >= -1/2, got {lam}")
    if m < 1:
        raise DomainError(f"Jacobi rule needs at least one node, got {m}")
    nodes, weights = special.roots_jacobi(m, lam, lam)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def quad_jacobi(
    F: Callable[[np.ndarray], np.ndarray | LogComplex],
    lam: float,
    m: int = 64,
) -> np.ndarray | complex | float | LogComplex:
    """
    ∫_{-1}^{1} (1-t²)^λ F(t) dt by the m-point Gauss–Jacobi rule.

    Exact for polynomial F of degree <= 2m-1. F is called once with the
    array of nodes; if it returns a LogComplex the sum is carried out in
    log form and a LogComplex is returned.
    """
    nodes, weights = jacobi_rule(m, float(lam))
    values = F(nodes)
    if isinstance(values, LogComplex):
        return logc_sum(LogComplex(np.asarray(values.log_mag) + np.log(weights), values.phase))
    total = np.sum(weights * np.asarray(values))
    return complex(total) if np.iscomplexobj(total) else float(total)
