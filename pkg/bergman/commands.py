"""
Table-producing commands behind the CLI.

Each command takes a validated RunConfig and returns an output.Table whose
rows follow the configuration order (α outermost, then b, d, y), whatever
order the worker threads finish in.
"""

import logging
import math
import os
from collections.abc import Callable
from collections.abc import Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TypeVar

import numpy as np

from bergman.asymptotics import convergence_order
from bergman.asymptotics import diag_leading
from bergman.asymptotics import log_c_n
from bergman.asymptotics import log_diag_leading
from bergman.asymptotics import offdiag_leading
from bergman.asymptotics import richardson_fit
from bergman.berezin import berezin_residuals
from bergman.berezin import make_symbol
from bergman.exceptions import DomainError
from bergman.exceptions import OptionError
from bergman.kernels import CLOSED_FORM
from bergman.kernels import HOLOMORPHIC
from bergman.kernels import KernelPoint
from bergman.kernels import KernelValue
from bergman.kernels import diagonal_from_slice
from bergman.kernels import r_alpha_diagonal
from bergman.kernels import r_alpha_gamma_closed
from bergman.kernels import r_alpha_radial
from bergman.kernels import r_alpha_via_holomorphic
from bergman.optmanager import OptManager
from bergman.output import Table
from bergman.weights import Weight
from bergman.weights import log_q_factor
from bergman.weights import make_builtin_weight


logger = logging.getLogger(__name__)


THREADS_ENV = "BERGMAN_THREADS"
# Horizontal separations beyond this multiple of y + b are out of validated scope.
SEPARATION_CAP = 10.0

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int | None:
    """
    Thread cap from BERGMAN_THREADS; None (executor default) when unset or 0.
    """
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return None
    try:
        count = int(raw)
    except ValueError:
        raise OptionError(f"{THREADS_ENV} must be a non-negative integer, got {raw!r}") from None
    if count < 0:
        raise OptionError(f"{THREADS_ENV} must be a non-negative integer, got {raw!r}")
    return count or None


def map_ordered(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    items = list(items)
    if len(items) <= 1 or worker_count() == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=worker_count()) as executor:
        return list(executor.map(fn, items))


def _positive_list(name: str, values: Iterable[float], strict: bool = True) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    for v in out:
        if not math.isfinite(v) or (v <= 0 if strict else v < 0):
            raise OptionError(f"{name}: {'positive' if strict else 'non-negative'} finite values required, got {v}")
    return out


@dataclass(frozen=True)
class RunConfig:
    weight: str
    n: int
    alphas: tuple[float, ...]
    points: tuple[KernelPoint, ...]
    symbol: str
    tol: float
    fd_step: float
    route: str
    jacobi_nodes: int | None
    output_format: str
    output_path: str | None

    @classmethod
    def from_options(cls, options: OptManager) -> "RunConfig":
        """
        Check every precondition of the numerical modules before any
        computation starts. Errors name the offending option.
        """
        n = options.grid.n
        if n < 2:
            raise OptionError(f"grid.n: n must be >= 2, got {n}")
        alphas = _positive_list("grid.alphas", options.grid.alphas, strict=False)
        if not alphas:
            raise OptionError("grid.alphas: at least one value required")
        bs = _positive_list("grid.b", options.grid.b)
        if not bs:
            raise OptionError("grid.b: at least one value required")
        ds = _positive_list("grid.d", options.grid.d, strict=False) or (0.0,)
        ys = _positive_list("grid.y", options.grid.y)

        try:
            make_symbol(options.grid.symbol)
        except DomainError as ex:
            raise OptionError(f"grid.symbol: {ex}") from None

        tol = options.tolerances.quad
        if not 0 < tol < 1:
            raise OptionError(f"tolerances.quad: must lie in (0, 1), got {tol}")
        fd_step = options.tolerances.fd_step
        if not 0 < fd_step < 0.1:
            raise OptionError(f"tolerances.fd_step: must lie in (0, 0.1), got {fd_step}")
        route = options.grid.route
        if route == CLOSED_FORM and options.weight.name != "gamma":
            raise OptionError("grid.route: the closed form exists only for the gamma weight")
        nodes = options.grid.jacobi_nodes
        if nodes is not None and nodes < 1:
            raise OptionError(f"grid.jacobi_nodes: must be >= 1, got {nodes}")

        points = tuple(
            KernelPoint(n, d, y, b)
            for b in bs
            for d in ds
            for y in (ys or (b,))
        )
        for p in points:
            if p.d > SEPARATION_CAP * (p.y + p.b):
                raise OptionError(
                    f"grid.d: d={p.d:g} exceeds {SEPARATION_CAP:g}·(y+b) = {SEPARATION_CAP * (p.y + p.b):g} at y={p.y:g}, b={p.b:g}"
                )
        return cls(
            weight=options.weight.name,
            n=n,
            alphas=alphas,
            points=points,
            symbol=options.grid.symbol,
            tol=tol,
            fd_step=fd_step,
            route=route,
            jacobi_nodes=nodes,
            output_format=options.output.format,
            output_path=options.output.path,
        )

    @property
    def w(self) -> Weight:
        return make_builtin_weight(self.weight)

    @property
    def heights(self) -> tuple[float, ...]:
        return tuple(dict.fromkeys(p.b for p in self.points))

    def require_sweep(self) -> tuple[float, ...]:
        """
        α values usable for an expansion fit: at least three, positive and
        strictly increasing.
        """
        if len(self.alphas) < 3:
            raise OptionError(f"grid.alphas: at least 3 values required for a fit, got {len(self.alphas)}")
        if any(a <= 0 for a in self.alphas) or any(np.diff(self.alphas) <= 0):
            raise OptionError("grid.alphas: values must be positive and strictly increasing")
        return self.alphas


def _kernel(cfg: RunConfig, w: Weight, alpha: float, p: KernelPoint) -> KernelValue:
    match cfg.route:
        case "closed-form":
            return r_alpha_gamma_closed(cfg.n, alpha, p, cfg.tol)
        case "holomorphic-reduction":
            return r_alpha_via_holomorphic(w, cfg.n, alpha, p, cfg.tol)
    return r_alpha_radial(w, cfg.n, alpha, p, cfg.tol)


def _leading(cfg: RunConfig, w: Weight, alpha: float, p: KernelPoint) -> float | None:
    if alpha <= 0:
        return None
    try:
        return offdiag_leading(w, cfg.n, alpha, p, cfg.jacobi_nodes)
    except DomainError as ex:
        logger.debug(f"No leading term at α={alpha}, {p}: {ex}")
        return None


def _log_abs(kv: KernelValue) -> float:
    """
    log|R_α|, finite where `value` overflows; the sign stays in `value`.
    """
    return float(kv.log_value.log_mag)


def cmd_kernel(cfg: RunConfig) -> Table:
    """
    R_α at every (α, point) by the configured route, next to the leading
    term of its large-α expansion (empty for α = 0).
    """
    w = cfg.w
    tasks = [(alpha, p) for alpha in cfg.alphas for p in cfg.points]
    results = map_ordered(lambda task: (_kernel(cfg, w, *task), _leading(cfg, w, *task)), tasks)

    table = Table(["alpha", "n", "d", "y", "b", "value", "log_value", "err_est", "route", "leading"])
    for (alpha, p), (kv, leading) in zip(tasks, results):
        table.add(
            alpha=alpha, n=cfg.n, d=p.d, y=p.y, b=p.b, value=kv.value, log_value=_log_abs(kv), err_est=kv.err_est,
            route=kv.route, leading=leading,
        )
        table.converged &= kv.converged
    return table


def cmd_diag(cfg: RunConfig) -> Table:
    """
    The diagonal R_α(b) with its holomorphic expression and the leading
    asymptotic term.
    """
    w = cfg.w
    tasks = [(alpha, b) for alpha in cfg.alphas for b in cfg.heights]

    def row(task: tuple[float, float]) -> tuple[KernelValue, KernelValue, float | None]:
        alpha, b = task
        leading = diag_leading(w, cfg.n, alpha, b) if alpha > 0 else None
        return r_alpha_diagonal(w, cfg.n, alpha, b, cfg.tol), diagonal_from_slice(w, cfg.n, alpha, b, cfg.tol), leading

    table = Table(["alpha", "n", "b", "value", "log_value", "err_est", "holomorphic", "leading"])
    for (alpha, b), (kv, holo, leading) in zip(tasks, map_ordered(row, tasks)):
        table.add(
            alpha=alpha, n=cfg.n, b=b, value=kv.value, log_value=_log_abs(kv), err_est=kv.err_est,
            holomorphic=holo.value, leading=leading,
        )
        table.converged &= kv.converged and holo.converged
    return table


def cmd_asym(cfg: RunConfig) -> Table:
    """
    Exact diagonal against its leading term, with a footer row per height:
    alpha = "fit", exact = fitted c₀ of α^{1-n}ρ(b)^α R_α, leading = C_n Q(b),
    ratio = fitted order of |ratio - 1|.
    """
    alphas = cfg.require_sweep()
    w = cfg.w
    tasks = [(alpha, b) for b in cfg.heights for alpha in alphas]
    results = map_ordered(lambda task: r_alpha_diagonal(w, cfg.n, task[0], task[1], cfg.tol), tasks)

    table = Table(["alpha", "b", "exact", "leading", "ratio"])
    by_height: dict[float, list[tuple[float, KernelValue]]] = {}
    for (alpha, b), kv in zip(tasks, results):
        by_height.setdefault(b, []).append((alpha, kv))

    for b, samples in by_height.items():
        log_rho_b = float(w.log_rho(np.asarray(b)))
        scaled = []
        deviations = []
        for alpha, kv in samples:
            log_exact = float(kv.log_value.log_mag)
            log_leading = log_diag_leading(w, cfg.n, alpha, b)
            ratio = math.exp(log_exact - log_leading)
            table.add(alpha=alpha, b=b, exact=kv.value, leading=math.exp(log_leading), ratio=ratio)
            table.converged &= kv.converged
            scaled.append((alpha, math.exp(log_exact - (cfg.n - 1) * math.log(alpha) + alpha * log_rho_b)))
            deviations.append((alpha, abs(ratio - 1.0)))

        fit = richardson_fit(scaled, min(2, len(scaled) - 2))
        try:
            order = convergence_order(deviations)
        except DomainError:
            order = math.nan
        target = math.exp(log_c_n(cfg.n) + float(log_q_factor(w, cfg.n, b)))
        table.add(alpha="fit", b=b, exact=float(fit.coefficients[0]), leading=target, ratio=order)
        logger.info(f"b={b}: c0 = {fit.coefficients[0]:.10g} (C_n Q(b) = {target:.10g}), order {order:.3f}")
    return table


def cmd_berezin(cfg: RunConfig) -> Table:
    """
    B_α g(b) with the first and second order residuals against Q₁, Q₂.
    """
    w = cfg.w
    g = make_symbol(cfg.symbol)
    per_height = map_ordered(
        lambda b: berezin_residuals(w, cfg.n, g, b, cfg.alphas, cfg.tol, cfg.fd_step),
        cfg.heights,
    )
    rows = sorted(
        (row for rows in per_height for row in rows),
        key=lambda row: (cfg.alphas.index(row.alpha), cfg.heights.index(row.b)),
    )

    table = Table(["alpha", "b", "B_value", "g_b", "q1_pred", "q2_pred", "residual1", "residual2"])
    for row in rows:
        table.add(
            alpha=row.alpha, b=row.b, B_value=row.value, g_b=row.g_b, q1_pred=row.q1, q2_pred=row.q2,
            residual1=row.residual1, residual2=row.residual2,
        )
        table.converged &= row.converged
    return table


COMMANDS: dict[str, Callable[[RunConfig], Table]] = {
    "kernel": cmd_kernel,
    "diag": cmd_diag,
    "asym": cmd_asym,
    "berezin": cmd_berezin,
}
