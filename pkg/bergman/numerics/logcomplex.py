"""
Overflow-safe complex numbers stored as (log-magnitude, phase).

Integrands such as ρ(y)^α e^{-2ty} overflow ordinary floating point long
before α reaches the ranges the asymptotic checks need. Every large
quantity is therefore carried as a pair (log|z|, arg z). Fields may be
Python floats or numpy arrays of matching shape; all operations broadcast.
"""

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike


def wrap_phase(phase: ArrayLike) -> np.ndarray | float:
    """
    Wrap angles into (-π, π].
    """
    wrapped = np.pi - np.mod(np.pi - np.asarray(phase, dtype=float), 2.0 * np.pi)
    return float(wrapped) if wrapped.ndim == 0 else wrapped


@dataclass(frozen=True)
class LogComplex:
    """
    A complex number z = exp(log_mag + i·phase).

    `log_mag = -inf` encodes zero; the phase of zero is 0.
    """
    log_mag: np.ndarray | float
    phase: np.ndarray | float = 0.0

    def __post_init__(self) -> None:
        log_mag = np.asarray(self.log_mag, dtype=float)
        phase = np.where(np.isneginf(log_mag), 0.0, wrap_phase(self.phase))
        object.__setattr__(self, "log_mag", float(log_mag) if log_mag.ndim == 0 else log_mag)
        object.__setattr__(self, "phase", float(phase) if phase.ndim == 0 else phase)

    @classmethod
    def zero(cls) -> "LogComplex":
        return cls(-np.inf, 0.0)

    @classmethod
    def one(cls) -> "LogComplex":
        return cls(0.0, 0.0)

    @classmethod
    def from_complex(cls, value: ArrayLike) -> "LogComplex":
        z = np.asarray(value, dtype=complex)
        with np.errstate(divide="ignore"):
            return cls(np.log(np.abs(z)), np.angle(z))

    @classmethod
    def from_log(cls, log_value: ArrayLike) -> "LogComplex":
        """
        Build from a (possibly complex) natural logarithm, e.g. -α·log ρ(T).
        """
        lz = np.asarray(log_value, dtype=complex)
        return cls(lz.real, lz.imag)

    def to_complex(self) -> np.ndarray | complex:
        with np.errstate(over="ignore"):
            z = np.exp(np.asarray(self.log_mag)) * np.exp(1j * np.asarray(self.phase))
        return complex(z) if np.ndim(z) == 0 else z

    @property
    def real(self) -> np.ndarray | float:
        """
        Real part in ordinary floating point (may overflow to ±inf).
        """
        with np.errstate(over="ignore", invalid="ignore"):
            r = np.exp(np.asarray(self.log_mag)) * np.cos(np.asarray(self.phase))
        return float(r) if np.ndim(r) == 0 else r

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        return LogComplex(
            np.asarray(self.log_mag) + np.asarray(other.log_mag),
            np.asarray(self.phase) + np.asarray(other.phase),
        )

    def __truediv__(self, other: "LogComplex") -> "LogComplex":
        return LogComplex(
            np.asarray(self.log_mag) - np.asarray(other.log_mag),
            np.asarray(self.phase) - np.asarray(other.phase),
        )

    def __pow__(self, exponent: float) -> "LogComplex":
        # Integer exponents are branch-free; real ones use the stored phase.
        return LogComplex(
            exponent * np.asarray(self.log_mag),
            exponent * np.asarray(self.phase),
        )

    def __neg__(self) -> "LogComplex":
        return LogComplex(self.log_mag, np.asarray(self.phase) + np.pi)

    def conj(self) -> "LogComplex":
        return LogComplex(self.log_mag, -np.asarray(self.phase))

    def scale(self, log_factor: float) -> "LogComplex":
        """
        Multiply by the positive real exp(log_factor).
        """
        return LogComplex(np.asarray(self.log_mag) + log_factor, self.phase)

    def __getitem__(self, index) -> "LogComplex":
        return LogComplex(np.asarray(self.log_mag)[index], np.asarray(self.phase)[index])


def _sum_arrays(log_mag: np.ndarray, phase: np.ndarray, axis: int | None) -> tuple[np.ndarray, np.ndarray]:
    """
    Complex log-sum-exp along `axis`: factor out the largest log-magnitude,
    sum the rescaled terms, and take the log again.
    """
    peak = np.max(log_mag, axis=axis, keepdims=True)
    finite_peak = np.where(np.isfinite(peak), peak, 0.0)
    terms = np.exp(log_mag - finite_peak) * np.exp(1j * phase)
    total = np.sum(terms, axis=axis)
    peak = np.squeeze(finite_peak, axis=axis) if axis is not None else finite_peak.reshape(())
    with np.errstate(divide="ignore"):
        out_mag = np.log(np.abs(total)) + peak
    return out_mag, np.angle(total)


def logc_sum(terms: Iterable[LogComplex] | LogComplex, axis: int | None = None) -> LogComplex:
    """
    Sum LogComplex values without leaving the log domain.

    Accepts either an iterable of scalar LogComplex values or a single
    array-valued LogComplex, which is reduced along `axis` (all entries when
    `axis` is None). An all-zero sum returns log_mag = -inf exactly.
    """
    if isinstance(terms, LogComplex):
        log_mag = np.asarray(terms.log_mag, dtype=float)
        phase = np.asarray(terms.phase, dtype=float)
    else:
        terms = list(terms)
        if not terms:
            return LogComplex.zero()
        log_mag = np.array([t.log_mag for t in terms], dtype=float)
        phase = np.array([t.phase for t in terms], dtype=float)
        axis = None

    if log_mag.size == 0 or np.all(np.isneginf(log_mag)):
        shape = () if axis is None else np.delete(np.array(log_mag.shape), axis)
        return LogComplex(np.full(tuple(shape), -np.inf), 0.0)

    return LogComplex(*_sum_arrays(log_mag, phase, axis))
