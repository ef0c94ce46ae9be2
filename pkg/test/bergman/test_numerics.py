import math

import numpy as np
import pytest

from bergman.exceptions import DomainError
from bergman.numerics import LogComplex
from bergman.numerics import hyp0f1
from bergman.numerics import log_gamma
from bergman.numerics import logc_sum
from bergman.numerics import quad_jacobi
from bergman.numerics import quad_semiinfinite
from bergman.numerics import quad_semiinfinite_rows
from bergman.numerics import sphere_area
from bergman.numerics.logcomplex import wrap_phase


def test_logcomplex_zero_has_no_phase() -> None:
    z = LogComplex(-np.inf, 2.0)
    assert z.phase == 0.0
    assert z.to_complex() == 0


def test_logcomplex_roundtrip_and_arithmetic() -> None:
    rng = np.random.default_rng(7)
    a = rng.normal(size=8) + 1j * rng.normal(size=8)
    b = rng.normal(size=8) + 1j * rng.normal(size=8)
    la, lb = LogComplex.from_complex(a), LogComplex.from_complex(b)
    np.testing.assert_allclose(la.to_complex(), a, rtol=1e-13)
    np.testing.assert_allclose((la * lb).to_complex(), a * b, rtol=1e-13)
    np.testing.assert_allclose((la / lb).to_complex(), a / b, rtol=1e-13)
    np.testing.assert_allclose((-la).to_complex(), -a, rtol=1e-13)
    np.testing.assert_allclose(la.conj().to_complex(), np.conj(a), rtol=1e-13)
    np.testing.assert_allclose((la ** 3).to_complex(), a ** 3, rtol=1e-12)


def test_logcomplex_associative_far_outside_double_range() -> None:
    rng = np.random.default_rng(11)
    mags = rng.uniform(-600.0, 600.0, size=(3, 16))
    phases = rng.uniform(-math.pi, math.pi, size=(3, 16))
    x, y, z = (LogComplex(m, p) for m, p in zip(mags, phases))
    left = (x * y) * z
    right = x * (y * z)
    np.testing.assert_allclose(left.log_mag, right.log_mag, rtol=1e-13)
    np.testing.assert_allclose(np.cos(left.phase - right.phase), 1.0, atol=1e-13)


def test_logcomplex_from_log_and_scale() -> None:
    z = LogComplex.from_log(complex(1.5, 0.25)).scale(-0.5)
    assert z.log_mag == pytest.approx(1.0)
    assert z.phase == pytest.approx(0.25)


def test_wrap_phase() -> None:
    assert wrap_phase(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_phase(-math.pi / 2) == pytest.approx(-math.pi / 2)


def test_logc_sum_examples() -> None:
    two = logc_sum([LogComplex.one(), LogComplex.one()])
    assert two.log_mag == pytest.approx(math.log(2.0))
    assert two.phase == 0.0

    x = LogComplex(0.3, 1.1)
    same = logc_sum([x, LogComplex.zero()])
    assert same.log_mag == pytest.approx(0.3)
    assert same.phase == pytest.approx(1.1)

    big = logc_sum([LogComplex(700.0), LogComplex(0.0)])
    assert big.log_mag == pytest.approx(700.0)


def test_logc_sum_all_zero_and_cancellation() -> None:
    assert np.isneginf(logc_sum([LogComplex.zero(), LogComplex.zero()]).log_mag)
    assert np.isneginf(logc_sum([]).log_mag)
    assert logc_sum([LogComplex(5.0), -LogComplex(5.0)]).to_complex() == pytest.approx(0.0, abs=1e-12)


def test_logc_sum_along_axis() -> None:
    terms = LogComplex(np.log([[1.0, 2.0], [3.0, 4.0]]), 0.0)
    np.testing.assert_allclose(logc_sum(terms, axis=1).to_complex(), [3.0, 7.0])
    assert logc_sum(terms).to_complex() == pytest.approx(10.0)


@pytest.mark.parametrize(
    "x, expected",
    [
        (1.0, 0.0),
        (0.5, 0.5723649429),
        (11.0, 15.1044125731),
    ]
)
def test_log_gamma(x: float, expected: float) -> None:
    assert log_gamma(x) == pytest.approx(expected, abs=1e-10)


def test_log_gamma_domain() -> None:
    with pytest.raises(DomainError):
        log_gamma(0.0)


@pytest.mark.parametrize(
    "n, expected",
    [
        (1, 2.0),
        (2, 2 * math.pi),
        (3, 4 * math.pi),
    ]
)
def test_sphere_area(n: int, expected: float) -> None:
    assert sphere_area(n) == pytest.approx(expected, rel=1e-14)


def test_sphere_area_domain() -> None:
    with pytest.raises(DomainError):
        sphere_area(0)


def test_hyp0f1_examples() -> None:
    assert hyp0f1(2.5, 0.0) == 1.0
    assert hyp0f1(0.5, -math.pi ** 2 / 4) == pytest.approx(-1.0, abs=1e-13)
    assert hyp0f1(1.5, -1.0) == pytest.approx(math.sin(2.0) / 2.0, rel=1e-13)


def test_hyp0f1_matches_cosine() -> None:
    z = np.linspace(0.0, 100.0, 201)
    np.testing.assert_allclose(hyp0f1(0.5, -z), np.cos(2.0 * np.sqrt(z)), atol=1e-11)


def test_hyp0f1_domain() -> None:
    with pytest.raises(DomainError):
        hyp0f1(0.0, -1.0)
    with pytest.raises(DomainError):
        hyp0f1(1.0, 0.5)


@pytest.mark.parametrize("k", range(7))
@pytest.mark.parametrize("c", [0.5, 1.0, 3.0])
def test_quad_semiinfinite_gamma_integrals(k: int, c: float) -> None:
    result = quad_semiinfinite(lambda r: LogComplex(k * np.log(r) - c * r), c)
    expected = math.exp(log_gamma(k + 1.0) - (k + 1) * math.log(c))
    assert result.converged
    assert result.value.real == pytest.approx(expected, rel=1e-10)
    assert abs(result.value.imag) <= 1e-12 * expected


def test_quad_semiinfinite_examples() -> None:
    assert quad_semiinfinite(lambda r: LogComplex(-r), 1.0).value.real == pytest.approx(1.0, rel=1e-12)
    assert quad_semiinfinite(lambda r: LogComplex(3 * np.log(r) - 2 * r), 2.0).value.real == pytest.approx(0.375, rel=1e-12)

    oscillating = quad_semiinfinite(lambda r: LogComplex(np.log(r) - r, r), 1.0)
    assert oscillating.value == pytest.approx(0.5j, abs=1e-11)


def test_quad_semiinfinite_keeps_huge_values() -> None:
    # ∫ r^{400} e^{-r} dr = 400!, far beyond the double range.
    result = quad_semiinfinite(lambda r: LogComplex(400 * np.log(r) - r), 1.0, scale=400.0)
    assert result.log_value.log_mag == pytest.approx(log_gamma(401.0), rel=1e-12)
    assert result.converged


def test_quad_semiinfinite_rows_share_nodes() -> None:
    c = np.array([1.0, 2.0, 4.0])

    def f(r: np.ndarray, rows: np.ndarray) -> LogComplex:
        return LogComplex(-c[rows, None] * r)

    result = quad_semiinfinite_rows(f, 1.0 / c)
    np.testing.assert_allclose(result.value.real, 1.0 / c, rtol=1e-12)
    assert result.converged


def test_quad_semiinfinite_stops_at_rounding_floor() -> None:
    # tol below machine precision: only the rounding floor can end the refinement.
    result = quad_semiinfinite(lambda r: LogComplex(5 * np.log(r) - r), 1.0, tol=1e-18)
    assert result.converged
    assert result.nodes_used < 2 ** 12
    assert result.value.real == pytest.approx(120.0, rel=1e-12)


def test_quad_semiinfinite_rows_refines_open_rows_only() -> None:
    seen: list[list[int]] = []

    def f(r: np.ndarray, rows: np.ndarray) -> LogComplex:
        seen.append(rows.tolist())
        step = np.where((rows[:, None] == 1) & (r > 1.0), math.log(2.0), 0.0)
        return LogComplex(-r + step)

    result = quad_semiinfinite_rows(f, np.ones(2), 1e-10, max_nodes=2 ** 10)
    assert not result.converged
    np.testing.assert_array_equal(result.row_converged, [True, False])
    assert result[0].converged
    assert not result[1].converged
    assert result[0].value.real == pytest.approx(1.0, rel=1e-12)
    assert seen[0] == [0, 1]
    assert seen[-1] == [1]


def test_quad_semiinfinite_rows_evaluates_in_chunks(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr("bergman.numerics.quadrature._CHUNK_TERMS", 50)
    c = np.array([1.0, 2.0, 4.0])
    sizes: list[int] = []

    def f(r: np.ndarray, rows: np.ndarray) -> LogComplex:
        sizes.append(r.size)
        return LogComplex(-c[rows, None] * r)

    result = quad_semiinfinite_rows(f, 1.0 / c)
    assert result.converged
    assert max(sizes) <= 50
    np.testing.assert_allclose(result.value.real, 1.0 / c, rtol=1e-12)


def test_quad_semiinfinite_rows_tolerance_per_row() -> None:
    def f(r: np.ndarray, rows: np.ndarray) -> LogComplex:
        step = np.where(r > 1.0, math.log(2.0), 0.0)
        return LogComplex(-r + step)

    result = quad_semiinfinite_rows(f, np.ones(2), np.array([0.5, 1e-10]), max_nodes=2 ** 10)
    np.testing.assert_array_equal(result.row_converged, [True, False])
    with pytest.raises(DomainError):
        quad_semiinfinite_rows(f, np.ones(2), np.array([1e-10, 0.0]))


def test_quad_semiinfinite_rejects_bad_input() -> None:
    with pytest.raises(DomainError):
        quad_semiinfinite(lambda r: LogComplex(-r), 0.0)
    with pytest.raises(DomainError):
        quad_semiinfinite(lambda r: LogComplex(-r), 1.0, tol=0.0)


def test_quad_jacobi_examples() -> None:
    assert quad_jacobi(np.ones_like, 0.0, 8) == pytest.approx(2.0, rel=1e-14)
    assert quad_jacobi(np.ones_like, -0.5, 8) == pytest.approx(math.pi, rel=1e-14)
    assert quad_jacobi(lambda t: t ** 2, 0.0, 2) == pytest.approx(2.0 / 3.0, rel=1e-14)


@pytest.mark.parametrize("n", range(3, 9))
def test_quad_jacobi_beta_integral(n: int) -> None:
    expected = math.sqrt(math.pi) * math.gamma((n - 2) / 2) / math.gamma((n - 1) / 2)
    assert quad_jacobi(np.ones_like, (n - 4) / 2, 16) == pytest.approx(expected, rel=1e-12)


def test_quad_jacobi_log_domain() -> None:
    result = quad_jacobi(lambda t: LogComplex(np.full(t.shape, 800.0)), 0.0, 4)
    assert isinstance(result, LogComplex)
    assert result.log_mag == pytest.approx(800.0 + math.log(2.0))


def test_quad_jacobi_rejects_low_exponent() -> None:
    with pytest.raises(DomainError):
        quad_jacobi(np.ones_like, -1.0)
