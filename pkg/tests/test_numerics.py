"""Numeric kernels against independent elimination and high-precision oracles."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from extractlab import (
    DegenerateDisplacementError,
    InvalidInputError,
    NumericalError,
    SeededRng,
    cholesky_factor,
    cholesky_solve,
    cosine_similarity,
    derive_seed,
    shannon_entropy,
    softmax,
    softmax_rows,
)
from extractlab.exceptions import InvalidDistributionError
from extractlab.numerics import gaussian_vector, solve_with_factor


def gauss_solve_oracle(A, b):
    """Plain Gaussian elimination with partial pivoting, written first.

    Independent of the package's Cholesky path: no factorization reuse,
    no symmetry assumption.
    """
    A = np.array(A, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    n = A.shape[0]
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(A[col:, col])))
        if pivot != col:
            A[[col, pivot]] = A[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        for row in range(col + 1, n):
            f = A[row, col] / A[col, col]
            A[row, col:] -= f * A[col, col:]
            b[row] -= f * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - A[row, row + 1 :] @ x[row + 1 :]) / A[row, row]
    return x


def random_spd(seed: int, n: int) -> np.ndarray:
    M = SeededRng(seed).normal((n, n))
    return M @ M.T + n * np.eye(n)


# softmax([1, 2, 3]) evaluated in extended precision, rounded to float64
SOFTMAX_123 = (
    0.09003057317038046,
    0.24472847105479764,
    0.6652409557748219,
)


def test_softmax_reference_values():
    got = softmax(np.array([1.0, 2.0, 3.0]))
    assert np.max(np.abs(got - np.array(SOFTMAX_123))) < 1e-15
    # recompute the reference the long way to guard the frozen constants
    ref = np.exp(np.array([1, 2, 3], dtype=np.longdouble))
    ref = (ref / ref.sum()).astype(np.float64)
    assert got.tolist() == pytest.approx(ref.tolist(), abs=1e-15)


def test_softmax_symmetry_and_overflow():
    assert softmax(np.array([0.0, 0.0])).tolist() == [0.5, 0.5]
    big = softmax(np.array([1000.0, 0.0]))
    assert np.isfinite(big).all()
    assert big[0] > 1 - 1e-12 and big[1] < 1e-12


def test_softmax_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        softmax(np.array([]))
    with pytest.raises(InvalidInputError):
        softmax(np.array([1.0, np.nan]))


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12))
def test_softmax_normalized_and_shift_invariant(logits):
    v = np.asarray(logits)
    p = softmax(v)
    assert (p > 0).all()
    assert abs(p.sum() - 1.0) < 1e-12
    shifted = softmax(v + 17.25)
    assert np.max(np.abs(p - shifted)) < 1e-12


def test_softmax_rows_matches_vector_version():
    X = SeededRng(3).normal((6, 5))
    rows = softmax_rows(X)
    for i in range(6):
        assert np.array_equal(rows[i], softmax(X[i]))


def test_entropy_uniform_is_log_c():
    for c in (2, 3, 10, 31):
        assert abs(shannon_entropy(np.full(c, 1.0 / c)) - np.log(c)) < 1e-12


def test_entropy_trivial_cases():
    assert shannon_entropy(np.array([0.0, 1.0, 0.0])) == 0.0
    assert abs(shannon_entropy(np.array([0.5, 0.5])) - np.log(2)) < 1e-12


def test_entropy_of_softmax_123():
    # frozen from an extended-precision evaluation
    got = shannon_entropy(softmax(np.array([1.0, 2.0, 3.0])))
    assert abs(got - 0.8323955818399389) < 1e-14


def test_entropy_rejects_bad_distributions():
    with pytest.raises(InvalidDistributionError):
        shannon_entropy(np.array([0.5, 0.6]))
    with pytest.raises(InvalidDistributionError):
        shannon_entropy(np.array([-0.1, 1.1]))


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=10))
def test_entropy_maximized_at_uniform(logits):
    v = np.asarray(logits)
    assert shannon_entropy(softmax(v)) <= np.log(v.shape[0]) + 1e-12


def test_cosine_trivial_directions():
    parallel = cosine_similarity(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    assert abs(parallel - 1.0) < 1e-12
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    anti = cosine_similarity(np.array([1.0, 1.0]), np.array([-1.0, -1.0]))
    assert abs(anti + 1.0) < 1e-12


def test_cosine_degenerate_norm():
    with pytest.raises(DegenerateDisplacementError):
        cosine_similarity(np.zeros(3), np.ones(3))


@given(
    st.lists(st.floats(-10, 10), min_size=2, max_size=8),
    st.floats(0.01, 100),
    st.floats(0.01, 100),
)
def test_cosine_scale_invariant(u, alpha, beta):
    u = np.asarray(u)
    v = u[::-1].copy() + 0.5
    if np.linalg.norm(u) < 1e-6 or np.linalg.norm(v) < 1e-6:
        return
    base = cosine_similarity(u, v)
    assert abs(cosine_similarity(alpha * u, beta * v) - base) < 1e-12


def test_cholesky_solve_identity_and_diag():
    b = np.array([3.0, -1.0, 2.0])
    assert np.array_equal(cholesky_solve(np.eye(3), b), b)
    got = cholesky_solve(np.diag([2.0, 4.0]), np.array([2.0, 8.0]))
    assert got.tolist() == pytest.approx([1.0, 2.0], abs=1e-12)


def test_cholesky_solve_vs_elimination_oracle():
    A = random_spd(derive_seed(0, "spd-5"), 5)
    b = SeededRng(derive_seed(0, "rhs-5")).normal(5)
    got = cholesky_solve(A, b)
    want = gauss_solve_oracle(A, b)
    assert np.max(np.abs(got - want)) < 1e-8
    assert np.max(np.abs(A @ got - b)) <= 1e-8 * max(1.0, np.max(np.abs(b)))


def test_cholesky_solve_recovers_x_up_to_32():
    for n in (2, 8, 17, 32):
        A = random_spd(derive_seed(n, "spd"), n)
        x = SeededRng(derive_seed(n, "x")).normal(n)
        assert np.max(np.abs(cholesky_solve(A, A @ x) - x)) < 1e-8


def test_cholesky_factor_matches_reconstruction():
    A = random_spd(derive_seed(4, "spd-f"), 6)
    L = cholesky_factor(A)
    assert np.max(np.abs(L @ L.T - A)) < 1e-10
    assert np.allclose(L, np.tril(L))


def test_cholesky_matrix_rhs_and_solve_with_factor():
    A = random_spd(derive_seed(9, "spd-m"), 4)
    B = SeededRng(derive_seed(9, "rhs-m")).normal((4, 3))
    X = cholesky_solve(A, B)
    assert np.max(np.abs(A @ X - B)) < 1e-8
    L = cholesky_factor(A)
    assert np.array_equal(solve_with_factor(L, B), X)


def test_cholesky_rejects_non_spd():
    with pytest.raises(NumericalError) as err:
        cholesky_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))  # indefinite
    assert err.value.pivot_index is not None
    with pytest.raises(InvalidInputError):
        cholesky_solve(np.array([[1.0, 0.5], [0.2, 1.0]]), np.ones(2))  # asymmetric


def test_gaussian_vector_sigma_zero_and_stream():
    rng = SeededRng(21)
    z = gaussian_vector(rng, 4, 0.0)
    assert z.tolist() == [0.0, 0.0, 0.0, 0.0]
    assert rng.draws == 8  # stream advances even at sigma 0
    same_a = gaussian_vector(SeededRng(6), 5, 2.5)
    same_b = gaussian_vector(SeededRng(6), 5, 2.5)
    assert same_a.tolist() == same_b.tolist()
    assert np.array_equal(same_a, 2.5 * SeededRng(6).normal(5))
    with pytest.raises(InvalidInputError):
        gaussian_vector(rng, 0, 1.0)
