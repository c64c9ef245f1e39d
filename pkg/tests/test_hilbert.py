import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coqsim.hilbert import (
    DensityMatrix,
    Operator,
    SpaceMismatchError,
    StateVector,
    Subsystem,
    TruncationWarning,
    basis_state,
    coherent_state,
    coherent_tail_weight,
    composite_space,
    expectation,
    fock_annihilation,
    fock_space,
    fock_state,
    identity,
    lift_atom,
    lift_laser,
    min_fock_levels,
    partial_trace,
    product_state,
    purity,
    qubit_excited,
    qubit_ground,
    qubit_lowering,
    qubit_space,
    schmidt_entropy,
    tensor,
    von_neumann_entropy,
)

LN2 = math.log(2.0)


def random_state(dim, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(dim, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return m / np.trace(m)


# ---------------------------------------------------------------------------
# spaces and value types

def test_space_dimensions():
    assert fock_space(5).dim == 5
    assert qubit_space().dim == 2
    assert composite_space(7).dim == 14


@pytest.mark.parametrize("n", [0, 1, -3])
def test_fock_space_needs_two_levels(n):
    with pytest.raises(ValueError):
        fock_space(n)
    with pytest.raises(ValueError):
        fock_annihilation(n)


def test_operator_shape_checked():
    with pytest.raises(SpaceMismatchError):
        Operator(fock_space(3), np.eye(4))


def test_operator_entries_finite():
    m = np.eye(2, dtype=complex)
    m[0, 0] = np.nan
    with pytest.raises(ValueError):
        Operator(qubit_space(), m)


def test_operator_double_adjoint():
    rng = np.random.default_rng(7)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    op = Operator(fock_space(4), m)
    np.testing.assert_array_equal(op.adjoint().adjoint().matrix, op.matrix)


def test_operator_matrix_is_readonly():
    op = identity(qubit_space())
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 5.0


def test_statevector_normalized_flag_enforced():
    with pytest.raises(ValueError):
        StateVector(qubit_space(), [1.0, 1.0], normalized=True)
    psi = StateVector(qubit_space(), [1.0, 1.0], normalized=False)
    assert psi.norm2 == pytest.approx(2.0)
    assert psi.normalize().norm2 == pytest.approx(1.0, abs=1e-14)


def test_statevector_zero_rejected():
    with pytest.raises(ValueError):
        StateVector(qubit_space(), [0.0, 0.0], normalized=False)


def test_density_matrix_invariants():
    DensityMatrix(qubit_space(), np.diag([0.25, 0.75]))
    with pytest.raises(ValueError):  # not Hermitian
        DensityMatrix(qubit_space(), np.array([[0.5, 0.3], [0.0, 0.5]]))
    with pytest.raises(ValueError):  # trace off
        DensityMatrix(qubit_space(), np.diag([0.6, 0.6]))
    with pytest.raises(ValueError):  # negative eigenvalue
        DensityMatrix(qubit_space(), np.diag([1.2, -0.2]))


# ---------------------------------------------------------------------------
# ladder and atom operators

def test_fock_annihilation_entries():
    a = fock_annihilation(3).matrix
    expected = np.zeros((3, 3), dtype=complex)
    expected[0, 1] = 1.0
    expected[1, 2] = math.sqrt(2.0)
    np.testing.assert_array_equal(a, expected)


def test_annihilation_kills_vacuum():
    a = fock_annihilation(4)
    out = a.matrix @ fock_state(0, 4).amplitudes
    assert np.all(out == 0.0)


def test_coherent_expectation_of_a():
    # oracle: direct summation of the truncated, renormalized Poisson series
    alpha, n = 1.5, 25
    psi = coherent_state(alpha, n)
    a = fock_annihilation(n)
    got = expectation(a, psi)
    c = [math.exp(-alpha * alpha / 2) * alpha ** k / math.sqrt(math.factorial(k))
         for k in range(n)]
    norm2 = sum(ck * ck for ck in c)
    brute = sum(c[k] * c[k + 1] * math.sqrt(k + 1) for k in range(n - 1)) / norm2
    assert got == pytest.approx(alpha, abs=1e-8)
    assert got == pytest.approx(brute, abs=1e-12)


def test_qubit_lowering_action():
    sm = qubit_lowering()
    np.testing.assert_allclose(sm.matrix @ qubit_excited().amplitudes,
                               qubit_ground().amplitudes)
    assert np.all(sm.matrix @ qubit_ground().amplitudes == 0.0)
    proj = (sm.adjoint() @ sm).matrix
    np.testing.assert_array_equal(proj, np.diag([0.0, 1.0]).astype(complex))


# ---------------------------------------------------------------------------
# coherent states

def test_coherent_state_vacuum_limit():
    psi = coherent_state(0.0, 10)
    np.testing.assert_array_equal(psi.amplitudes, fock_state(0, 10).amplitudes)


def test_coherent_state_tail_weight():
    # Poisson tail beyond 30 levels at |alpha|^2 = 4 is far below 1e-10
    tail = coherent_tail_weight(2.0, 30)
    assert tail < 1e-10
    # pre-renormalization norm: rebuild the raw amplitudes
    alpha = 2.0
    c = [math.exp(-2.0) * alpha ** k / math.sqrt(math.factorial(k)) for k in range(30)]
    assert abs(sum(ck * ck for ck in c) - 1.0) < 1e-10


def test_coherent_state_eigenresidual():
    psi = coherent_state(2.0, 30)
    a = fock_annihilation(30)
    residual = np.linalg.norm(a.matrix @ psi.amplitudes - 2.0 * psi.amplitudes)
    assert residual <= 1e-6


def test_coherent_state_eigenresidual_monotone():
    alpha = 1.7
    residuals = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        for n in (14, 18, 22, 26, 30):
            psi = coherent_state(alpha, n)
            a = fock_annihilation(n)
            residuals.append(
                np.linalg.norm(a.matrix @ psi.amplitudes - alpha * psi.amplitudes))
    assert all(r1 > r2 for r1, r2 in zip(residuals, residuals[1:]))


def test_coherent_state_warns_below_rule():
    with pytest.warns(TruncationWarning) as rec:
        coherent_state(3.0, 12)   # rule asks for >= 37
    w = rec[0].message
    assert w.tail_weight > 0.0
    assert w.tail_weight == pytest.approx(coherent_tail_weight(3.0, 12), rel=1e-12)
    assert min_fock_levels(3.0) == 37


def test_coherent_mean_photon_number():
    psi = coherent_state(2.0, 30)
    a = fock_annihilation(30)
    n_op = a.adjoint() @ a
    assert expectation(n_op, psi).real == pytest.approx(4.0, abs=1e-6)
    vac = fock_state(0, 30)
    assert expectation(n_op, vac) == 0.0


# ---------------------------------------------------------------------------
# tensor structure

def test_tensor_dimensions_and_factorization():
    a = fock_annihilation(4)
    sp = qubit_lowering().adjoint()
    ab = tensor(a, sp)
    assert ab.space.dim == a.space.dim * 2
    left = lift_laser(a)
    right = lift_atom(sp, 4)
    np.testing.assert_allclose((left @ right).matrix, ab.matrix)


def test_tensor_action_on_product_state():
    # (a (x) sigma+) |1,-> = |0,+>
    op = tensor(fock_annihilation(3), qubit_lowering().adjoint())
    psi = product_state(fock_state(1, 3), qubit_ground())
    out = op.matrix @ psi.amplitudes
    expected = product_state(fock_state(0, 3), qubit_excited()).amplitudes
    np.testing.assert_allclose(out, expected)


def test_tensor_space_mismatch():
    with pytest.raises(SpaceMismatchError):
        tensor(qubit_lowering(), qubit_lowering())
    with pytest.raises(SpaceMismatchError):
        tensor(fock_annihilation(3), fock_annihilation(3))


def test_adjoint_distributes_over_tensor():
    rng = np.random.default_rng(3)
    for seed in range(5):
        ma = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        mb = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        a = Operator(fock_space(3), ma)
        b = Operator(qubit_space(), mb)
        np.testing.assert_array_equal(tensor(a, b).adjoint().matrix,
                                      tensor(a.adjoint(), b.adjoint()).matrix)


# ---------------------------------------------------------------------------
# partial trace and entropies

def test_partial_trace_of_product():
    rho_l = DensityMatrix(fock_space(3), random_density(3, 11))
    rho_a = DensityMatrix(qubit_space(), random_density(2, 12))
    joint = DensityMatrix(composite_space(3), np.kron(rho_l.matrix, rho_a.matrix))
    np.testing.assert_allclose(partial_trace(joint, Subsystem.LASER).matrix,
                               rho_l.matrix, atol=1e-12)
    np.testing.assert_allclose(partial_trace(joint, Subsystem.ATOM).matrix,
                               rho_a.matrix, atol=1e-12)


def test_partial_trace_bell_state():
    # (|0,-> + |1,+>)/sqrt(2): either marginal is maximally mixed
    v = (product_state(fock_state(0, 2), qubit_ground()).amplitudes
         + product_state(fock_state(1, 2), qubit_excited()).amplitudes) / math.sqrt(2)
    psi = StateVector(composite_space(2), v)
    rho = DensityMatrix.from_state(psi)
    np.testing.assert_allclose(partial_trace(rho, Subsystem.ATOM).matrix,
                               np.eye(2) / 2.0, atol=1e-12)
    assert schmidt_entropy(psi) == pytest.approx(LN2, abs=1e-12)


def test_partial_trace_requires_composite():
    rho = DensityMatrix(qubit_space(), np.eye(2) / 2.0)
    with pytest.raises(SpaceMismatchError):
        partial_trace(rho, Subsystem.ATOM)


def test_pure_product_reduced_purity():
    psi = product_state(coherent_state(0.8, 16), qubit_excited())
    rho = DensityMatrix.from_state(psi)
    assert purity(partial_trace(rho, Subsystem.LASER)) == pytest.approx(1.0, abs=1e-10)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=25, deadline=None)
def test_partial_trace_preserves_trace(seed):
    n = 2 + seed % 5
    rho = DensityMatrix(composite_space(n), random_density(2 * n, seed))
    for keep in (Subsystem.LASER, Subsystem.ATOM):
        reduced = partial_trace(rho, keep)
        assert abs(np.trace(reduced.matrix) - 1.0) <= 1e-12


def test_schmidt_entropy_product_state_is_zero():
    psi = product_state(coherent_state(1.2, 20), qubit_excited())
    assert schmidt_entropy(psi) <= 1e-10


def test_schmidt_entropy_jump_image_state():
    # sqrt(2 kL n) |n-1,+> + sqrt(2 kA) |n,->, kL = kA, n = 1: balanced split
    k = 0.7
    v = (math.sqrt(2 * k * 1) * product_state(fock_state(0, 3), qubit_excited()).amplitudes
         + math.sqrt(2 * k) * product_state(fock_state(1, 3), qubit_ground()).amplitudes)
    v /= np.linalg.norm(v)
    psi = StateVector(composite_space(3), v)
    assert schmidt_entropy(psi) == pytest.approx(LN2, abs=1e-12)
    # SVD oracle: eigenvalues of the 2x2 reduced matrix
    rho_a = partial_trace(DensityMatrix.from_state(psi), Subsystem.ATOM)
    w = np.linalg.eigvalsh(rho_a.matrix)
    np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-12)


def test_schmidt_entropy_rejects_unnormalized():
    v = np.zeros(6, dtype=complex)
    v[0] = 2.0
    psi = StateVector(composite_space(3), v, normalized=False)
    with pytest.raises(ValueError):
        schmidt_entropy(psi)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=30, deadline=None)
def test_schmidt_vs_von_neumann_oracle(seed):
    n = 2 + seed % 11  # up to N_trunc = 12
    psi = StateVector(composite_space(n), random_state(2 * n, seed))
    s_schmidt = schmidt_entropy(psi)
    s_vn = von_neumann_entropy(partial_trace(DensityMatrix.from_state(psi),
                                             Subsystem.ATOM))
    assert s_schmidt == pytest.approx(s_vn, abs=1e-8)
    assert 0.0 <= s_schmidt <= LN2 + 1e-12


# ---------------------------------------------------------------------------
# expectation values

def test_expectation_hermitian_is_real():
    n = 6
    rng = np.random.default_rng(21)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    herm = Operator(fock_space(n), (g + g.conj().T) / 2)
    psi = StateVector(fock_space(n), random_state(n, 5))
    assert abs(expectation(herm, psi).imag) <= 1e-12
    rho = DensityMatrix(fock_space(n), random_density(n, 6))
    assert abs(expectation(herm, rho).imag) <= 1e-12


def test_expectation_space_mismatch():
    with pytest.raises(SpaceMismatchError):
        expectation(qubit_lowering(), fock_state(0, 3))


def test_expectation_unnormalized_state_divides_norm():
    psi = StateVector(qubit_space(), [0.0, 3.0], normalized=False)
    proj = qubit_lowering().adjoint() @ qubit_lowering()
    assert expectation(proj, psi).real == pytest.approx(1.0)


def test_basis_state_roundtrip():
    for i in range(4):
        v = basis_state(fock_space(4), i).amplitudes
        assert v[i] == 1.0 and np.count_nonzero(v) == 1
