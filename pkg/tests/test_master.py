import math

import numpy as np
import pytest

from coqsim import (
    CoherentField,
    ConstantAmplitude,
    ConstantDrive,
    ConvergenceError,
    DensityMatrix,
    ModelParams,
    PositivityError,
    TimeGrid,
    alpha_of_t,
    build_cascaded,
    build_laser,
    build_reduced_atom,
    coherent_state,
    compare_atom_dynamics,
    excitation_probability,
    expectation,
    factorization_deficit,
    fock_annihilation,
    fock_state,
    integrate,
    lindblad_rhs,
    product_state,
    purity,
    qubit_excited,
    qubit_ground,
    steady_state,
)


def fig2b_params():
    alpha = 2.0 / (4.0 * math.sqrt(0.2))
    return ModelParams(1.0, 0.2, 0.3, drive=ConstantDrive(alpha),
                       initial_field=CoherentField(alpha)), alpha


# ---------------------------------------------------------------------------
# TimeGrid

def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, -0.1)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 0.1, sample_stride=0)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 0.3)   # non-integral span


def test_grid_times_and_samples():
    g = TimeGrid(0.0, 1.0, 0.1, sample_stride=2)
    assert g.n_steps == 10
    np.testing.assert_allclose(g.times(), np.linspace(0, 1, 11), atol=1e-12)
    np.testing.assert_allclose(g.sample_times(), [0, 0.2, 0.4, 0.6, 0.8, 1.0],
                               atol=1e-12)


# ---------------------------------------------------------------------------
# right-hand side

def test_rhs_traceless_and_hermitian():
    gen = build_cascaded(fig2b_params()[0], 6)
    rng = np.random.default_rng(4)
    g = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    m = g @ g.conj().T
    rho = DensityMatrix(gen.space, m / np.trace(m))
    dr = lindblad_rhs(gen, rho, 0.0)
    assert abs(np.trace(dr)) <= 1e-12
    assert np.max(np.abs(dr - dr.conj().T)) <= 1e-12


def test_rhs_excited_population_decay():
    # H = 0 (alpha = 0), single channel sqrt(gamma) s-: d rho_ee/dt = -gamma
    p = ModelParams(1.0, 0.2, 0.3)
    gen = build_reduced_atom(p, ConstantAmplitude(0.0))
    rho = DensityMatrix.from_state(qubit_excited())
    dr = lindblad_rhs(gen, rho, 0.0)
    assert dr[1, 1].real == pytest.approx(-p.gamma, abs=1e-14)


def test_rhs_space_mismatch():
    from coqsim import SpaceMismatchError
    gen = build_reduced_atom(ModelParams(1.0, 0.2, 0.3), ConstantAmplitude(0.0))
    rho = DensityMatrix.from_state(fock_state(0, 3))
    with pytest.raises(SpaceMismatchError):
        lindblad_rhs(gen, rho, 0.0)


# ---------------------------------------------------------------------------
# integrate

def test_integrate_exponential_decay():
    p = ModelParams(1.0, 0.2, 0.3)   # gamma = 1
    gen = build_reduced_atom(p, ConstantAmplitude(0.0))
    out = integrate(gen, DensityMatrix.from_state(qubit_excited()),
                    TimeGrid(0.0, 8.0, 0.01, 25))
    for t, rho in out:
        assert excitation_probability(rho) == pytest.approx(
            math.exp(-t), abs=1e-8)


def test_integrate_fourth_order_convergence():
    # Richardson self-check on the driven reduced atom
    p = ModelParams(1.0, 0.2, 0.3)
    gen = build_reduced_atom(p, ConstantAmplitude(1.2))
    rho0 = DensityMatrix.from_state(qubit_ground())

    def pe_at_end(dt):
        out = integrate(gen, rho0, TimeGrid(0.0, 4.0, dt, round(4.0 / dt)))
        return excitation_probability(out[-1][1])

    ref = pe_at_end(0.00125)
    e_coarse = abs(pe_at_end(0.02) - ref)
    e_fine = abs(pe_at_end(0.01) - ref)
    assert e_coarse / e_fine == pytest.approx(16.0, rel=0.45)


def test_integrate_identity_when_drive_free():
    # kappa_L = 0: H = 0 and the output channel vanishes
    p = ModelParams(0.0, 0.0, 0.0, drive=ConstantDrive(0.0))
    gen = build_laser(p, 4)
    rho0 = DensityMatrix(gen.space, np.diag([0.4, 0.3, 0.2, 0.1]))
    out = integrate(gen, rho0, TimeGrid(0.0, 2.0, 0.01, 100))
    for _, rho in out:
        np.testing.assert_allclose(rho.matrix, rho0.matrix, atol=1e-13)


def test_integrate_positivity_abort():
    gen = build_reduced_atom(ModelParams(1.0, 0.2, 0.3), ConstantAmplitude(2.5))
    rho0 = DensityMatrix.from_state(qubit_ground())
    with pytest.raises(PositivityError, match="too large"):
        integrate(gen, rho0, TimeGrid(0.0, 32.0, 0.8, 1))


def test_integrate_samples_keep_invariants():
    params, alpha = fig2b_params()
    gen = build_cascaded(params, 18)
    psi0 = product_state(coherent_state(alpha, 18), qubit_ground())
    out = integrate(gen, DensityMatrix.from_state(psi0),
                    TimeGrid(0.0, 3.0, 0.005, 100))
    for _, rho in out:
        m = rho.matrix
        assert np.max(np.abs(m - m.conj().T)) <= 1e-10
        assert abs(np.trace(m) - 1.0) <= 1e-8
        assert np.linalg.eigvalsh(m)[0] >= -1e-8


# ---------------------------------------------------------------------------
# steady states

def test_steady_state_undriven_atom_is_ground():
    gen = build_reduced_atom(ModelParams(1.0, 0.2, 0.3), ConstantAmplitude(0.0))
    ss = steady_state(gen, tol=1e-10)
    np.testing.assert_allclose(ss.matrix, np.diag([1.0, 0.0]), atol=1e-8)


def test_steady_state_bloch_equations():
    # Omega = 2 gamma, delta = 0: p_e = (Omega^2/4) / (gamma^2/4 + Omega^2/2)
    alpha = 2.0 / (4.0 * math.sqrt(0.2))
    gen = build_reduced_atom(ModelParams(1.0, 0.2, 0.3), ConstantAmplitude(alpha))
    ss = steady_state(gen, tol=1e-10, dt=0.005)
    assert excitation_probability(ss) == pytest.approx(4.0 / 9.0, abs=1e-4)


def test_steady_state_laser_is_coherent():
    lam = 0.8
    n = 18
    gen = build_laser(ModelParams(1.0, 0.0, 0.0, drive=ConstantDrive(lam)), n)
    ss = steady_state(gen, tol=1e-10, dt=0.002)
    assert purity(ss) == pytest.approx(1.0, abs=1e-6)
    assert abs(expectation(fock_annihilation(n), ss) - lam) < 1e-6
    # fixed point of the amplitude equation: alpha_ss = lambda
    target = DensityMatrix.from_state(coherent_state(lam, n))
    assert np.max(np.abs(ss.matrix - target.matrix)) < 1e-6


def test_steady_state_requires_static_generator():
    p = ModelParams(1.0, 0.2, 0.3, delta=0.5)
    gen = build_reduced_atom(p, ConstantAmplitude(1.0))   # delta != 0: phases
    with pytest.raises(ValueError):
        steady_state(gen)


def test_steady_state_nonconvergence():
    gen = build_reduced_atom(ModelParams(1.0, 0.2, 0.3), ConstantAmplitude(1.0))
    with pytest.raises(ConvergenceError):
        steady_state(gen, tol=1e-14, max_time=0.5)


# ---------------------------------------------------------------------------
# full-model invariants (short grids; the full-scale runs live in acceptance)

@pytest.fixture(scope="module")
def fig2b_short_run():
    params, alpha = fig2b_params()
    n = 18
    gen = build_cascaded(params, n)
    psi0 = product_state(coherent_state(alpha, n), qubit_ground())
    grid = TimeGrid(0.0, 5.0, 0.005, 50)
    return params, alpha, integrate(gen, DensityMatrix.from_state(psi0), grid), grid


def test_field_marginal_stays_pure(fig2b_short_run):
    _, _, out, _ = fig2b_short_run
    assert max(factorization_deficit(rho) for _, rho in out) < 1e-4


def test_atom_marginal_matches_reduced_model(fig2b_short_run):
    params, alpha, full, grid = fig2b_short_run
    gen_red = build_reduced_atom(params, ConstantAmplitude(alpha))
    red = integrate(gen_red, DensityMatrix.from_state(qubit_ground()), grid)
    report = compare_atom_dynamics(full, red, tolerance=1e-3)
    assert report.passed
    assert report.series_errors["p_e"] <= 1e-3


def test_field_amplitude_matches_alpha_of_t(fig2b_short_run):
    params, alpha, full, _ = fig2b_short_run
    from coqsim.hilbert import lift_laser
    a = lift_laser(fock_annihilation(18))
    for t, rho in full:
        assert abs(expectation(a, rho) - alpha_of_t(params, t)) < 1e-4
