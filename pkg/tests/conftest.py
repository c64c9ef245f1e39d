import pytest

from coqsim import (
    CoherentField,
    ConstantDrive,
    ModelParams,
    TimeGrid,
    build_cascaded,
    fock_state,
    product_state,
    qubit_excited,
    run_ensemble,
)

# Undriven spontaneous decay of an excited atom into a vacuum field:
# a single quantum in the system, so every trajectory carries exactly one
# jump whose waiting time is exponential with rate gamma. Shared by the
# trajectory and analysis statistics tests.

DECAY_KAPPA_A = 0.2
DECAY_KAPPA_A_PRIME = 0.3      # gamma = 1


@pytest.fixture(scope="session")
def decay_ensemble():
    params = ModelParams(kappa_L=1.0, kappa_A=DECAY_KAPPA_A,
                         kappa_A_prime=DECAY_KAPPA_A_PRIME,
                         drive=ConstantDrive(0.0),
                         initial_field=CoherentField(0.0))
    gen = build_cascaded(params, 2)
    psi0 = product_state(fock_state(0, 2), qubit_excited())
    grid = TimeGrid(0.0, 16.0, 0.02, sample_stride=40)
    stats, records = run_ensemble(gen, psi0, grid, n_traj=10_000,
                                  master_seed=20240811, workers=2,
                                  return_records=True)
    return params, grid, stats, records
