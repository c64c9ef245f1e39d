"""Finite-dimensional Hilbert-space algebra for the source-cavity / atom problem.

Fock ladders, qubits and their laser (x) atom composite; operators, pure
states and density matrices with validated invariants; tensor products,
partial trace, and bipartite entanglement entropy.

Conventions, fixed once so that stored results stay stable:

* the composite ordering is laser (x) atom, Fock index major
  (flat index = 2 * fock_level + atom_level);
* the atom basis is (|->, |+>) = (ground, excited), index 0 = ground;
* hbar = 1 everywhere, so Hamiltonians carry the units of the rates.

All values are immutable after construction (backing arrays are marked
read-only), so they can be shared freely between concurrent workers.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NORM_ATOL",
    "Subsystem",
    "SpaceSpec",
    "Operator",
    "StateVector",
    "DensityMatrix",
    "SpaceMismatchError",
    "TruncationWarning",
    "fock_space",
    "qubit_space",
    "composite_space",
    "identity",
    "fock_annihilation",
    "qubit_lowering",
    "fock_state",
    "basis_state",
    "coherent_state",
    "qubit_ground",
    "qubit_excited",
    "product_state",
    "tensor",
    "lift_laser",
    "lift_atom",
    "partial_trace",
    "schmidt_entropy",
    "von_neumann_entropy",
    "expectation",
    "purity",
    "coherent_tail_weight",
    "min_fock_levels",
]

# Invariant tolerances shared by the state types.
NORM_ATOL = 1e-10    # | ||psi||^2 - 1 | for states flagged normalized
HERM_ATOL = 1e-10    # max |rho - rho^dag|
TRACE_ATOL = 1e-8    # | tr(rho) - 1 |
EIG_ATOL = 1e-8      # tolerated negative eigenvalue magnitude


class SpaceMismatchError(ValueError):
    """Operands live on different or incompatible Hilbert spaces."""


class TruncationWarning(UserWarning):
    """Fock truncation below the adequacy rule; carries the dropped tail weight."""

    def __init__(self, message: str, tail_weight: float):
        super().__init__(message)
        self.tail_weight = tail_weight


class Subsystem(enum.Enum):
    LASER = "laser"
    ATOM = "atom"


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SpaceSpec:
    """Tagged Hilbert space: a truncated Fock ladder, a qubit, or their composite."""

    kind: str                    # "fock" | "qubit" | "composite"
    n_trunc: int | None = None   # Fock levels kept (None for a bare qubit)

    def __post_init__(self):
        if self.kind not in ("fock", "qubit", "composite"):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind == "qubit":
            if self.n_trunc is not None:
                raise ValueError("qubit space carries no Fock truncation")
        elif self.n_trunc is None or int(self.n_trunc) < 2:
            raise ValueError("Fock truncation must keep at least 2 levels")

    @property
    def dim(self) -> int:
        if self.kind == "qubit":
            return 2
        if self.kind == "fock":
            return self.n_trunc
        return 2 * self.n_trunc


def fock_space(n_trunc: int) -> SpaceSpec:
    return SpaceSpec("fock", int(n_trunc))


def qubit_space() -> SpaceSpec:
    return SpaceSpec("qubit")


def composite_space(n_trunc: int) -> SpaceSpec:
    """Laser (x) atom space, Fock index major."""
    return SpaceSpec("composite", int(n_trunc))


@dataclass(frozen=True)
class Operator:
    """Complex matrix tagged with the space it acts on."""

    space: SpaceSpec
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex, copy=True)
        d = self.space.dim
        if m.shape != (d, d):
            raise SpaceMismatchError(
                f"matrix shape {m.shape} does not match space dimension {d}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator entries must be finite")
        object.__setattr__(self, "matrix", _readonly(m))

    def adjoint(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def __matmul__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        if other.space != self.space:
            raise SpaceMismatchError("operator product across different spaces")
        return Operator(self.space, self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        if other.space != self.space:
            raise SpaceMismatchError("operator sum across different spaces")
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        if other.space != self.space:
            raise SpaceMismatchError("operator difference across different spaces")
        return Operator(self.space, self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.space, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.matrix)


@dataclass(frozen=True)
class StateVector:
    """Pure state; may be deliberately unnormalized between renormalizations."""

    space: SpaceSpec
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex, copy=True).reshape(-1)
        if v.shape != (self.space.dim,):
            raise SpaceMismatchError(
                f"amplitude count {v.size} does not match space dimension {self.space.dim}")
        if not np.all(np.isfinite(v)):
            raise ValueError("state amplitudes must be finite")
        n2 = float(np.real(np.vdot(v, v)))
        if n2 <= 0.0:
            raise ValueError("state vector must have positive norm")
        if self.normalized and abs(n2 - 1.0) > NORM_ATOL:
            raise ValueError(
                f"state flagged normalized but ||psi||^2 = {n2!r}")
        object.__setattr__(self, "amplitudes", _readonly(v))

    @property
    def norm2(self) -> float:
        return float(np.real(np.vdot(self.amplitudes, self.amplitudes)))

    def normalize(self) -> "StateVector":
        return StateVector(self.space,
                           self.amplitudes / math.sqrt(self.norm2),
                           normalized=True)


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state with Hermiticity / unit-trace / positivity invariants enforced."""

    space: SpaceSpec
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex, copy=True)
        d = self.space.dim
        if m.shape != (d, d):
            raise SpaceMismatchError(
                f"matrix shape {m.shape} does not match space dimension {d}")
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix entries must be finite")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERM_ATOL:
            raise ValueError(f"density matrix not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"density matrix trace {tr!r} differs from 1")
        w_min = float(np.linalg.eigvalsh((m + m.conj().T) / 2.0)[0])
        if w_min < -EIG_ATOL:
            raise ValueError(f"density matrix not positive: min eigenvalue {w_min:.3e}")
        object.__setattr__(self, "matrix", _readonly(m))

    @classmethod
    def from_state(cls, psi: StateVector) -> "DensityMatrix":
        v = psi.amplitudes
        return cls(psi.space, np.outer(v, v.conj()) / psi.norm2)


# ---------------------------------------------------------------------------
# operator and state constructors

def identity(space: SpaceSpec) -> Operator:
    return Operator(space, np.eye(space.dim, dtype=complex))


def fock_annihilation(n_trunc: int) -> Operator:
    """Truncated ladder operator a with a[n-1, n] = sqrt(n)."""
    n_trunc = int(n_trunc)
    if n_trunc < 2:
        raise ValueError("Fock truncation must keep at least 2 levels")
    m = np.diag(np.sqrt(np.arange(1, n_trunc, dtype=float)), k=1).astype(complex)
    return Operator(fock_space(n_trunc), m)


def qubit_lowering() -> Operator:
    """sigma_- = |-><+| in the (|->, |+>) basis; raising is its adjoint."""
    return Operator(qubit_space(), np.array([[0, 1], [0, 0]], dtype=complex))


def basis_state(space: SpaceSpec, index: int) -> StateVector:
    v = np.zeros(space.dim, dtype=complex)
    v[index] = 1.0
    return StateVector(space, v)


def fock_state(n: int, n_trunc: int) -> StateVector:
    if not 0 <= n < n_trunc:
        raise ValueError(f"Fock level {n} outside truncated ladder of {n_trunc} levels")
    return basis_state(fock_space(n_trunc), n)


def qubit_ground() -> StateVector:
    return basis_state(qubit_space(), 0)


def qubit_excited() -> StateVector:
    return basis_state(qubit_space(), 1)


def min_fock_levels(alpha: complex) -> int:
    """Truncation adequacy rule |alpha|^2 + 6 |alpha| + 10: keeps the Poisson
    tail weight of a coherent state below roughly 1e-9."""
    a = abs(alpha)
    return math.ceil(a * a + 6.0 * a + 10.0)


def coherent_tail_weight(alpha: complex, n_trunc: int) -> float:
    """Poisson weight of the Fock levels discarded by the truncation."""
    mean = abs(alpha) ** 2
    kept = 0.0
    term = math.exp(-mean)
    for n in range(int(n_trunc)):
        kept += term
        term *= mean / (n + 1)
    return max(0.0, 1.0 - kept)


def coherent_state(alpha: complex, n_trunc: int) -> StateVector:
    """Coherent state |alpha> on the truncated ladder, renormalized over the
    kept levels so downstream norm invariants are exact.

    Warns with a :class:`TruncationWarning` carrying the discarded tail weight
    when ``n_trunc`` is below :func:`min_fock_levels`.
    """
    alpha = complex(alpha)
    n_trunc = int(n_trunc)
    if n_trunc < 2:
        raise ValueError("Fock truncation must keep at least 2 levels")
    c = np.empty(n_trunc, dtype=complex)
    c[0] = math.exp(-abs(alpha) ** 2 / 2.0)
    for n in range(1, n_trunc):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    if n_trunc < min_fock_levels(alpha):
        tail = coherent_tail_weight(alpha, n_trunc)
        warnings.warn(
            TruncationWarning(
                f"n_trunc={n_trunc} below adequacy rule "
                f"{min_fock_levels(alpha)} for |alpha|={abs(alpha):.3g}; "
                f"discarded tail weight {tail:.3e}", tail),
            stacklevel=2)
    norm2 = float(np.real(np.vdot(c, c)))
    return StateVector(fock_space(n_trunc), c / math.sqrt(norm2))


# ---------------------------------------------------------------------------
# composition

def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product laser (x) atom; a on the Fock space, b on the qubit."""
    if a.space.kind != "fock" or b.space.kind != "qubit":
        raise SpaceMismatchError(
            "tensor expects a laser-space operator and an atom-space operator")
    return Operator(composite_space(a.space.n_trunc), np.kron(a.matrix, b.matrix))


def lift_laser(a: Operator) -> Operator:
    """Promote a Fock-space operator to the composite space (a (x) 1)."""
    return tensor(a, identity(qubit_space()))


def lift_atom(b: Operator, n_trunc: int) -> Operator:
    """Promote a qubit operator to the composite space (1 (x) b)."""
    return tensor(identity(fock_space(n_trunc)), b)


def product_state(field: StateVector, atom: StateVector) -> StateVector:
    if field.space.kind != "fock" or atom.space.kind != "qubit":
        raise SpaceMismatchError(
            "product_state expects a laser-space state and an atom-space state")
    return StateVector(composite_space(field.space.n_trunc),
                       np.kron(field.amplitudes, atom.amplitudes),
                       normalized=field.normalized and atom.normalized)


def partial_trace(rho: DensityMatrix, keep: Subsystem) -> DensityMatrix:
    """Reduced density matrix of the kept subsystem of a composite state."""
    if rho.space.kind != "composite":
        raise SpaceMismatchError("partial_trace requires a composite-space state")
    n = rho.space.n_trunc
    blocks = rho.matrix.reshape(n, 2, n, 2)
    if keep is Subsystem.LASER:
        reduced = np.einsum("iaja->ij", blocks)
        return DensityMatrix(fock_space(n), reduced)
    if keep is Subsystem.ATOM:
        reduced = np.einsum("iaib->ab", blocks)
        return DensityMatrix(qubit_space(), reduced)
    raise ValueError(f"unknown subsystem {keep!r}")


# ---------------------------------------------------------------------------
# scalar-valued maps

def expectation(a: Operator, state: StateVector | DensityMatrix) -> complex:
    """<psi|A|psi> / ||psi||^2 for pure states, tr(A rho) for mixed states."""
    if a.space != state.space:
        raise SpaceMismatchError("operator and state live on different spaces")
    if isinstance(state, StateVector):
        v = state.amplitudes
        return complex(np.vdot(v, a.matrix @ v) / state.norm2)
    return complex(np.trace(a.matrix @ state.matrix))


def schmidt_entropy(psi: StateVector) -> float:
    """Entanglement entropy (nats) across the laser/atom split of a pure state.

    Computed from the singular values of the amplitude matrix; lies in
    [0, ln 2] because the atom factor is two-dimensional.
    """
    if psi.space.kind != "composite":
        raise SpaceMismatchError("schmidt_entropy requires a composite-space state")
    if not psi.normalized or abs(psi.norm2 - 1.0) > NORM_ATOL:
        raise ValueError("schmidt_entropy requires a normalized state")
    s = np.linalg.svd(psi.amplitudes.reshape(psi.space.n_trunc, 2),
                      compute_uv=False)
    p = s * s
    p = p[p > 0.0]
    return max(0.0, float(-(p @ np.log(p))))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-tr(rho ln rho) from the eigenvalues; independent code path from
    :func:`schmidt_entropy` so the two can serve as mutual oracles."""
    w = np.linalg.eigvalsh(rho.matrix)
    w = w[w > 0.0]
    return max(0.0, float(-(w @ np.log(w))))


def purity(rho: DensityMatrix) -> float:
    return float(np.real(np.einsum("ij,ji->", rho.matrix, rho.matrix)))
