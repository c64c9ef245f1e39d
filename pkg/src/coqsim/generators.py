"""Lindblad generators for the three models of the driven-atom problem.

* cascaded source (x) atom: coherently driven cavity whose output feeds a
  two-state atom through a unidirectional channel, with forwards- and
  side-scattering jump operators;
* source cavity alone: driven, damped harmonic mode;
* reduced atom alone: classical drive proportional to the cavity amplitude
  alpha(t), plus spontaneous emission at the full rate gamma.

Everything is expressed in the frame rotating at the drive frequency, so the
only surviving frequency on the atom is the detuning delta and a constant
drive gives a time-independent Hamiltonian.

Hamiltonian callables and drive shapes are small frozen dataclasses so that
generators pickle cleanly into worker processes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .hilbert import (
    Operator,
    SpaceSpec,
    StateVector,
    coherent_state,
    fock_annihilation,
    fock_state,
    lift_atom,
    lift_laser,
    qubit_lowering,
    qubit_space,
)

__all__ = [
    "ConstantDrive",
    "RectPulse",
    "GaussianPulse",
    "CoherentField",
    "FockField",
    "ModelParams",
    "Channel",
    "JumpChannel",
    "Generator",
    "ConstantAmplitude",
    "CoherentAmplitude",
    "coherent_amplitude",
    "alpha_of_t",
    "build_cascaded",
    "build_laser",
    "build_reduced_atom",
    "initial_field_state",
]


# ---------------------------------------------------------------------------
# drive shapes: lambda(t), the classical current feeding the source cavity

@dataclass(frozen=True)
class ConstantDrive:
    amplitude: complex

    def __call__(self, t: float) -> complex:
        return complex(self.amplitude)


@dataclass(frozen=True)
class RectPulse:
    """Constant amplitude on [t_on, t_off), zero outside."""

    amplitude: complex
    t_on: float
    t_off: float

    def __post_init__(self):
        if not self.t_off > self.t_on:
            raise ValueError("RectPulse needs t_off > t_on")

    def __call__(self, t: float) -> complex:
        return complex(self.amplitude) if self.t_on <= t < self.t_off else 0.0j


@dataclass(frozen=True)
class GaussianPulse:
    peak: complex
    t_center: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("GaussianPulse needs width > 0")

    def __call__(self, t: float) -> complex:
        x = (t - self.t_center) / self.width
        return complex(self.peak) * math.exp(-0.5 * x * x)


Drive = ConstantDrive | RectPulse | GaussianPulse


# ---------------------------------------------------------------------------
# model parameters

@dataclass(frozen=True)
class CoherentField:
    alpha: complex


@dataclass(frozen=True)
class FockField:
    n: int


@dataclass(frozen=True)
class ModelParams:
    """Physical rates and drive of the source/atom pair.

    kappa_L        half the source-cavity linewidth,
    kappa_A        forwards-channel atomic rate (overlap with the beam),
    kappa_A_prime  side-channel atomic rate (emission out of the beam),
    delta          atom-drive detuning,
    drive          classical current lambda(t) feeding the cavity,
    initial_field  cavity state at t = 0.

    The total free-space atomic decay rate is
    gamma = 2 kappa_A + 2 kappa_A_prime.
    """

    kappa_L: float
    kappa_A: float
    kappa_A_prime: float
    delta: float = 0.0
    drive: Drive = ConstantDrive(0.0)
    initial_field: CoherentField | FockField = CoherentField(0.0)

    def __post_init__(self):
        for name in ("kappa_L", "kappa_A", "kappa_A_prime"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def gamma(self) -> float:
        return 2.0 * (self.kappa_A + self.kappa_A_prime)


def initial_field_state(params: ModelParams, n_trunc: int) -> StateVector:
    """Cavity state at t = 0 on the truncated ladder."""
    f = params.initial_field
    if isinstance(f, CoherentField):
        return coherent_state(f.alpha, n_trunc)
    return fock_state(f.n, n_trunc)


# ---------------------------------------------------------------------------
# generator structure

class Channel(enum.Enum):
    FORWARD = "Forward"
    SIDE = "Side"
    LASER_OUT = "LaserOut"
    ATOM_OUT = "AtomOut"


@dataclass(frozen=True)
class JumpChannel:
    label: Channel
    op: Operator


@dataclass(frozen=True)
class Generator:
    """Hamiltonian-plus-jump-channels description of a Lindblad model.

    ``h_fn`` maps a time to the raw Hamiltonian matrix; ``is_static`` marks
    generators whose Hamiltonian does not depend on time, which integrators
    exploit. Immutable, safe to share between trajectory workers.
    """

    space: SpaceSpec
    h_fn: object                       # callable t -> np.ndarray
    channels: tuple[JumpChannel, ...]
    is_static: bool

    def __post_init__(self):
        for ch in self.channels:
            if ch.op.space != self.space:
                raise ValueError(f"channel {ch.label} lives on the wrong space")

    def hamiltonian(self, t: float) -> Operator:
        return Operator(self.space, self.h_fn(t))

    def h_matrix(self, t: float) -> np.ndarray:
        return self.h_fn(t)


@dataclass(frozen=True)
class _DrivenCavityHamiltonian:
    """H(t) = static + lambda(t) m + h.c., with m = i kappa_L a^dag (lifted)."""

    static: np.ndarray
    m: np.ndarray
    drive: Drive

    def __call__(self, t: float) -> np.ndarray:
        w = complex(self.drive(t)) * self.m
        return self.static + w + w.conj().T


@dataclass(frozen=True)
class _ClassicalDriveHamiltonian:
    """2x2 atom Hamiltonian i sqrt(4 kL kA) [a*(t) s- e^{-i d t} - h.c.]."""

    coupling: float                    # sqrt(4 kappa_L kappa_A)
    delta: float
    alpha_fn: object                   # callable t -> complex

    def __call__(self, t: float) -> np.ndarray:
        b = 1j * self.coupling * np.conj(complex(self.alpha_fn(t))) \
            * np.exp(-1j * self.delta * t)
        return np.array([[0.0, b], [np.conj(b), 0.0]], dtype=complex)


# ---------------------------------------------------------------------------
# coherent cavity amplitude

@dataclass(frozen=True)
class ConstantAmplitude:
    value: complex

    def __call__(self, t: float) -> complex:
        return complex(self.value)


@dataclass(frozen=True)
class CoherentAmplitude:
    """alpha(t) for a coherently seeded, classically driven, damped cavity:

        alpha(t) = alpha0 e^{-kappa_L t}
                   + kappa_L * integral_0^t e^{kappa_L (s - t)} lambda(s) ds,

    the solution of d(alpha)/dt = kappa_L (lambda - alpha). Evaluated in
    closed form for constant and rectangular drives and by adaptive
    quadrature (absolute tolerance 1e-10) for Gaussian pulses.
    """

    kappa_L: float
    alpha0: complex
    drive: Drive

    def __call__(self, t: float) -> complex:
        if t < 0:
            raise ValueError("alpha(t) defined for t >= 0")
        k = self.kappa_L
        out = complex(self.alpha0) * math.exp(-k * t)
        if isinstance(self.drive, ConstantDrive):
            lam = complex(self.drive.amplitude)
            out += lam * (1.0 - math.exp(-k * t))
        elif isinstance(self.drive, RectPulse):
            u = max(0.0, self.drive.t_on)
            v = min(t, self.drive.t_off)
            if v > u:
                lam = complex(self.drive.amplitude)
                out += lam * (math.exp(-k * (t - v)) - math.exp(-k * (t - u)))
        else:
            def integrand(s, part):
                val = k * math.exp(k * (s - t)) * complex(self.drive(s))
                return val.real if part == 0 else val.imag
            re, _ = quad(integrand, 0.0, t, args=(0,),
                         epsabs=1e-12, epsrel=1e-12, limit=400)
            im, _ = quad(integrand, 0.0, t, args=(1,),
                         epsabs=1e-12, epsrel=1e-12, limit=400)
            out += complex(re, im)
        return out


def coherent_amplitude(params: ModelParams) -> CoherentAmplitude:
    """Picklable alpha(t) callable for the given parameters.

    Requires a coherent initial field: the cavity amplitude only describes
    the state when the field stays in the coherent family.
    """
    if not isinstance(params.initial_field, CoherentField):
        raise ValueError(
            "coherent amplitude evolution requires a coherent initial field")
    return CoherentAmplitude(params.kappa_L, complex(params.initial_field.alpha),
                             params.drive)


def alpha_of_t(params: ModelParams, t: float) -> complex:
    return coherent_amplitude(params)(t)


# ---------------------------------------------------------------------------
# the three model builders

def build_cascaded(params: ModelParams, n_trunc: int) -> Generator:
    """Full source (x) atom model on the composite space.

    H(t) = delta s+ s-  +  i kappa_L (lambda(t) a^dag - h.c.)
           + i sqrt(kappa_L kappa_A) (a^dag s- - a s+)

    with jump channels

    Forward:  sqrt(2 kappa_L) a + sqrt(2 kappa_A) s-
    Side:     sqrt(2 kappa_A') s-
    """
    a = lift_laser(fock_annihilation(n_trunc))
    sm = lift_atom(qubit_lowering(), n_trunc)
    ad, sp = a.adjoint(), sm.adjoint()
    space = a.space

    coupling = math.sqrt(params.kappa_L * params.kappa_A)
    static = (params.delta * (sp @ sm).matrix
              + 1j * coupling * (ad.matrix @ sm.matrix - a.matrix @ sp.matrix))
    m_drive = 1j * params.kappa_L * ad.matrix

    j_forward = Operator(space, math.sqrt(2.0 * params.kappa_L) * a.matrix
                         + math.sqrt(2.0 * params.kappa_A) * sm.matrix)
    j_side = Operator(space, math.sqrt(2.0 * params.kappa_A_prime) * sm.matrix)

    return Generator(
        space=space,
        h_fn=_DrivenCavityHamiltonian(static, m_drive, params.drive),
        channels=(JumpChannel(Channel.FORWARD, j_forward),
                  JumpChannel(Channel.SIDE, j_side)),
        is_static=isinstance(params.drive, ConstantDrive),
    )


def build_laser(params: ModelParams, n_trunc: int) -> Generator:
    """Source cavity alone: driven mode with output channel sqrt(2 kappa_L) a."""
    a = fock_annihilation(n_trunc)
    space = a.space
    static = np.zeros((n_trunc, n_trunc), dtype=complex)
    m_drive = 1j * params.kappa_L * a.adjoint().matrix
    j_out = Operator(space, math.sqrt(2.0 * params.kappa_L) * a.matrix)
    return Generator(
        space=space,
        h_fn=_DrivenCavityHamiltonian(static, m_drive, params.drive),
        channels=(JumpChannel(Channel.LASER_OUT, j_out),),
        is_static=isinstance(params.drive, ConstantDrive),
    )


def build_reduced_atom(params: ModelParams, alpha_fn) -> Generator:
    """Atom alone, driven by the classical amplitude alpha(t).

    H(t) = i sqrt(4 kappa_L kappa_A) [alpha*(t) s- e^{-i delta t} - h.c.]
    with the single decay channel sqrt(gamma) s-.
    """
    sm = qubit_lowering()
    coupling = math.sqrt(4.0 * params.kappa_L * params.kappa_A)
    j_atom = Operator(qubit_space(), math.sqrt(params.gamma) * sm.matrix)
    return Generator(
        space=qubit_space(),
        h_fn=_ClassicalDriveHamiltonian(coupling, params.delta, alpha_fn),
        channels=(JumpChannel(Channel.ATOM_OUT, j_atom),),
        is_static=(params.delta == 0.0 and isinstance(alpha_fn, ConstantAmplitude)),
    )
