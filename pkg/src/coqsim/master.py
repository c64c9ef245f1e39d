"""Direct fixed-step integration of Lindblad master equations.

The right-hand side is applied channel-wise with dense matrix products
(never materializing the d^2 x d^2 superoperator), using

    d rho/dt = G rho + rho G^dag + sum_c J_c rho J_c^dag,
    G = -i H(t) - (1/2) sum_c J_c^dag J_c.

Time stepping is classical fixed-step RK4 with a documented default of
gamma * dt = 0.005; after every step the state is re-Hermitized and its
trace renormalized, which confines integrator drift to the part the
invariant checks then bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import DensityMatrix, SpaceMismatchError
from .generators import Generator

__all__ = [
    "DEFAULT_GAMMA_DT",
    "TimeGrid",
    "PositivityError",
    "ConvergenceError",
    "lindblad_rhs",
    "integrate",
    "steady_state",
]

DEFAULT_GAMMA_DT = 0.005

# abort threshold for the integrator; DensityMatrix itself enforces -1e-8
POSITIVITY_ABORT = -1e-6


class PositivityError(RuntimeError):
    """State left the positive cone beyond tolerance; the step size is too large."""


class ConvergenceError(RuntimeError):
    """steady_state did not converge within its horizon."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [t_start, t_end] sampled every ``sample_stride`` steps.

    The span must be an integer number of steps (to 1e-9 relative), so that
    sample times are exactly reproducible across runs and solvers.
    """

    t_start: float
    t_end: float
    dt: float
    sample_stride: int = 10

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("TimeGrid needs t_end > t_start")
        if not self.dt > 0:
            raise ValueError("TimeGrid needs dt > 0")
        if self.sample_stride < 1:
            raise ValueError("TimeGrid needs sample_stride >= 1")
        span = self.t_end - self.t_start
        n = round(span / self.dt)
        if n < 1 or abs(n * self.dt - span) > 1e-9 * max(1.0, span):
            raise ValueError("grid span must be an integer number of steps")

    @property
    def n_steps(self) -> int:
        return round((self.t_end - self.t_start) / self.dt)

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    def sample_indices(self) -> np.ndarray:
        return np.arange(0, self.n_steps + 1, self.sample_stride)

    def sample_times(self) -> np.ndarray:
        return self.t_start + self.dt * self.sample_indices()


class _Rhs:
    """Precomputed channel matrices; evaluates the Lindblad right-hand side."""

    def __init__(self, gen: Generator):
        self._h_fn = gen.h_fn
        self.js = [np.ascontiguousarray(ch.op.matrix) for ch in gen.channels]
        self.jds = [j.conj().T.copy() for j in self.js]
        d = gen.space.dim
        jdj = np.zeros((d, d), dtype=complex)
        for j, jd in zip(self.js, self.jds):
            jdj += jd @ j
        self._half_jdj = 0.5 * jdj
        self._static = gen.is_static
        if self._static:
            self._g = -1j * gen.h_matrix(0.0) - self._half_jdj
            self._gd = self._g.conj().T.copy()

    def g_pair(self, t: float):
        if self._static:
            return self._g, self._gd
        g = -1j * self._h_fn(t) - self._half_jdj
        return g, g.conj().T

    def __call__(self, rho: np.ndarray, t: float) -> np.ndarray:
        g, gd = self.g_pair(t)
        out = g @ rho
        out += rho @ gd
        for j, jd in zip(self.js, self.jds):
            out += j @ rho @ jd
        return out


def lindblad_rhs(gen: Generator, rho: DensityMatrix, t: float = 0.0) -> np.ndarray:
    """d rho/dt for the given generator at time t (plain matrix, not validated)."""
    if rho.space != gen.space:
        raise SpaceMismatchError("state and generator live on different spaces")
    return _Rhs(gen)(rho.matrix, t)


def _rk4_step(rhs: _Rhs, rho: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = rhs(rho, t)
    k2 = rhs(rho + (0.5 * dt) * k1, t + 0.5 * dt)
    k3 = rhs(rho + (0.5 * dt) * k2, t + 0.5 * dt)
    k4 = rhs(rho + dt * k3, t + dt)
    out = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # confine drift: re-Hermitize, renormalize trace
    out = 0.5 * (out + out.conj().T)
    out /= np.trace(out).real
    return out


def _check_and_wrap(gen: Generator, rho: np.ndarray, t: float, dt: float) -> DensityMatrix:
    w_min = float(np.linalg.eigvalsh(rho)[0])
    if w_min < POSITIVITY_ABORT:
        raise PositivityError(
            f"min eigenvalue {w_min:.3e} at t = {t:.6g}; "
            f"dt = {dt:.3g} is too large for this model")
    return DensityMatrix(gen.space, rho)


def integrate(gen: Generator, rho0: DensityMatrix, grid: TimeGrid):
    """Evolve rho0 over the grid; returns [(t, DensityMatrix)] at sample times.

    Every sample is validated against the DensityMatrix invariants; a
    positivity violation beyond 1e-6 aborts with a step-size diagnostic.
    """
    if rho0.space != gen.space:
        raise SpaceMismatchError("initial state and generator live on different spaces")
    rhs = _Rhs(gen)
    rho = rho0.matrix.copy()
    stride = grid.sample_stride
    out = [(grid.t_start, _check_and_wrap(gen, rho, grid.t_start, grid.dt))]
    for k in range(grid.n_steps):
        t = grid.t_start + k * grid.dt
        rho = _rk4_step(rhs, rho, t, grid.dt)
        if (k + 1) % stride == 0:
            t_next = grid.t_start + (k + 1) * grid.dt
            out.append((t_next, _check_and_wrap(gen, rho, t_next, grid.dt)))
    return out


def _default_rho0(gen: Generator) -> DensityMatrix:
    m = np.zeros((gen.space.dim, gen.space.dim), dtype=complex)
    m[0, 0] = 1.0   # vacuum and/or ground state
    return DensityMatrix(gen.space, m)


def steady_state(gen: Generator, tol: float = 1e-8, dt: float | None = None,
                 rho0: DensityMatrix | None = None,
                 max_time: float = 1000.0) -> DensityMatrix:
    """Integrate a time-independent generator until max |d rho/dt| < tol.

    The default step is 0.025 divided by a crude rate scale
    (||H||_inf + sum ||J^dag J||_inf); pass dt explicitly for odd scalings.
    """
    if not gen.is_static:
        raise ValueError("steady_state requires a time-independent generator")
    rhs = _Rhs(gen)
    if dt is None:
        scale = np.linalg.norm(gen.h_matrix(0.0), np.inf)
        scale += sum(np.linalg.norm(2.0 * half, np.inf)
                     for half in [rhs._half_jdj])
        dt = 0.025 / scale if scale > 0 else 0.1
    rho = (_default_rho0(gen) if rho0 is None else rho0).matrix.copy()
    t = 0.0
    chunk = 100
    while t < max_time:
        for _ in range(chunk):
            rho = _rk4_step(rhs, rho, t, dt)
            t += dt
        residual = float(np.max(np.abs(rhs(rho, t))))
        if residual < tol:
            return _check_and_wrap(gen, rho, t, dt)
    raise ConvergenceError(
        f"no steady state within t = {max_time:.3g} "
        f"(residual {float(np.max(np.abs(rhs(rho, t)))):.3e}, tol {tol:.1e})")
