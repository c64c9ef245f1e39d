"""Monte-Carlo wave-function unraveling of the cascaded master equation.

A trajectory alternates deterministic non-Hermitian drift

    i d|psi_bar>/dt = H_B |psi_bar>,    H_B = H(t) - (i/2) sum_c J_c^dag J_c,

with stochastic quantum jumps |psi> -> J_c |psi> (renormalized), applied in
a Monte-Carlo fashion with per-step probabilities p_c = <J_c^dag J_c> dt.
The record of jump times and channels is the photodetection record; the
ensemble average over records recovers the master-equation solution.

Randomness and reproducibility
------------------------------
Each trajectory owns a counter-based Philox generator keyed by a 64-bit
seed; ensemble member i uses ``mix_seed(master_seed, i)`` (a splitmix64
finalizer, documented in :func:`mix_seed`). One uniform is consumed per
step in the default per-step scheme, so records are bit-identical for a
fixed seed regardless of execution order or worker count. Bit-exact
reproducibility is promised within this implementation, not across
languages or numpy's Philox revisions.

Jump scheme
-----------
The default "per-step" scheme is the literal first-order algorithm: one
uniform r per step, jump iff r < sum_c p_c, channel chosen proportionally
by reusing r (ties broken toward the first channel, Forward). A
"waiting-time" refinement (propagate the unnormalized state until its
squared norm crosses a uniform draw) is available behind the ``scheme``
flag for accuracy studies.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .hilbert import NORM_ATOL, Operator, SpaceMismatchError, StateVector
from .generators import Channel, Generator, JumpChannel
from .master import TimeGrid

__all__ = [
    "MAX_RATE_DT",
    "MAX_JUMP_PROB",
    "StepSizeError",
    "ImpossibleJumpError",
    "JumpEvent",
    "TrajectoryRecord",
    "EnsembleStats",
    "mix_seed",
    "nonhermitian_hamiltonian",
    "nojump_step",
    "jump_probabilities",
    "apply_jump",
    "run_trajectory",
    "run_ensemble",
    "record_to_json_dict",
    "write_records_jsonl",
]

MAX_RATE_DT = 0.05     # enforced on the continuous (no-jump) step
MAX_JUMP_PROB = 0.1    # hard cap on the total per-step jump probability
NORM_GROWTH_ATOL = 1e-12
LN2 = math.log(2.0)

_M64 = (1 << 64) - 1


class StepSizeError(RuntimeError):
    """dt too large for the jump rates of the current state."""


class ImpossibleJumpError(RuntimeError):
    """A jump produced a zero state: probability bookkeeping is broken."""


def mix_seed(master_seed: int, index: int) -> int:
    """Per-trajectory 64-bit seed: splitmix64 finalizer of
    ``master_seed + (index + 1) * 0x9E3779B97F4A7C15`` (all mod 2^64)."""
    z = (int(master_seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _M64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _M64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _M64
    z ^= z >> 31
    return z


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


# ---------------------------------------------------------------------------
# record types

@dataclass(frozen=True)
class JumpEvent:
    """One detection: time, channel, and the conditional excitation
    probability just before/after the jump (diagnostics for
    jump-conditioned statistics; only (t, channel) is serialized)."""

    t: float
    channel: Channel
    pe_before: float
    pe_after: float


@dataclass(frozen=True)
class TrajectoryRecord:
    """One stochastic realization: seed, detection record, and samples of
    (t, p_e, Schmidt entropy, pre-renormalization squared norm).

    Entropy is NaN for trajectories on non-composite spaces. On a no-jump
    step the recorded norm^2 is that of the drifted state before
    renormalization; on a jump step it is ||J_c psi||^2.
    """

    seed: int
    events: tuple[JumpEvent, ...]
    times: np.ndarray
    pe: np.ndarray
    entropy: np.ndarray
    norm2: np.ndarray

    def __post_init__(self):
        ts = [e.t for e in self.events]
        if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
            raise ValueError("jump events must be strictly time-ordered")
        pe = np.asarray(self.pe, dtype=float)
        if pe.min(initial=0.0) < -1e-9 or pe.max(initial=0.0) > 1.0 + 1e-9:
            raise ValueError("p_e outside [0, 1]")
        ent = np.asarray(self.entropy, dtype=float)
        finite = ent[np.isfinite(ent)]
        if finite.size and (finite.min() < -1e-9 or finite.max() > LN2 + 1e-9):
            raise ValueError("entropy outside [0, ln 2]")
        object.__setattr__(self, "pe", np.clip(pe, 0.0, 1.0))
        object.__setattr__(self, "entropy",
                           np.where(np.isfinite(ent), np.clip(ent, 0.0, LN2), ent))


@dataclass(frozen=True)
class EnsembleStats:
    """Grid-time means with standard errors plus per-channel jump rates
    (events per unit time, with standard errors over trajectories)."""

    times: np.ndarray
    mean_pe: np.ndarray
    stderr_pe: np.ndarray
    jump_rates: dict            # Channel -> (rate, stderr)
    n_traj: int


# ---------------------------------------------------------------------------
# single-step operations

def nonhermitian_hamiltonian(gen: Generator, t: float = 0.0) -> Operator:
    """H_B(t) = H(t) - (i/2) sum_c J_c^dag J_c."""
    h = gen.h_matrix(t).astype(complex)
    for ch in gen.channels:
        j = ch.op.matrix
        h = h - 0.5j * (j.conj().T @ j)
    return Operator(gen.space, h)


def _decay_rate(h_b: np.ndarray, psi: np.ndarray, norm2: float) -> float:
    # i (H_B - H_B^dag) reconstructs sum_c J_c^dag J_c
    s = 1j * (h_b - h_b.conj().T)
    return float(np.vdot(psi, s @ psi).real / norm2)


def _rk4_psi(a: np.ndarray, psi: np.ndarray, dt: float) -> np.ndarray:
    """One RK4 step of d psi/dt = a psi for constant a."""
    k1 = a @ psi
    k2 = a @ (psi + (0.5 * dt) * k1)
    k3 = a @ (psi + (0.5 * dt) * k2)
    k4 = a @ (psi + dt * k3)
    return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def nojump_step(psi: StateVector, h_b: Operator, dt: float) -> StateVector:
    """Propagate the (possibly unnormalized) state through one 4th-order
    step of i d|psi_bar>/dt = H_B |psi_bar|; the norm must not increase.

    The total decay rate of the state times dt must stay below
    ``MAX_RATE_DT``; H_B is treated as constant over the step.
    """
    if psi.space != h_b.space:
        raise SpaceMismatchError("state and Hamiltonian live on different spaces")
    v = psi.amplitudes
    n2 = psi.norm2
    rate = _decay_rate(h_b.matrix, v, n2)
    if rate * dt > MAX_RATE_DT:
        raise StepSizeError(
            f"rate*dt = {rate * dt:.3g} exceeds {MAX_RATE_DT}; reduce dt")
    out = _rk4_psi(-1j * h_b.matrix, v, dt)
    out_n2 = float(np.vdot(out, out).real)
    if out_n2 > n2 * (1.0 + NORM_GROWTH_ATOL):
        raise StepSizeError(
            f"norm increased by {out_n2 / n2 - 1.0:.3e} in one step; reduce dt")
    return StateVector(psi.space, out, normalized=False)


def jump_probabilities(psi: StateVector, channels, dt: float):
    """[(channel label, p_c)] with p_c = <psi|J_c^dag J_c|psi> dt.

    Requires a normalized state; errors if the total exceeds
    ``MAX_JUMP_PROB`` (dt too large).
    """
    if not psi.normalized or abs(psi.norm2 - 1.0) > NORM_ATOL:
        raise ValueError("jump probabilities require a normalized state")
    v = psi.amplitudes
    out = []
    for ch in channels:
        if ch.op.space != psi.space:
            raise SpaceMismatchError(f"channel {ch.label} on the wrong space")
        j = ch.op.matrix
        out.append((ch.label, dt * float(np.vdot(j @ v, j @ v).real)))
    total = sum(p for _, p in out)
    if total > MAX_JUMP_PROB:
        raise StepSizeError(
            f"total jump probability {total:.3g} exceeds {MAX_JUMP_PROB}; reduce dt")
    return out


def apply_jump(psi: StateVector, channel: JumpChannel) -> StateVector:
    """J_c |psi>, renormalized."""
    if channel.op.space != psi.space:
        raise SpaceMismatchError("jump channel on the wrong space")
    phi = channel.op.matrix @ psi.amplitudes
    n2 = float(np.vdot(phi, phi).real)
    if n2 <= 1e-20 * psi.norm2:
        raise ImpossibleJumpError(
            f"{channel.label} jump annihilated the state; "
            "its probability should have been zero")
    return StateVector(psi.space, phi / math.sqrt(n2), normalized=True)


# ---------------------------------------------------------------------------
# whole-trajectory driver

def _taylor4(a: np.ndarray) -> np.ndarray:
    """sum_{k<=4} a^k / k!: exactly the RK4 one-step map for a linear,
    autonomous system, as a single matrix."""
    d = a.shape[0]
    u = np.eye(d, dtype=complex)
    term = np.eye(d, dtype=complex)
    for k in range(1, 5):
        term = term @ a / k
        u = u + term
    return u


def _pe_indexer(space):
    if space.kind == "composite":
        return slice(1, None, 2)     # atom index minor: odd entries are excited
    if space.kind == "qubit":
        return slice(1, 2)
    return None


def _entropy_of(psi: np.ndarray, n_trunc: int) -> float:
    s = np.linalg.svd(psi.reshape(n_trunc, 2), compute_uv=False)
    p = s * s
    p = p[p > 0.0]
    return max(0.0, float(-(p @ np.log(p))))


def run_trajectory(gen: Generator, psi0: StateVector, grid: TimeGrid,
                   seed: int, scheme: str = "per-step") -> TrajectoryRecord:
    """One conditional evolution, deterministic given (gen, psi0, grid, seed).

    Per step of the default scheme: draw one uniform r; jump (channel
    proportional to p_c, reusing r) if r < sum p_c, otherwise drift with the
    non-Hermitian 4th-order step and renormalize. Samples are taken every
    ``grid.sample_stride`` steps. The drift guard ``MAX_RATE_DT`` is applied
    to the total jump rate up front so a step never depends on the draw.
    """
    if psi0.space != gen.space:
        raise SpaceMismatchError("initial state and generator live on different spaces")
    if not psi0.normalized:
        raise ValueError("run_trajectory requires a normalized initial state")
    if scheme not in ("per-step", "waiting-time"):
        raise ValueError(f"unknown jump scheme {scheme!r}")

    dt = grid.dt
    n_steps = grid.n_steps
    stride = grid.sample_stride
    labels = [ch.label for ch in gen.channels]
    js = [np.ascontiguousarray(ch.op.matrix) for ch in gen.channels]
    ms = [j.conj().T @ j for j in js]
    half_jdj = 0.5 * sum(ms)

    static = gen.is_static
    if static:
        a0 = -1j * gen.h_matrix(grid.t_start) - half_jdj
        u_step = _taylor4(dt * a0)

    def drift(v, t):
        if static:
            return u_step @ v
        # H_B frozen at the step midpoint for time-dependent generators
        a = -1j * gen.h_matrix(t + 0.5 * dt) - half_jdj
        return _rk4_psi(a, v, dt)

    pe_sel = _pe_indexer(gen.space)
    composite = gen.space.kind == "composite"
    n_trunc = gen.space.n_trunc if composite else 0

    def pe_of(v):
        seg = v[pe_sel]
        return float(np.real(np.vdot(seg, seg)))

    rng = _rng(seed)
    psi = psi0.amplitudes.copy()

    sample_idx = grid.sample_indices()
    n_samp = sample_idx.size
    pe_arr = np.empty(n_samp)
    ent_arr = np.full(n_samp, np.nan)
    norm2_arr = np.empty(n_samp)
    events: list[JumpEvent] = []

    def record(slot, v, norm2):
        pe_arr[slot] = pe_of(v)
        if composite:
            ent_arr[slot] = _entropy_of(v, n_trunc)
        norm2_arr[slot] = norm2

    record(0, psi, 1.0)
    next_slot = 1

    if scheme == "per-step":
        uniforms = rng.random(n_steps)
        for k in range(n_steps):
            t = grid.t_start + k * dt
            ps = [dt * float(np.vdot(psi, m @ psi).real) for m in ms]
            total = sum(ps)
            if total > MAX_RATE_DT:
                raise StepSizeError(
                    f"total jump probability {total:.3g} exceeds {MAX_RATE_DT} "
                    f"at t = {t:.6g}; reduce dt")
            r = uniforms[k]
            t_next = grid.t_start + (k + 1) * dt
            if r < total:
                acc = 0.0
                ci = 0
                for i, p in enumerate(ps):
                    acc += p
                    if r < acc:
                        ci = i
                        break
                phi = js[ci] @ psi
                n2 = float(np.vdot(phi, phi).real)
                if n2 <= 1e-20:
                    raise ImpossibleJumpError(
                        f"{labels[ci]} jump annihilated the state at t = {t:.6g}")
                pe_before = pe_of(psi)
                psi = phi / math.sqrt(n2)
                events.append(JumpEvent(t_next, labels[ci], pe_before, pe_of(psi)))
            else:
                phi = drift(psi, t)
                n2 = float(np.vdot(phi, phi).real)
                if n2 > 1.0 + NORM_GROWTH_ATOL:
                    raise StepSizeError(
                        f"norm increased by {n2 - 1.0:.3e} at t = {t:.6g}; reduce dt")
                psi = phi / math.sqrt(n2)
            if (k + 1) % stride == 0:
                record(next_slot, psi, n2)
                next_slot += 1
    else:
        threshold = rng.random()
        bar = psi                      # unnormalized between jumps
        bar_n2 = 1.0
        for k in range(n_steps):
            t = grid.t_start + k * dt
            t_next = grid.t_start + (k + 1) * dt
            phi = drift(bar, t)
            n2 = float(np.vdot(phi, phi).real)
            if n2 > bar_n2 * (1.0 + NORM_GROWTH_ATOL):
                raise StepSizeError(
                    f"norm increased by {n2 / bar_n2 - 1.0:.3e} at t = {t:.6g}")
            if n2 < bar_n2 * (1.0 - MAX_RATE_DT):
                raise StepSizeError(
                    f"norm dropped by {1.0 - n2 / bar_n2:.3g} in one step "
                    f"at t = {t:.6g}; reduce dt")
            if n2 <= threshold:
                psi = phi / math.sqrt(n2)
                ps = [float(np.vdot(psi, m @ psi).real) for m in ms]
                total = sum(ps)
                r2 = rng.random() * total
                acc = 0.0
                ci = 0
                for i, p in enumerate(ps):
                    acc += p
                    if r2 < acc:
                        ci = i
                        break
                chi = js[ci] @ psi
                chi_n2 = float(np.vdot(chi, chi).real)
                if chi_n2 <= 1e-20:
                    raise ImpossibleJumpError(
                        f"{labels[ci]} jump annihilated the state at t = {t:.6g}")
                pe_before = pe_of(psi)
                bar = chi / math.sqrt(chi_n2)
                events.append(JumpEvent(t_next, labels[ci], pe_before, pe_of(bar)))
                bar_n2 = 1.0
                threshold = rng.random()
                n2 = chi_n2
            else:
                bar = phi
                bar_n2 = n2
            psi = bar / math.sqrt(bar_n2)
            if (k + 1) % stride == 0:
                record(next_slot, psi, n2)
                next_slot += 1

    return TrajectoryRecord(seed=int(seed), events=tuple(events),
                            times=grid.sample_times(), pe=pe_arr,
                            entropy=ent_arr, norm2=norm2_arr)


# ---------------------------------------------------------------------------
# ensembles

def _run_chunk(gen, psi0, grid, seeds, scheme):
    return [run_trajectory(gen, psi0, grid, s, scheme) for s in seeds]


def run_ensemble(gen: Generator, psi0: StateVector, grid: TimeGrid,
                 n_traj: int, master_seed: int, workers: int | None = None,
                 scheme: str = "per-step", return_records: bool = False):
    """n_traj independent trajectories with seeds mix_seed(master_seed, i).

    Trajectories are embarrassingly parallel; ``workers`` processes are used
    (default: available parallelism). Aggregation runs over trajectories in
    index order, so the result is independent of execution order and worker
    count. Returns :class:`EnsembleStats`, or ``(stats, records)`` when
    ``return_records`` is set.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    seeds = [mix_seed(master_seed, i) for i in range(n_traj)]
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(int(workers), n_traj))

    if workers == 1:
        records = _run_chunk(gen, psi0, grid, seeds, scheme)
    else:
        bounds = np.linspace(0, n_traj, 4 * workers + 1).astype(int)
        chunks = [seeds[a:b] for a, b in zip(bounds, bounds[1:]) if b > a]
        records = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, gen, psi0, grid, c, scheme)
                       for c in chunks]
            for fut in futures:            # futures kept in chunk order
                records.extend(fut.result())

    pe_stack = np.stack([r.pe for r in records])
    mean_pe = pe_stack.mean(axis=0)
    if n_traj > 1:
        stderr_pe = pe_stack.std(axis=0, ddof=1) / math.sqrt(n_traj)
    else:
        stderr_pe = np.zeros_like(mean_pe)

    duration = grid.t_end - grid.t_start
    jump_rates = {}
    for ch in gen.channels:
        counts = np.array([sum(1 for e in r.events if e.channel == ch.label)
                           for r in records], dtype=float)
        rates = counts / duration
        err = rates.std(ddof=1) / math.sqrt(n_traj) if n_traj > 1 else 0.0
        jump_rates[ch.label] = (float(rates.mean()), float(err))

    stats = EnsembleStats(times=grid.sample_times(), mean_pe=mean_pe,
                          stderr_pe=stderr_pe, jump_rates=jump_rates,
                          n_traj=n_traj)
    return (stats, records) if return_records else stats


# ---------------------------------------------------------------------------
# serialization: one JSON object per trajectory

def record_to_json_dict(rec: TrajectoryRecord) -> dict:
    samples = []
    for t, pe, s, n2 in zip(rec.times, rec.pe, rec.entropy, rec.norm2):
        samples.append({"t": float(t), "pe": float(pe),
                        "S": None if math.isnan(s) else float(s),
                        "norm2": float(n2)})
    return {"seed": int(rec.seed),
            "events": [{"t": float(e.t), "channel": e.channel.value}
                       for e in rec.events],
            "samples": samples}


def write_records_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_json_dict(rec), allow_nan=False))
            fh.write("\n")
