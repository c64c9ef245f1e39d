"""Observables, comparisons, and estimators connecting the solvers.

Pure functions over immutable inputs: excitation probability, atomic
coherence, factorization deficit of the field marginal, master-vs-master
atom comparisons, Rabi-frequency and decoherence-rate fits, and jump
statistics over trajectory records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    DensityMatrix,
    SpaceMismatchError,
    StateVector,
    Subsystem,
    partial_trace,
    purity,
)
__all__ = [
    "ComparisonReport",
    "JumpStatistics",
    "excitation_probability",
    "atomic_coherence",
    "bloch_vector",
    "factorization_deficit",
    "compare_atom_dynamics",
    "estimate_rabi_frequency",
    "decoherence_rate_fit",
    "jump_statistics",
]


def _atom_marginal(state: DensityMatrix) -> DensityMatrix:
    if state.space.kind == "qubit":
        return state
    if state.space.kind == "composite":
        return partial_trace(state, Subsystem.ATOM)
    raise SpaceMismatchError("state carries no atom factor")


def excitation_probability(state: StateVector | DensityMatrix) -> float:
    """Probability of finding the atom excited, in [0, 1]."""
    if state.space.kind == "fock":
        raise SpaceMismatchError("state carries no atom factor")
    sel = slice(1, None, 2) if state.space.kind == "composite" else slice(1, 2)
    if isinstance(state, StateVector):
        seg = state.amplitudes[sel]
        p = float(np.real(np.vdot(seg, seg))) / state.norm2
    else:
        p = float(np.real(np.sum(np.diag(state.matrix)[sel])))
    return min(1.0, max(0.0, p))


def atomic_coherence(state: StateVector | DensityMatrix) -> complex:
    """<sigma_-> of the atom (factor), i.e. the dipole coherence."""
    if state.space.kind == "fock":
        raise SpaceMismatchError("state carries no atom factor")
    if isinstance(state, StateVector):
        v = state.amplitudes
        if state.space.kind == "composite":
            return complex(np.vdot(v[0::2], v[1::2]) / state.norm2)
        return complex(np.conj(v[0]) * v[1])
    m = state.matrix
    if state.space.kind == "composite":
        return complex(np.trace(m[1::2, 0::2]))
    return complex(m[1, 0])


def bloch_vector(state: StateVector | DensityMatrix) -> np.ndarray:
    """(<sx>, <sy>, <sz>) of the atom, with sz = |e><e| - |g><g|."""
    rho = state if isinstance(state, DensityMatrix) else DensityMatrix.from_state(state)
    atom = _atom_marginal(rho).matrix
    x = 2.0 * atom[0, 1].real
    y = 2.0 * atom[1, 0].imag
    z = (atom[1, 1] - atom[0, 0]).real
    return np.array([x, y, z])


def factorization_deficit(rho_full: DensityMatrix) -> float:
    """1 - purity of the field marginal; zero iff the field factor is pure."""
    if rho_full.space.kind != "composite":
        raise SpaceMismatchError("factorization deficit needs a composite state")
    return max(0.0, 1.0 - purity(partial_trace(rho_full, Subsystem.LASER)))


# ---------------------------------------------------------------------------
# solver-vs-solver comparison

@dataclass(frozen=True)
class ComparisonReport:
    """Pointwise errors between two atom histories on a common grid."""

    max_abs_error: float
    rms_error: float
    times: np.ndarray
    tolerance: float
    passed: bool
    series_errors: dict        # series name -> max abs error

    def to_json_dict(self) -> dict:
        return {"max_abs_error": self.max_abs_error,
                "rms_error": self.rms_error,
                "tolerance": self.tolerance,
                "passed": bool(self.passed),
                "series_errors": {k: float(v) for k, v in self.series_errors.items()}}


def compare_atom_dynamics(full, reduced, tolerance: float = 1e-3) -> ComparisonReport:
    """Compare atom marginals of two master-equation outputs.

    Both arguments are ``[(t, DensityMatrix)]`` sample lists on identical
    grids (composite states are reduced to the atom first). Errors cover
    p_e and the full Bloch vector; both histories must be expressed in the
    same rotating frame (automatic at delta = 0).
    """
    if len(full) != len(reduced):
        raise ValueError("sample lists differ in length")
    t1 = np.array([t for t, _ in full])
    t2 = np.array([t for t, _ in reduced])
    if not np.allclose(t1, t2, rtol=0.0, atol=1e-9):
        raise ValueError("sample grids differ")

    names = ("p_e", "bloch_x", "bloch_y", "bloch_z")
    diffs = {k: [] for k in names}
    for (_, ra), (_, rb) in zip(full, reduced):
        ma, mb = _atom_marginal(ra), _atom_marginal(rb)
        diffs["p_e"].append(excitation_probability(ma) - excitation_probability(mb))
        da = bloch_vector(ma) - bloch_vector(mb)
        diffs["bloch_x"].append(da[0])
        diffs["bloch_y"].append(da[1])
        diffs["bloch_z"].append(da[2])

    series_errors = {k: float(np.max(np.abs(v))) for k, v in diffs.items()}
    pooled = np.concatenate([np.asarray(v) for v in diffs.values()])
    max_err = float(np.max(np.abs(pooled)))
    rms = float(np.sqrt(np.mean(pooled ** 2)))
    return ComparisonReport(max_abs_error=max_err, rms_error=rms, times=t1,
                            tolerance=tolerance, passed=max_err <= tolerance,
                            series_errors=series_errors)


# ---------------------------------------------------------------------------
# scalar fits

def _extrema(times: np.ndarray, values: np.ndarray):
    """Interior extrema with three-point parabolic refinement.

    Returns (refined times, kinds) where kind is +1 for maxima, -1 for minima.
    """
    d = np.diff(values)
    s = np.sign(d)
    # carry the previous sign across flat segments
    for i in range(1, s.size):
        if s[i] == 0:
            s[i] = s[i - 1]
    t_ref, kind = [], []
    h = times[1] - times[0]
    for i in range(1, s.size):
        if s[i] != 0 and s[i - 1] != 0 and s[i] != s[i - 1]:
            y0, y1, y2 = values[i - 1], values[i], values[i + 1]
            denom = y0 - 2.0 * y1 + y2
            off = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
            t_ref.append(times[i] + off * h)
            kind.append(1 if s[i - 1] > 0 else -1)
    return np.array(t_ref), np.array(kind, dtype=int)


def estimate_rabi_frequency(times, pe) -> float:
    """2 pi over the mean peak-to-peak period of p_e(t).

    Needs at least three extrema; maxima and minima contribute their own
    period estimates, which are averaged.
    """
    times = np.asarray(times, dtype=float)
    pe = np.asarray(pe, dtype=float)
    t_ext, kind = _extrema(times, pe)
    if t_ext.size < 3:
        raise ValueError(
            f"only {t_ext.size} extrema found; series too short for a period fit")
    periods = []
    for k in (1, -1):
        tk = t_ext[kind == k]
        periods.extend(np.diff(tk))
    return 2.0 * math.pi / float(np.mean(periods))


def decoherence_rate_fit(times, coherence, residual_tol: float = 0.05) -> float:
    """Decay rate of |<sigma_->|(t) from a log-linear least-squares fit.

    Intended for an undriven free-decay segment. Raises if the fit's rms
    log-residual exceeds ``residual_tol`` (the data is not exponential).
    """
    times = np.asarray(times, dtype=float)
    mags = np.abs(np.asarray(coherence))
    if np.any(mags <= 0.0):
        raise ValueError("coherence magnitude must be positive on the fit window")
    y = np.log(mags)
    design = np.column_stack([times, np.ones_like(times)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ np.array([slope, intercept])
    rms = float(np.sqrt(np.mean(resid ** 2)))
    if rms > residual_tol:
        raise RuntimeError(
            f"free-decay fit residual {rms:.3g} exceeds {residual_tol}; "
            "the segment is not a clean exponential")
    return -float(slope)


# ---------------------------------------------------------------------------
# jump statistics

@dataclass(frozen=True)
class JumpStatistics:
    """Per-channel event rates (with standard errors over trajectories) and
    pooled inter-event waiting times, computed on events with t > t_min.

    Waiting times include the wait from t_min to the first event of each
    channel in each trajectory."""

    n_traj: int
    t_min: float
    duration: float
    rates: dict                # Channel -> (rate, stderr)
    waiting_times: dict        # Channel -> np.ndarray


def jump_statistics(records, t_min: float = 0.0) -> JumpStatistics:
    if not records:
        raise ValueError("need at least one trajectory record")
    channels = sorted({e.channel for r in records for e in r.events},
                      key=lambda c: c.value)
    t_end = float(records[0].times[-1])
    start = max(float(records[0].times[0]), t_min)
    duration = t_end - start
    if duration <= 0:
        raise ValueError("t_min lies beyond the record window")

    rates, waits = {}, {}
    n = len(records)
    for ch in channels:
        counts = np.empty(n)
        w = []
        for i, rec in enumerate(records):
            ts = [e.t for e in rec.events if e.channel == ch and e.t > start]
            counts[i] = len(ts)
            prev = start
            for t in ts:
                w.append(t - prev)
                prev = t
        per_traj = counts / duration
        err = float(per_traj.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        rates[ch] = (float(per_traj.mean()), err)
        waits[ch] = np.array(w)
    return JumpStatistics(n_traj=n, t_min=start, duration=duration,
                          rates=rates, waiting_times=waits)
