"""Continuous-time ASEP on Z with diffusive rescaling into the moving frame.

Dynamics are exact in law: the total attempt rate of m particles is
m*(p+q) = m, event times are the cumulative sums of Exp(m) draws, each event
picks a uniform particle and a direction (right with probability p), and
blocked jumps are rejected.  All replicas are advanced in lockstep over a
padded event schedule, which keeps the simulation vectorized without
changing the law.

Frame shifts use the integer part with truncation toward zero, so the
primal frame shift trunc((p-q)*t) and the dual shift trunc((q-p)*t) are
exact negatives of each other for every t; the lattice duality identity
holds in the moving frames only because of this balance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .model import Config, DECREASING, INCREASING, ModelParams, duality_h
from .rng import seed_stream


@dataclass(frozen=True)
class AsepState:
    """Strictly ordered occupied sites w_1 < ... < w_m at a given time."""

    sites: np.ndarray
    params: ModelParams
    time: float = 0.0

    def __post_init__(self):
        sites = np.asarray(self.sites, dtype=np.int64)
        if sites.ndim != 1 or sites.size == 0:
            raise InvalidInputError("sites must be a non-empty 1-d integer array")
        if np.any(np.diff(sites) <= 0):
            raise InvalidInputError("exclusion violated: sites must be strictly increasing")
        object.__setattr__(self, "sites", sites.copy())
        self.sites.setflags(write=False)


def _event_budget(m: int, horizon: float) -> int:
    lam = m * horizon
    return int(np.ceil(lam + 10.0 * np.sqrt(lam + 1.0) + 25.0))


def simulate_asep_batch(initial_sites, params: ModelParams, t_end: float,
                        n_replicas: int, seed: int, dual: bool = False,
                        stream_offset: int = 0) -> np.ndarray:
    """Terminal sites (n_replicas, m) after continuous-time ASEP for t_end.

    dual=True swaps the jump rates (right with rate q, left with rate p).
    """
    sites0 = np.asarray(initial_sites, dtype=np.int64)
    m = sites0.size
    if t_end < 0:
        raise InvalidInputError("t_end must be nonnegative")
    right_prob = params.q if dual else params.p
    gen = seed_stream(seed, stream_offset)
    w = np.tile(sites0, (n_replicas, 1))
    if t_end == 0:
        return w
    k_max = _event_budget(m, t_end)
    # event times: cumulative Exp(m) waits per replica
    waits = gen.exponential(scale=1.0 / m, size=(n_replicas, k_max))
    times = np.cumsum(waits, axis=1)
    who = gen.integers(0, m, size=(n_replicas, k_max))
    goes_right = gen.random(size=(n_replicas, k_max)) < right_prob
    rows = np.arange(n_replicas)
    for k in range(k_max):
        active = times[:, k] <= t_end
        if not np.any(active):
            break
        part = who[:, k]
        right = goes_right[:, k]
        cur = w[rows, part]
        target = cur + np.where(right, 1, -1)
        # exclusion: the only site that can block is the ordered neighbor
        right_nb = np.where(part + 1 < m, w[rows, np.minimum(part + 1, m - 1)],
                            np.iinfo(np.int64).max)
        left_nb = np.where(part > 0, w[rows, np.maximum(part - 1, 0)],
                           np.iinfo(np.int64).min)
        blocked = np.where(right, target == right_nb, target == left_nb)
        doit = active & ~blocked
        w[rows[doit], part[doit]] = target[doit]
    else:
        if np.any(times[:, -1] <= t_end):
            raise InvalidInputError("event budget exhausted; horizon too long")
    return w


def simulate_asep(initial: AsepState, t_end: float, seed: int) -> AsepState:
    """Advance one ASEP state by t_end (exact in law)."""
    out = simulate_asep_batch(initial.sites, initial.params, t_end, 1, seed)
    return AsepState(sites=out[0], params=initial.params,
                     time=initial.time + t_end)


def frame_shift(velocity: float, lattice_time: float) -> int:
    """Integer part (truncated toward zero) of velocity * lattice_time."""
    return int(np.trunc(velocity * lattice_time))


def rescale_diffusive(state: AsepState, epsilon: float) -> Config:
    """y_j = eps*(w_j(eps^{-2} t) - trunc((p-q) eps^{-2} t)) as a Config.

    state.time must already be the lattice time eps^{-2} * t.
    """
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")
    shift = frame_shift(state.params.p - state.params.q, state.time)
    return Config.increasing(epsilon * (state.sites - shift))


def asep_duality_check(x0: Config, y0: Config, t: float, epsilon: float,
                       n_samples: int, seed: int, params: ModelParams):
    """Both sides of the lattice duality at scale epsilon.

    lhs: MC average of H(x^eps(t), y0) over dual-ASEP runs (frame velocity
    q-p); rhs: MC average of H(x0, y^eps(t)) over primal runs (frame
    velocity p-q).  Returns (lhs, rhs, combined stderr).
    """
    x0.require(DECREASING)
    y0.require(INCREASING)
    lattice_t = t / epsilon**2
    wx = np.rint(x0.positions / epsilon).astype(np.int64)
    wy = np.rint(y0.positions / epsilon).astype(np.int64)
    if (np.max(np.abs(wx * epsilon - x0.positions)) > 1e-9
            or np.max(np.abs(wy * epsilon - y0.positions)) > 1e-9):
        raise InvalidInputError("configurations must be eps-lattice aligned")

    # dual particles: sites ascending regardless of the chamber labeling
    dual_out = simulate_asep_batch(np.sort(wx), params, lattice_t, n_samples,
                                   seed, dual=True, stream_offset=0)
    shift_dual = frame_shift(params.q - params.p, lattice_t)
    x_t = epsilon * (dual_out - shift_dual)
    h_lhs = _h_rows_vs_config(x_t[:, ::-1], y0.positions, params.tau)

    primal_out = simulate_asep_batch(wy, params, lattice_t, n_samples,
                                     seed, dual=False, stream_offset=1)
    shift_primal = frame_shift(params.p - params.q, lattice_t)
    y_t = epsilon * (primal_out - shift_primal)
    h_rhs = _h_rows_vs_config_x(x0.positions, y_t, params.tau)

    lhs, rhs = float(np.mean(h_lhs)), float(np.mean(h_rhs))
    se = float(np.sqrt(np.var(h_lhs, ddof=1) / n_samples
                       + np.var(h_rhs, ddof=1) / n_samples))
    return lhs, rhs, se


def _h_rows_vs_config(x_rows, y_pos, tau):
    exps = np.sum(x_rows[:, :, None] > y_pos[None, None, :], axis=(1, 2))
    return tau ** exps.astype(float)


def _h_rows_vs_config_x(x_pos, y_rows, tau):
    exps = np.sum(x_pos[None, :, None] > y_rows[:, None, :], axis=(1, 2))
    return tau ** exps.astype(float)


def duality_h_lattice(x0: Config, y0: Config, params: ModelParams) -> float:
    """H(x0, y0) for lattice configs; value of both sides at t = 0."""
    return duality_h(x0, y0, params)
