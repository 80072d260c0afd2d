"""Monte Carlo for Brownian motions with oblique reflection and for their
smooth-potential approximation.

Discrete scheme for the reflected dynamics: Euler step with independent
N(0, dt) increments per coordinate, then an iterative pairwise projection.
For an adjacent violated pair of an increasing configuration (y_j > y_{j+1},
overlap D) the projection is

    y_j   <- y_j   - p*D
    y_{j+1} <- y_{j+1} + q*D

which lands both at the same point and moves the pair sum by (q - p)*D,
realizing the local-time split (push left with fraction p, right with q).
Sweeps run left-to-right then right-to-left until the chamber order holds.

For the dual (decreasing) chamber the same geometry mirrored gives, for a
violated pair x_j < x_{j+1} with overlap D,

    x_j   <- x_j   + p*D
    x_{j+1} <- x_{j+1} - q*D

so dual pair sums move by -(q - p)*D.  Equivalently
dual(x; p, q) = reverse(oblique(reverse(x); q, p)) pathwise under
column-reversed noise.

Both simulators draw their noise from Philox streams keyed by
(seed, block_index) over fixed-size path blocks, so results do not depend
on scheduling or worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (InvalidInputError, SimulationDivergedError, StepSizeError)
from .model import Config, DECREASING, INCREASING, ModelParams
from .rng import path_blocks, seed_stream, worker_count

OBLIQUE = "oblique-projection"
POTENTIAL = "potential"


@dataclass(frozen=True)
class PotentialSpec:
    """Scaled repulsive potential V_eps(u) = V(u/eps).

    Reference potential: V(u) = (1-|u|)^3/|u| on [-1, 1], zero outside
    (even, decreasing on (0,1), divergence exponent delta = 1).
    """

    epsilon: float
    delta_exponent: float = 1.0
    form_id: str = "cubic-over-u"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidInputError("epsilon must be positive")
        if self.form_id != "cubic-over-u":
            raise InvalidInputError(f"unknown reference potential {self.form_id!r}")

    def v(self, u):
        r = np.abs(u) / self.epsilon
        inside = r < 1.0
        r_safe = np.where(inside & (r > 0), r, 1.0)
        return np.where(inside & (r > 0), (1.0 - r_safe) ** 3 / r_safe, np.where(r == 0, np.inf, 0.0))

    def v_prime(self, u):
        """d/du V(u/eps); odd, <= 0 for u > 0, zero outside [-eps, eps]."""
        r = np.abs(u) / self.epsilon
        inside = (r < 1.0) & (r > 0.0)
        r_safe = np.where(inside, r, 1.0)
        mag = (1.0 - r_safe) ** 2 * (1.0 + 2.0 * r_safe) / r_safe**2 / self.epsilon
        return np.where(inside, -np.sign(u) * mag, 0.0)


@dataclass(frozen=True)
class SimSpec:
    """One seeded Monte Carlo batch: model, step, horizon, size, scheme."""

    params: ModelParams
    dt: float
    t_end: float
    n_paths: int
    seed: int
    scheme: str = OBLIQUE
    potential: PotentialSpec | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise InvalidInputError("dt must be positive")
        if self.t_end < 0:
            raise InvalidInputError("t_end must be nonnegative")
        if self.n_paths < 1:
            raise InvalidInputError("n_paths must be at least 1")
        if self.scheme not in (OBLIQUE, POTENTIAL):
            raise InvalidInputError(f"unknown scheme {self.scheme!r}")
        if self.scheme == POTENTIAL:
            if self.potential is None:
                raise InvalidInputError("potential scheme needs a PotentialSpec")
            if self.dt > self.potential.epsilon**2 / 10.0:
                raise StepSizeError(
                    f"stiffness guard: dt <= eps^2/10 required, got dt={self.dt}, "
                    f"eps={self.potential.epsilon}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class McRun:
    """Result record of one seeded estimator batch."""

    estimator: str
    mean: float
    variance: float
    stderr: float
    n_paths: int
    seed: int
    spec: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, name: str, samples: np.ndarray, seed: int,
                     spec: dict | None = None) -> "McRun":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        var = float(np.var(samples, ddof=1)) if n > 1 else 0.0
        return cls(estimator=name, mean=float(np.mean(samples)), variance=var,
                   stderr=float(np.sqrt(var / n)) if n else np.nan,
                   n_paths=n, seed=seed, spec=dict(spec or {}))


def _pool_pass(y: np.ndarray, tau: float, increasing: bool) -> bool:
    """Collapse every maximal run of adjacent violated pairs onto its
    tau-weighted mean (weights tau^k from the left end of the run).

    Each pairwise p/q projection preserves sum_j tau^j y_j, so the weighted
    mean is the exact common landing point of a collapsing cluster; isolated
    contacts reproduce the single-pair projection q*y_j + p*y_{j+1}
    bit-exactly.  Returns False when nothing was violated.
    """
    r, m = y.shape
    strict = (y[:, :-1] > y[:, 1:]) if increasing else (y[:, :-1] < y[:, 1:])
    if not strict.any():
        return False
    # ties join a run: blocks pooled in earlier rounds must merge as wholes
    connect = (y[:, :-1] >= y[:, 1:]) if increasing else (y[:, :-1] <= y[:, 1:])
    jj = np.arange(m)
    seg_head = np.empty((r, m), dtype=bool)
    seg_head[:, 0] = True
    seg_head[:, 1:] = ~connect
    start = np.maximum.accumulate(np.where(seg_head, jj, -1), axis=1)
    seg_tail = np.empty((r, m), dtype=bool)
    seg_tail[:, -1] = True
    seg_tail[:, :-1] = ~connect
    end = np.flip(np.minimum.accumulate(
        np.flip(np.where(seg_tail, jj, m), axis=1), axis=1), axis=1)
    length = end - start + 1
    maxlen = int(length.max())
    if maxlen == 1:
        return False
    rows = np.arange(r)[:, None]
    num = np.zeros_like(y)
    den = np.zeros_like(y)
    for k in range(maxlen):
        src = np.minimum(start + k, m - 1)
        valid = (start + k) <= end
        if tau <= 1.0:
            wk = tau**k if k else 1.0
            wts = np.where(valid, wk, 0.0)
        else:
            # anchor weights at the right end of the run for stability
            wts = np.where(valid, (1.0 / tau) ** (length - 1 - k), 0.0)
        num += wts * np.where(valid, y[rows, src], 0.0)
        den += wts
    y[...] = num / den
    return True


def _project_chamber(y: np.ndarray, tau: float, increasing: bool):
    m = y.shape[1]
    if m == 1:
        return y
    viol = (y[:, :-1] > y[:, 1:]) if increasing else (y[:, :-1] < y[:, 1:])
    bad = np.any(viol, axis=1)
    if not np.any(bad):
        return y
    idx = np.nonzero(bad)[0]
    sub = y[idx]
    rounds = 0
    while _pool_pass(sub, tau, increasing):
        rounds += 1
        if rounds > m + 64:
            raise SimulationDivergedError("cluster projection failed to terminate")
    y[idx] = sub
    return y


def _project_increasing(y: np.ndarray, p: float, q: float):
    """In-place projection of each row onto the increasing chamber."""
    tau = p / q if q > 0 else np.inf
    return _project_chamber(y, tau, increasing=True)


def _project_decreasing(x: np.ndarray, p: float, q: float):
    """Dual-chamber projection: order nonincreasing along axis 1.

    The dual pair projection q*x_j + p*x_{j+1} preserves the same
    tau-weighted sums, so the pooled collapse applies unchanged.
    """
    tau = p / q if q > 0 else np.inf
    return _project_chamber(x, tau, increasing=False)


def _run_blocks(spec: SimSpec, x0: np.ndarray, stepper, noise=None) -> np.ndarray:
    """Drive `stepper(block_state, increments)` over all path blocks/steps."""
    m = x0.size
    n_steps = spec.n_steps
    sqrt_dt = np.sqrt(spec.dt)
    blocks = path_blocks(spec.n_paths)
    out = np.empty((spec.n_paths, m))

    def run_one(block):
        index, start, stop = block
        n_block = stop - start
        state = np.tile(x0, (n_block, 1))
        if noise is not None:
            for k in range(n_steps):
                stepper(state, noise[k, start:stop, :])
        else:
            gen = seed_stream(spec.seed, index)
            for _ in range(n_steps):
                stepper(state, sqrt_dt * gen.standard_normal((n_block, m)))
        if not np.all(np.isfinite(state)):
            raise SimulationDivergedError("non-finite state in simulation")
        out[start:stop] = state

    workers = worker_count()
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_one, blocks))
    else:
        for block in blocks:
            run_one(block)
    return out


def simulate_oblique(spec: SimSpec, y0: Config, noise=None) -> np.ndarray:
    """Terminal positions (n_paths, m) of the obliquely reflected system."""
    y0.require(INCREASING)
    p, q = spec.params.p, spec.params.q

    def stepper(state, dw):
        state += dw
        _project_increasing(state, p, q)

    return _run_blocks(spec, y0.positions, stepper, noise=noise)


def simulate_dual(spec: SimSpec, x0: Config, noise=None) -> np.ndarray:
    """Terminal positions (n_paths, n) of the dual (decreasing) system."""
    x0.require(DECREASING)
    p, q = spec.params.p, spec.params.q

    def stepper(state, dw):
        state += dw
        _project_decreasing(state, p, q)

    return _run_blocks(spec, x0.positions, stepper, noise=noise)


def simulate_potential(spec: SimSpec, y0: Config, noise=None) -> np.ndarray:
    """Euler-Maruyama for the smooth-potential chain (terminal positions).

    Drift on coordinate j: p*V'_eps(y_{j+1}-y_j) - q*V'_eps(y_j-y_{j-1}),
    with the missing-neighbor terms dropped at the ends.  Raises
    StepSizeError if a gap closes (dt too large for this epsilon).
    """
    y0.require(INCREASING)
    if spec.scheme != POTENTIAL:
        raise InvalidInputError("simulate_potential needs a potential-scheme SimSpec")
    pot = spec.potential
    p, q = spec.params.p, spec.params.q
    dt = spec.dt
    eps = pot.epsilon
    n_sub = 32

    def tamed_move(block, dt_eff, cap):
        gaps = block[:, 1:] - block[:, :-1]
        vp = pot.v_prime(gaps)
        drift = np.zeros_like(block)
        drift[:, :-1] += p * vp
        drift[:, 1:] -= q * vp
        move = drift * dt_eff
        np.clip(move, -cap, cap, out=move)
        return move

    def stepper(state, dw):
        # rows away from contact take one tamed Euler step; rows with a gap
        # inside 1.5*eps traverse the step in n_sub slices (increment applied
        # linearly) so the superlinear drift is re-evaluated while the
        # barrier is crossed and ordering cannot be lost
        if state.shape[1] == 1:
            state += dw
            return
        near = np.any(state[:, 1:] - state[:, :-1] < 1.5 * eps, axis=1)
        far = ~near
        if np.any(far):
            state[far] += tamed_move(state[far], dt, eps / 4.0) + dw[far]
        if np.any(near):
            block = state[near]
            dwn = dw[near] / n_sub
            for _ in range(n_sub):
                block += tamed_move(block, dt / n_sub, eps / 8.0) + dwn
            state[near] = block
        if np.any(state[:, 1:] - state[:, :-1] <= 0.0):
            worst = float(np.min(state[:, 1:] - state[:, :-1]))
            raise StepSizeError(
                f"potential scheme lost ordering (min gap {worst:.3e}); "
                f"reduce dt below eps^2/10 = {eps**2 / 10:.3e}")

    return _run_blocks(spec, y0.positions, stepper, noise=noise)


def terminal_configs(positions: np.ndarray, chamber: str = INCREASING):
    """Wrap simulator output rows as Config objects."""
    return [Config(row, chamber) for row in positions]


def dump_paths_csv(path, spec: SimSpec, y0: Config, chamber: str = INCREASING):
    """Full-path CSV dump (path_id, step, time, j, position); small runs only."""
    y0_arr = y0.positions
    m = y0_arr.size
    n_steps = spec.n_steps
    if spec.n_paths * m * (n_steps + 1) > 5_000_000:
        raise InvalidInputError("path dump too large; reduce paths/steps")
    p, q = spec.params.p, spec.params.q
    sqrt_dt = np.sqrt(spec.dt)
    project = _project_increasing if chamber == INCREASING else _project_decreasing
    with open(path, "w", newline="") as fh:
        fh.write("path_id,step,time,j,position\n")
        for index, start, stop in path_blocks(spec.n_paths):
            gen = seed_stream(spec.seed, index)
            state = np.tile(y0_arr, (stop - start, 1))
            for k in range(n_steps + 1):
                for pid in range(start, stop):
                    for j in range(m):
                        fh.write(f"{pid},{k},{k * spec.dt:.17g},{j + 1},"
                                 f"{state[pid - start, j]:.17g}\n")
                if k < n_steps:
                    state += sqrt_dt * gen.standard_normal((stop - start, m))
                    project(state, p, q)
