"""Nested-contour formula for the Poisson-averaged generating function,
single-point tau-moments, and the Monte Carlo estimators dual to them.

The analytic object is the n-fold contour integral

    F_n(x, t) = tau^{n(n-1)/2} * int prod_j [ (1/z_j) (tau-1)/(z_j+1-tau)
                 e^{x_j z_j + t z_j^2/2} ] prod_{A<B} (z_B - z_A)/(z_B - tau z_A)

over vertical lines at abscissas -(1-tau) < a_1 < ... < a_n < 0 with
tau*a_j < a_{j+1} (no cross pole between the lines).  For moderate t the
lines carry sinh-graded trapezoid rules; for very small t (including t = 0)
the far parts of each line are deformed onto horizontal rays pointing in
the decay direction of e^{x_j z}, which keeps the rule small where the
Gaussian damping is useless.  Both layouts stay within the pole-free region
of the nesting constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contours import VerticalContour, build_bracket, polyline_distance
from .errors import (AccuracyError, CapacityError, ContourConstructionError,
                     DomainError, InvalidInputError)
from .model import Config, DECREASING, ModelParams, count_left_positions, \
    genfun_initial_batch
from .rng import path_blocks, seed_stream
from .sde import McRun, SimSpec, _project_increasing, simulate_dual

N_CAP = 4

_LETTERS = "abcd"


def default_abscissas(n: int, tau: float) -> np.ndarray:
    """a_j = -(1-tau) s^j with s = tau/2; satisfies the nesting strictly."""
    s = tau / 2.0
    return -(1.0 - tau) * s ** np.arange(1, n + 1)


def validate_nesting(abscissas: np.ndarray, tau: float):
    a = np.asarray(abscissas, dtype=float)
    if np.any(a <= -(1.0 - tau)) or np.any(a >= 0.0):
        raise InvalidInputError("abscissas must lie in (-(1-tau), 0)")
    if np.any(np.diff(a) <= 0.0):
        raise InvalidInputError("abscissas must increase")
    if np.any(tau * a[:-1] >= a[1:]):
        raise InvalidInputError("nesting violated: tau*a_j < a_{j+1} required")


@dataclass(frozen=True)
class NestedContours:
    """Abscissa family for the nested vertical lines."""

    abscissas: np.ndarray
    tau: float

    def __post_init__(self):
        a = np.asarray(self.abscissas, dtype=float)
        validate_nesting(a, self.tau)
        object.__setattr__(self, "abscissas", a.copy())
        self.abscissas.setflags(write=False)

    @classmethod
    def default(cls, n: int, tau: float) -> "NestedContours":
        return cls(default_abscissas(n, tau), tau)


def _bracket_feasible(x: np.ndarray, t: float, tol: float) -> bool:
    xmin = float(np.min(np.abs(x)))
    if xmin < 1e-3:
        return False
    r_max = (math.log(1.0 / tol) + 3.0) / xmin
    return t * r_max**2 <= 18.0


def cross_margins(abscissas: np.ndarray, tau: float) -> np.ndarray:
    """Distance from each line to the nearest integrand pole, uniformly in
    height: the poles sit at 0, -(1-tau) and on the scaled copies tau*C_A
    (for A < j) and C_B/tau (for B > j) of the other lines."""
    a = np.asarray(abscissas, dtype=float)
    n = a.size
    margins = np.minimum(np.abs(a), (1.0 - tau) - np.abs(a))
    for j in range(n):
        for k in range(n):
            if k < j:
                margins[j] = min(margins[j], abs(a[j] - tau * a[k]))
            elif k > j:
                margins[j] = min(margins[j], abs(tau * a[j] - a[k]) / tau)
    return margins


def _bracket_rules(x: np.ndarray, t: float, abscissas: np.ndarray,
                   tau: float, tol: float, refine: float):
    """Bracket layout: left block (x_j > 0) on parallel horizontal rays of
    equal height, right block (x_j < 0) on upward-tilted rays with
    decreasing tilt and geometrically shrinking heights, so no contour
    meets a scaled copy tau*C of another.  Verified at build time."""
    n = x.size
    signs = np.sign(x)
    n_right = int(np.sum(signs < 0))
    heights = np.empty(n)
    tilts = np.zeros(n)
    h_left = 0.2
    h_right = 0.45
    beta0 = 0.06
    pos_r = 0
    for j in range(n):
        if signs[j] > 0:
            heights[j] = h_left
        else:
            heights[j] = h_right * (0.7 * tau) ** pos_r
            tilts[j] = beta0 * (n_right - pos_r)
            pos_r += 1
    margins = cross_margins(abscissas, tau)
    order = max(4, int(round(6 * refine)))
    paths = []
    for j in range(n):
        a = abscissas[j]
        direction = -1 if signs[j] > 0 else +1
        ct = math.cos(tilts[j])
        if direction > 0:
            radii = [(abs(a) / ct, max(heights[j], 0.02))]
        else:
            radii = [(((1.0 - tau) - abs(a)) / ct, max(heights[j], 0.02))]
        # closest approaches to scaled copies sit near the ray starts
        radii.append((0.0, max(min(margins[j], heights[j]), 5e-3)))
        path = build_bracket(a, heights[j], direction, decay=abs(x[j]),
                             t=max(t, 0.0), tol=tol, tilt=tilts[j],
                             seg_width=margins[j] / (2.5 * refine),
                             ray_scales=radii, ray_order=order,
                             seg_order=order)
        paths.append(path)
    for jb in range(n):
        for ja in range(jb):
            scaled = [tau * v for v in paths[ja].vertices()]
            dist = polyline_distance(scaled, paths[jb].vertices())
            if dist < min(margins[jb], 0.02) / 3.0:
                raise ContourConstructionError(
                    f"bracket contours {ja}, {jb} too close to a pole "
                    f"(distance {dist:.2e})")
    return [(p.nodes, p.weights) for p in paths]


def _variable_rules(x: np.ndarray, t: float, abscissas: np.ndarray,
                    tau: float, tol: float, refine: float):
    """Per-variable (nodes, weights) on either layout (all-or-nothing)."""
    small_t = (t <= 0) or (t < 2e-3 and _bracket_feasible(x, t, tol))
    if small_t:
        if not _bracket_feasible(x, max(t, 0.0), tol):
            raise AccuracyError(
                "no bracket deformation available: coordinates too close to 0 "
                "for this t; evaluate at larger t or move the coordinates")
        return _bracket_rules(x, t, abscissas, tau, tol, refine)
    if t <= 0:
        raise DomainError("t = 0 requires the bracket layout")
    margins = cross_margins(abscissas, tau)
    rules = []
    for j in range(x.size):
        vc = VerticalContour.build_uniform(
            a=abscissas[j], t=t, tol=tol, osc=abs(x[j]) + 0.5,
            margin=margins[j], refine=refine, max_nodes=60_000)
        rules.append((vc.nodes, vc.weights))
    if math.prod(len(r[0]) for r in rules) > 6e8:
        raise CapacityError("nested vertical rule too large at these margins; "
                            "use wider abscissas or fewer particles")
    return rules


def genfun_contour(x: Config, t: float, params: ModelParams,
                   contours: NestedContours | None = None,
                   tol: float = 1e-12, refine: float = 1.0,
                   imag_tol: float = 1e-6):
    """F_n(x, t) by nested-contour quadrature; returns (value, imag_residual)."""
    x.require(DECREASING)
    params.require_subcritical()
    if t < 0:
        raise DomainError("t must be nonnegative")
    n = len(x)
    if n > N_CAP:
        raise CapacityError(f"nested quadrature capped at n <= {N_CAP}")
    tau = params.tau
    if contours is None:
        contours = NestedContours.default(n, tau)
    if contours.abscissas.size != n:
        raise InvalidInputError("contour count must match the configuration size")
    rules = _variable_rules(x.positions, t, contours.abscissas, tau, tol, refine)

    operands, subs = [], []
    for j, (nodes, weights) in enumerate(rules):
        vec = weights / nodes * (tau - 1.0) / (nodes + (1.0 - tau)) \
            * np.exp(x.positions[j] * nodes + 0.5 * t * nodes**2)
        operands.append(vec)
        subs.append(_LETTERS[j])
    for a_idx in range(n):
        for b_idx in range(a_idx + 1, n):
            za = rules[a_idx][0]
            zb = rules[b_idx][0]
            cross = (zb[None, :] - za[:, None]) / (zb[None, :] - tau * za[:, None])
            operands.append(cross)
            subs.append(_LETTERS[a_idx] + _LETTERS[b_idx])
    total = tau ** (n * (n - 1) // 2) * np.einsum(
        ",".join(subs) + "->", *operands, optimize=True)
    value, resid = float(np.real(total)), float(abs(np.imag(total)))
    if resid > imag_tol * max(abs(value), 1e-3):
        raise AccuracyError(f"imaginary residual {resid:.2e} too large")
    return value, resid


def moment_tau_n(u: float, t: float, n: int, params: ModelParams,
                 contours: NestedContours | None = None,
                 tol: float = 1e-12) -> float:
    """E(tau^{n N(u, t)}): the generating function at the diagonal x_j = u."""
    if n == 0:
        return 1.0
    x = Config.decreasing(np.full(n, float(u)))
    value, _ = genfun_contour(x, t, params, contours=contours, tol=tol)
    return value


def poisson_truncation(x_max: float, t: float) -> float:
    """Interval length for the truncated unit-density Poisson initial data."""
    return max(x_max, 0.0) + 6.0 * math.sqrt(max(t, 0.0)) + 4.0


def sample_poisson_rows(length: float, n_paths: int, seed: int,
                        stream_tag: int = 104729):
    """Sorted Poisson(1)-on-[0, L] rows padded with far-right spectators.

    Returns (rows, n_pad_offset) where rows is (n_paths, k_max); spectator
    columns sit beyond L + 10 sqrt(L) and never interact with the bulk.
    """
    counts_max = 0
    all_rows = []
    for index, start, stop in path_blocks(n_paths):
        gen = seed_stream(seed, stream_tag + index)
        counts = gen.poisson(length, size=stop - start)
        k_max_blk = int(counts.max()) if counts.size else 0
        rows = np.empty((stop - start, k_max_blk))
        for i, k in enumerate(counts):
            pts = np.sort(gen.uniform(0.0, length, size=int(k)))
            rows[i, :k] = pts
            rows[i, k:] = np.nan
        all_rows.append(rows)
        counts_max = max(counts_max, k_max_blk)
    out = np.full((n_paths, counts_max), np.nan)
    pos = 0
    for rows in all_rows:
        out[pos:pos + rows.shape[0], :rows.shape[1]] = rows
        pos += rows.shape[0]
    # spectators: far right, spaced so they never collide with the bulk
    far = length + 10.0 * math.sqrt(length) + 10.0
    pad_idx = np.isnan(out)
    cols = np.cumsum(pad_idx, axis=1)
    out[pad_idx] = (far + 5.0 * cols[pad_idx])
    return out


def mc_generating_moment(x: Config, t: float, params: ModelParams,
                         n_paths: int, seed: int, dt: float | None = None,
                         poisson_l: float | None = None):
    """Two estimators of F_n(x, t), required to agree within error bars.

    E1 evolves the dual configuration and averages the closed-form initial
    generating function; E2 samples truncated Poisson initial data, evolves
    the primal system and averages prod_j tau^{N(x_j; y(t))}.
    Returns (e1: McRun, e2: McRun).
    """
    x.require(DECREASING)
    params.require_subcritical()
    tau = params.tau
    if dt is None:
        dt = max(t / 5000.0, 1e-6) if t > 0 else 1e-6
    echo = {"t": t, "tau": tau, "x": list(map(float, x.positions)), "dt": dt}

    if t == 0:
        e1_samples = genfun_initial_batch(x.positions[None, :], tau)
        e1 = McRun.from_samples("dual-evolution", np.repeat(e1_samples, 1),
                                seed, echo)
    else:
        spec = SimSpec(params=params, dt=dt, t_end=t, n_paths=n_paths, seed=seed)
        xt = simulate_dual(spec, x)
        e1 = McRun.from_samples("dual-evolution",
                                genfun_initial_batch(xt, tau), seed, echo)

    length = poisson_l if poisson_l is not None else \
        poisson_truncation(float(np.max(x.positions)), t)
    y_rows = sample_poisson_rows(length, n_paths, seed + 1)
    if t > 0:
        spec2 = SimSpec(params=params, dt=dt, t_end=t, n_paths=n_paths,
                        seed=seed + 1)

        def stepper(state, dw):
            state += dw
            _project_increasing(state, params.p, params.q)

        y_t = _run_rows(spec2, y_rows, stepper)
    else:
        y_t = y_rows
    counts = np.zeros(n_paths)
    for xj in x.positions:
        counts += count_left_positions(xj, y_t)
    e2 = McRun.from_samples("poisson-primal", tau**counts, seed + 1,
                            dict(echo, poisson_l=length))
    return e1, e2


def _run_rows(spec: SimSpec, rows: np.ndarray, stepper) -> np.ndarray:
    """Like sde._run_blocks but with per-path initial rows."""
    from .errors import SimulationDivergedError
    n_steps = spec.n_steps
    sqrt_dt = np.sqrt(spec.dt)
    out = np.empty_like(rows)
    m = rows.shape[1]
    for index, start, stop in path_blocks(spec.n_paths):
        gen = seed_stream(spec.seed, index)
        state = rows[start:stop].copy()
        for _ in range(n_steps):
            stepper(state, sqrt_dt * gen.standard_normal((stop - start, m)))
        if not np.all(np.isfinite(state)):
            raise SimulationDivergedError("non-finite state in simulation")
        out[start:stop] = state
    return out
