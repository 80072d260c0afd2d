"""Bethe-ansatz transition density of the reflected system, its tau = 1
(permanent) and q = 1 (determinant) reductions, and the CDF of the
rightmost particle, all evaluated by quadrature on vertical contours.

Everything here uses one shared contour Gamma_a = {a + i*phi} per variable
with a > 0 for 0 < tau < 1 (a < 0 for tau > 1).  Cost grows as
N! * nodes^N; N is capped at 5 and the practical sweet spot is N <= 3
(about 10^7 tensor entries per permutation at default resolution).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations as _perms

import numpy as np

from .contours import VerticalContour
from .errors import AccuracyError, CapacityError, DomainError, PoleError
from .model import Config, INCREASING, ModelParams

N_CAP = 5

_EINSUM_LETTERS = "abcde"


@dataclass(frozen=True)
class Permutation:
    """Permutation images with the cached inversion set.

    An inversion is an ordered value pair (sigma(i), sigma(j)) with i < j
    and sigma(i) > sigma(j).
    """

    images: tuple
    inversions: tuple = field(default=None)

    def __post_init__(self):
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise DomainError("images must be a permutation of 1..N")
        inv = tuple((self.images[i], self.images[j])
                    for i in range(len(self.images))
                    for j in range(i + 1, len(self.images))
                    if self.images[i] > self.images[j])
        object.__setattr__(self, "inversions", inv)

    def inverse(self) -> tuple:
        n = len(self.images)
        out = [0] * n
        for i, v in enumerate(self.images):
            out[v - 1] = i + 1
        return tuple(out)


def scattering_s(z_a, z_b, tau: float):
    """Ratio of scattering amplitudes -(tau*z_a - z_b)/(tau*z_b - z_a)."""
    num = tau * np.asarray(z_a, dtype=complex) - z_b
    den = tau * np.asarray(z_b, dtype=complex) - z_a
    if np.any(np.abs(den) < 1e-300):
        raise PoleError("scattering amplitude pole: tau*z_b = z_a")
    out = -num / den
    return out if out.ndim else complex(out)


def amplitude_a(sigma: Permutation, z, tau: float):
    """Product of scattering factors over the inversion set; 1 for identity."""
    z = np.asarray(z, dtype=complex)
    out = complex(1.0)
    for alpha, beta in sigma.inversions:
        out *= scattering_s(z[alpha - 1], z[beta - 1], tau)
    return out


def _s_matrix(z: np.ndarray, tau: float) -> np.ndarray:
    """S(z_i, z_j) on the node grid; the tau = 1 limit is identically +1."""
    if tau == 1.0:
        return np.ones((z.size, z.size), dtype=complex)
    den = tau * z[None, :] - z[:, None]
    return -(tau * z[:, None] - z[None, :]) / den


def default_contour(y, x, t: float, a: float = 1.0, tol: float = 1e-12,
                    refine: float = 1.0, poly_degree: int = 0) -> VerticalContour:
    if t <= 0:
        raise DomainError("transition formulas need t > 0")
    osc = float(np.max(np.abs(np.subtract.outer(np.atleast_1d(x), np.atleast_1d(y)))))
    return VerticalContour.build(a=a, t=t, tol=tol, osc=osc + 1.0,
                                 pole_gap=abs(a), poly_degree=poly_degree,
                                 refine=refine)


def _check_abscissa(a: float, tau: float):
    if tau < 1.0 and a <= 0:
        raise DomainError("0 < tau < 1 requires contour abscissa a > 0")
    if tau > 1.0 and a >= 0:
        raise DomainError("tau > 1 requires contour abscissa a < 0")


def transition_density_batch(y: Config, x_rows: np.ndarray, t: float,
                             params: ModelParams,
                             contour: VerticalContour | None = None):
    """Q_y(x, t) for a batch of increasing configurations (rows of x_rows).

    Returns (values, imag_residual); values are the real parts.
    """
    y.require(INCREASING)
    n = len(y)
    if x_rows.shape[1] != n:
        raise DomainError("x and y must have the same particle number")
    if n > N_CAP:
        raise CapacityError(f"transition density capped at N <= {N_CAP}")
    tau = params.tau
    if contour is None:
        contour = default_contour(y.positions, x_rows, t)
    _check_abscissa(contour.a, tau)
    z, w = contour.nodes, contour.weights
    smat = _s_matrix(z, tau)
    gauss = np.exp(0.5 * t * z**2)
    ypos = y.positions

    total = np.zeros(x_rows.shape[0], dtype=complex)
    for images in _perms(range(1, n + 1)):
        sigma = Permutation(images)
        inv_sigma = sigma.inverse()
        operands = []
        subs = []
        for k in range(n):
            # variable z_k carries exp(z*(x_{sigma^{-1}(k)} - y_k))
            xcol = x_rows[:, inv_sigma[k] - 1]
            vec = w * gauss * np.exp(np.multiply.outer(xcol, z) - z * ypos[k])
            operands.append(vec)
            subs.append("z" + _EINSUM_LETTERS[k])
        for alpha, beta in sigma.inversions:
            operands.append(smat)
            subs.append(_EINSUM_LETTERS[alpha - 1] + _EINSUM_LETTERS[beta - 1])
        total += np.einsum(",".join(subs) + "->z", *operands, optimize=True)
    return np.real(total), float(np.max(np.abs(np.imag(total))))


def transition_density(y: Config, x: Config, t: float, params: ModelParams,
                       contour: VerticalContour | None = None,
                       imag_tol: float = 1e-6) -> float:
    """Transition density Q_y(x, t) of the reflected system (Gamma_a rule)."""
    x.require(INCREASING)
    vals, resid = transition_density_batch(y, x.positions[None, :], t, params,
                                           contour=contour)
    scale = max(abs(vals[0]), 1e-12)
    if resid > imag_tol * max(scale, 1.0) * 10.0:
        raise AccuracyError(f"imaginary residual {resid:.2e} too large")
    return float(vals[0])


def permanent(matrix: np.ndarray):
    """Brute-force permanent; fine for the N <= 8 sizes used here."""
    m = np.asarray(matrix)
    n = m.shape[0]
    if n > 8:
        raise CapacityError("permanent capped at 8x8")
    rows = range(n)
    return sum(math.prod(m[i, c[i]] for i in rows) for c in _perms(range(n)))


def transition_permanent_tau1(y: Config, x: Config, t: float) -> float:
    """tau = 1 reduction: permanent of the Gaussian kernel matrix."""
    y.require(INCREASING)
    x.require(INCREASING)
    if t <= 0:
        raise DomainError("t must be positive")
    diffs = np.subtract.outer(x.positions, y.positions)
    p_t = np.exp(-(diffs**2) / (2.0 * t)) / np.sqrt(2.0 * np.pi * t)
    return float(permanent(p_t))


def heat_transform(m: int, u: float, t: float, contour: VerticalContour):
    """F_m(u) = int z^m exp(z*u + z^2 t/2) dz/(2 pi i) on the contour."""
    z, w = contour.nodes, contour.weights
    return np.sum(w * z**m * np.exp(z * u + 0.5 * t * z**2))


def transition_det_q1(y: Config, x: Config, t: float,
                      contour: VerticalContour | None = None,
                      imag_tol: float = 1e-8) -> float:
    """q = 1 reduction: det of F_{i-j}(x_i - y_j) built from heat transforms."""
    y.require(INCREASING)
    x.require(INCREASING)
    n = len(y)
    if contour is None:
        contour = default_contour(y.positions, x.positions, t,
                                  poly_degree=max(n - 1, 0))
    _check_abscissa(contour.a, 0.0)
    mat = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            mat[i, j] = heat_transform(i - j, x.positions[i] - y.positions[j],
                                       t, contour)
    val = np.linalg.det(mat)
    if abs(val.imag) > imag_tol * max(abs(val.real), 1.0):
        raise AccuracyError(f"imaginary residual {val.imag:.2e} in q=1 determinant")
    return float(val.real)


def cdf_gn_batch(us: np.ndarray, y: Config, t: float, params: ModelParams,
                 contour: VerticalContour | None = None):
    """Distribution function of the rightmost particle on a grid of points."""
    y.require(INCREASING)
    n = len(y)
    if n > N_CAP:
        raise CapacityError(f"cdf capped at N <= {N_CAP}")
    tau = params.tau
    us = np.atleast_1d(np.asarray(us, dtype=float))
    if contour is None:
        contour = default_contour(y.positions, us, t, a=1.0)
    if contour.a <= 0:
        raise DomainError("cdf contour needs a > 0 so the x-integrals converge")
    z, w = contour.nodes, contour.weights
    if tau == 1.0:
        cross = np.ones((z.size, z.size), dtype=complex)
    else:
        cross = (z[None, :] - z[:, None]) / (z[None, :] - tau * z[:, None])
    gauss = np.exp(0.5 * t * z**2) / z

    operands = []
    subs = []
    for k in range(n):
        vec = w * gauss * np.exp(np.multiply.outer(us, z) - z * y.positions[k])
        operands.append(vec)
        subs.append("z" + _EINSUM_LETTERS[k])
    for i in range(n):
        for j in range(i + 1, n):
            operands.append(cross)
            subs.append(_EINSUM_LETTERS[i] + _EINSUM_LETTERS[j])
    total = np.einsum(",".join(subs) + "->z", *operands, optimize=True)
    return np.real(total), float(np.max(np.abs(np.imag(total))))


def cdf_gn(u: float, y: Config, t: float, params: ModelParams,
           contour: VerticalContour | None = None) -> float:
    vals, _ = cdf_gn_batch(np.array([u]), y, t, params, contour=contour)
    return float(vals[0])


def weyl_integral_q(y: Config, t: float, params: ModelParams,
                    half_width: float | None = None, n_outer: int = 96,
                    n_gap: int = 72) -> float:
    """Direct integral of Q_y over the ordered chamber (gap coordinates,
    tensor Gauss-Legendre); N <= 2 only, used as a normalization oracle."""
    n = len(y)
    if n > 2:
        raise CapacityError("direct chamber integral implemented for N <= 2")
    if half_width is None:
        half_width = 8.0 * math.sqrt(t)
    lo = y.positions[0] - half_width
    hi = y.positions[-1] + half_width
    xg, wg = np.polynomial.legendre.leggauss(n_outer)
    v = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
    wv = 0.5 * (hi - lo) * wg
    if n == 1:
        vals, _ = transition_density_batch(y, v[:, None], t, params)
        return float(np.sum(wv * vals))
    gg, wgg = np.polynomial.legendre.leggauss(n_gap)
    gap_hi = (y.positions[-1] - y.positions[0]) + 2.0 * half_width
    g = 0.5 * gap_hi * (gg + 1.0)
    wgap = 0.5 * gap_hi * wgg
    vv, gg2 = np.meshgrid(v, g, indexing="ij")
    rows = np.stack([vv.ravel(), (vv + gg2).ravel()], axis=1)
    vals, _ = transition_density_batch(y, rows, t, params)
    return float(np.sum((wv[:, None] * wgap[None, :]) * vals.reshape(n_outer, n_gap)))


def _q_product_grid(y: Config, x1: np.ndarray, x2: np.ndarray, t: float,
                    params: ModelParams,
                    contour: VerticalContour | None = None) -> np.ndarray:
    """Q_y((x1[a], x2[c]), t) on the product grid, N = 2, via two matrix
    sandwiches E(x)^T S E(x') instead of a per-point tensor contraction."""
    if contour is None:
        both = np.concatenate([x1, x2])
        contour = default_contour(y.positions, both, t)
    z, w = contour.nodes, contour.weights
    tau = params.tau
    smat = _s_matrix(z, tau)
    gauss = w * np.exp(0.5 * t * z**2)
    y1, y2 = y.positions

    def col(xs, yk):
        return gauss[None, :] * np.exp(np.multiply.outer(xs, z) - z * yk)

    # identity term: variable 1 pairs (x1, y1), variable 2 pairs (x2, y2)
    t_id = np.outer(np.sum(col(x1, y1), axis=1), np.sum(col(x2, y2), axis=1))
    # swapped term carries S(z_2, z_1) = smat[node of var 2, node of var 1]
    a_mat = col(x2, y1)   # variable 1 carries x_2 - y_1 (axis: x2-grid)
    b_mat = col(x1, y2)   # variable 2 carries x_1 - y_2 (axis: x1-grid)
    t_sw = (b_mat @ smat) @ a_mat.T  # axes: (x1-grid, x2-grid)
    return np.real(t_id + t_sw)


def marginal_cdf_grid(y: Config, t: float, params: ModelParams, which: int,
                      grid: np.ndarray, half_width: float | None = None,
                      n_quad: int = 240) -> np.ndarray:
    """P(x_which <= v) for v in grid, by integrating Q over the chamber
    (N = 2 only); `which` is 0 for the left, 1 for the right particle."""
    n = len(y)
    if n != 2:
        raise CapacityError("marginal CDFs implemented for N = 2")
    if half_width is None:
        half_width = 8.0 * math.sqrt(t)
    lo = y.positions[0] - half_width
    hi = y.positions[-1] + half_width
    xg, wg = np.polynomial.legendre.leggauss(n_quad)
    x1 = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
    w1 = 0.5 * (hi - lo) * wg
    q = _q_product_grid(y, x1, x1, t, params)
    q = q * (x1[:, None] <= x1[None, :])  # restrict to the ordered chamber
    wmat = w1[:, None] * w1[None, :]
    out = np.empty(grid.size)
    for k, v in enumerate(grid):
        sel = x1 <= v
        if which == 0:
            out[k] = float(np.sum(wmat * q * sel[:, None]))
        else:
            out[k] = float(np.sum(wmat * q * sel[None, :]))
    return out
