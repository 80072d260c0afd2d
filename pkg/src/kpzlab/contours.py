"""Quadrature nodes and weights on complex integration contours.

Every contour here bakes the 1/(2*pi*i) prefactor into its weights, so a
contour integral is just ``sum(weights * integrand(nodes))``.

Vertical lines {a + i*phi} carry either

* a trapezoid rule in theta with phi = scale*sinh(theta) (spectral, cheap;
  used where the only structure near the line is a pole at distance ~|a|
  close to the real axis), or

* a uniform-phi trapezoid rule whose step resolves a given analyticity
  margin (needed when another contour's scaled copy runs parallel at a
  small horizontal distance, which makes the strip width uniform in phi).

For very small Gaussian damping t the far parts of a line are swung onto
rays at heights +-h pointing into the decay direction of exp(x*z)
("bracket" layout).  Ray tilts and heights are chosen by the caller so
that no contour meets a scaled copy tau^s of another; builders here only
lay out nodes and refine panels near declared approach scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, DomainError

_GL_CACHE: dict = {}


def _gauss_legendre(order: int):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def composite_gl(breaks, order: int = 12):
    """Composite Gauss-Legendre nodes/weights for the panels between breaks."""
    breaks = np.asarray(breaks, dtype=float)
    xg, wg = _gauss_legendre(order)
    nodes, weights = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        half = 0.5 * (hi - lo)
        nodes.append(0.5 * (lo + hi) + half * xg)
        weights.append(half * wg)
    return np.concatenate(nodes), np.concatenate(weights)


def geometric_breaks(lo: float, hi: float, first: float, factor: float = 1.7,
                     cap: float = np.inf):
    """Panel boundaries from lo to hi with widths growing geometrically."""
    breaks = [lo]
    width = first
    while breaks[-1] + width < hi:
        breaks.append(breaks[-1] + width)
        width = min(width * factor, cap)
    breaks.append(hi)
    return np.array(breaks)


@dataclass(frozen=True)
class VerticalContour:
    """Quadrature rule on the vertical line {a + i*phi, |phi| <= phi_max}.

    The phi grid is symmetric; weights contain 1/(2*pi*i)*dz, which on a
    vertical line is the positive real measure dphi/(2*pi).  layout is
    either "sinh" (phi = scale*sinh(theta), theta step ``step``) or
    "uniform" (phi step ``step``).
    """

    a: float
    phi_max: float
    n_nodes: int
    nodes: np.ndarray
    weights: np.ndarray
    scale: float
    step: float
    layout: str = "sinh"

    @classmethod
    def from_geometry(cls, a: float, phi_max: float, scale: float, step: float,
                      layout: str = "sinh") -> "VerticalContour":
        if layout == "sinh":
            theta_max = math.asinh(phi_max / scale)
            n_side = max(1, int(math.ceil(theta_max / step)))
            theta = step * np.arange(-n_side, n_side + 1)
            phi = scale * np.sinh(theta)
            wts = scale * np.cosh(theta) * step / (2.0 * math.pi)
        elif layout == "uniform":
            n_side = max(1, int(math.ceil(phi_max / step)))
            phi = step * np.arange(-n_side, n_side + 1)
            wts = np.full(phi.size, step / (2.0 * math.pi))
        else:
            raise DomainError(f"unknown layout {layout!r}")
        nodes = a + 1j * phi
        return cls(a=a, phi_max=phi_max, n_nodes=nodes.size, nodes=nodes,
                   weights=wts.astype(complex), scale=scale, step=step,
                   layout=layout)

    @classmethod
    def build(cls, a: float, t: float, tol: float = 1e-12, osc: float = 0.0,
              pole_gap: float | None = None, poly_degree: int = 0,
              refine: float = 1.0) -> "VerticalContour":
        """Sinh-graded rule for integrands ~ exp(t*z^2/2 + i*osc*phi) with
        real-axis poles at distance pole_gap from the line."""
        if t <= 0:
            raise DomainError("vertical contour needs t > 0 for truncation")
        phi_max = _gaussian_truncation(t, tol, abs(a), poly_degree)
        log_inv = math.log(1.0 / tol)
        gap = abs(a) if pole_gap is None else pole_gap
        scale = min(1.0, max(gap, 1e-4))
        h_strip = 2.0 * math.pi / (log_inv + math.log(10.0))
        h_osc = 0.52 * math.pi / max(abs(osc) * phi_max, 1e-9)
        step = min(h_strip, h_osc, 0.35) / refine
        return cls.from_geometry(a, phi_max, scale, step, layout="sinh")

    @classmethod
    def build_uniform(cls, a: float, t: float, tol: float = 1e-12,
                      osc: float = 0.0, margin: float = 1.0,
                      poly_degree: int = 0, refine: float = 1.0,
                      max_nodes: int = 2_000_000) -> "VerticalContour":
        """Uniform-phi rule whose step resolves a strip of width ``margin``
        (smallest distance from the line to any integrand pole, uniformly
        in height)."""
        if t <= 0:
            raise DomainError("vertical contour needs t > 0 for truncation")
        phi_max = _gaussian_truncation(t, tol, abs(a), poly_degree)
        log_inv = math.log(1.0 / tol)
        h_strip = 2.0 * math.pi * min(margin, 1.0) / (log_inv + math.log(10.0))
        h_osc = 0.52 * math.pi / max(abs(osc), 1e-9)
        step = min(h_strip, h_osc, 0.35) / refine
        if 2.0 * phi_max / step > max_nodes:
            raise AccuracyError("uniform vertical rule would need too many nodes "
                                f"(margin {margin:.2e}, phi_max {phi_max:.1f})")
        return cls.from_geometry(a, phi_max, 1.0, step, layout="uniform")

    def refined(self, factor: float = 2.0) -> "VerticalContour":
        """Same line, truncation and grading; step divided by factor."""
        return VerticalContour.from_geometry(self.a, self.phi_max, self.scale,
                                             self.step / factor, self.layout)

    def with_abscissa(self, a: float) -> "VerticalContour":
        return VerticalContour.from_geometry(a, self.phi_max, self.scale,
                                             self.step, self.layout)


def _gaussian_truncation(t: float, tol: float, abs_a: float,
                         poly_degree: int) -> float:
    log_inv = math.log(1.0 / tol)
    phi_max = math.sqrt(2.0 * log_inv / t) + abs_a + 1.0
    for _ in range(4 if poly_degree > 0 else 0):
        phi_max = math.sqrt(
            2.0 * (log_inv + poly_degree * math.log(phi_max)) / t) + abs_a + 1.0
    return phi_max


@dataclass(frozen=True)
class BracketPath:
    """Polyline contour replacing a vertical line at very small t.

    Geometry: vertical segment from (a, -h) to (a, +h) plus two rays from
    the segment ends in direction ``direction`` = (+-1) with upward tilt
    ``tilt`` (radians; the lower ray mirrors the upper one).  Orientation
    follows the vertical line: in along the lower ray, up the segment, out
    along the upper ray.
    """

    a: float
    h: float
    direction: int
    tilt: float
    r_max: float
    nodes: np.ndarray
    weights: np.ndarray

    def vertices(self) -> list:
        """Polyline vertices, bottom ray end to top ray end."""
        u = complex(self.direction * math.cos(self.tilt), math.sin(self.tilt))
        bot = complex(self.a, -self.h)
        top = complex(self.a, self.h)
        return [bot + self.r_max * u.conjugate(), bot, top, top + self.r_max * u]


def build_bracket(a: float, h: float, direction: int, decay: float, t: float,
                  tol: float = 1e-12, tilt: float = 0.0, seg_width: float = 0.25,
                  ray_scales=(), ray_order: int = 8,
                  seg_order: int = 6) -> BracketPath:
    """Bracket rule with panel refinement hooks.

    decay: exponential rate of exp(x*z) along the rays (must be > 0).
    seg_width: max panel width on the vertical segment (set to the smallest
    analyticity margin facing the segment).
    ray_scales: (radius, scale) pairs; panels near ``radius`` on the rays are
    refined to ``scale`` (pole passages and closest approaches).
    """
    if decay <= 0:
        raise DomainError("bracket contour requires a strict decay rate")
    eff_decay = decay * math.cos(tilt)
    r_max = (math.log(1.0 / tol) + 3.0) / eff_decay
    growth = t * (r_max * math.cos(tilt)) ** 2 - t * (h + r_max * math.sin(tilt)) ** 2
    if t > 0 and growth > 18.0:
        raise AccuracyError("bracket contour infeasible: Gaussian growth "
                            "exceeds ray decay at this (t, x)")

    base = geometric_breaks(0.0, r_max, first=min(h, 0.25), factor=1.6, cap=3.0)
    extra = [np.array([0.0])]
    for r0, sc in ray_scales:
        if not (0.0 <= r0 < r_max):
            continue
        local = geometric_breaks(0.0, min(4.0 * max(sc, 1e-3), r_max - r0),
                                 first=max(sc / 2.0, 1e-4), factor=1.6)
        extra.append(np.clip(r0 + local, 0.0, r_max))
        extra.append(np.clip(r0 - local, 0.0, r_max))
    breaks = np.unique(np.concatenate([base] + extra))
    r, wr = composite_gl(breaks, ray_order)

    seg = np.unique(np.concatenate([
        geometric_breaks(0.0, h, first=min(max(abs(a), 1e-3), h) / 2.0, factor=1.8),
        np.arange(0.0, h, seg_width), [h]]))
    seg = np.unique(np.concatenate([-seg[::-1], seg]))
    phi, wphi = composite_gl(seg, seg_order)

    inv_2pi_i = 1.0 / (2.0j * math.pi)
    u_up = complex(direction * math.cos(tilt), math.sin(tilt))
    u_dn = complex(direction * math.cos(tilt), -math.sin(tilt))
    lower = complex(a, -h) + r[::-1] * u_dn
    w_lower = inv_2pi_i * (-u_dn) * wr[::-1]
    middle = a + 1j * phi
    w_middle = inv_2pi_i * 1j * wphi
    upper = complex(a, h) + r * u_up
    w_upper = inv_2pi_i * u_up * wr

    nodes = np.concatenate([lower, middle, upper])
    weights = np.concatenate([w_lower, w_middle, w_upper])
    return BracketPath(a=a, h=h, direction=direction, tilt=tilt, r_max=r_max,
                       nodes=nodes, weights=weights)


def segment_distance(p1: complex, p2: complex, q1: complex, q2: complex) -> float:
    """Minimum distance between two segments in the complex plane."""
    def pt_seg(p, a, b):
        ab = b - a
        denom = abs(ab) ** 2
        if denom == 0.0:
            return abs(p - a)
        s = ((p - a).real * ab.real + (p - a).imag * ab.imag) / denom
        s = min(1.0, max(0.0, s))
        return abs(p - (a + s * ab))

    d1 = (p2 - p1)
    d2 = (q2 - q1)
    # segments intersect?
    def cross(u, v):
        return u.real * v.imag - u.imag * v.real
    denom = cross(d1, d2)
    if abs(denom) > 1e-15:
        s = cross(q1 - p1, d2) / denom
        u = cross(q1 - p1, d1) / denom
        if 0.0 <= s <= 1.0 and 0.0 <= u <= 1.0:
            return 0.0
    return min(pt_seg(p1, q1, q2), pt_seg(p2, q1, q2),
               pt_seg(q1, p1, p2), pt_seg(q2, p1, p2))


def polyline_distance(verts_a, verts_b) -> float:
    """Minimum distance between two polylines given by vertex lists."""
    best = math.inf
    for pa, pb in zip(verts_a[:-1], verts_a[1:]):
        for qa, qb in zip(verts_b[:-1], verts_b[1:]):
            best = min(best, segment_distance(pa, pb, qa, qb))
    return best
