"""Special functions shared by the analytic modules.

q-products are implemented here (vectorized, truncated by an explicit tail
bound); the complex Gamma and the Airy function are delegated to scipy's
implementations behind the same call signatures the rest of the package
uses.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.special as _sp

from .errors import DomainError, PoleError


def _check_tau(tau: float):
    if not (0.0 < tau < 1.0):
        raise DomainError(f"deformation parameter must satisfy 0 < tau < 1, got {tau}")


def q_pochhammer_inf(a, tau: float, tol: float = 1e-15):
    """(a; tau)_inf = prod_{k>=0} (1 - a*tau^k), scalar or array argument.

    The partial product stops once the tail bound |a|*tau^K/(1-tau) < tol
    guarantees the remaining factors move the result by less than tol.
    """
    _check_tau(tau)
    a = np.asarray(a, dtype=complex)
    amax = float(np.max(np.abs(a))) if a.size else 0.0
    if amax == 0.0:
        out = np.ones_like(a)
        return out if out.ndim else complex(out)
    n_terms = max(1, int(math.ceil(
        (math.log(tol * (1.0 - tau)) - math.log(amax)) / math.log(tau))))
    out = np.ones_like(a)
    fac = a.copy()
    for _ in range(n_terms):
        out *= 1.0 - fac
        fac *= tau
    return out if out.ndim else complex(out)


def log_q_pochhammer_inf(a, tau: float, tol: float = 1e-15):
    """Sum of log(1 - a*tau^k); a second, independent evaluation route."""
    _check_tau(tau)
    a = np.asarray(a, dtype=complex)
    amax = float(np.max(np.abs(a))) if a.size else 0.0
    if amax == 0.0:
        return np.zeros_like(a)
    n_terms = max(1, int(math.ceil(
        (math.log(tol * (1.0 - tau)) - math.log(amax)) / math.log(tau))))
    out = np.zeros_like(a)
    fac = a.copy()
    for _ in range(n_terms):
        out += np.log(1.0 - fac)
        fac *= tau
    return out


def e_tau(z, tau: float, tol: float = 1e-15):
    """tau-deformed exponential e_tau(z) = 1/(z; tau)_inf."""
    denom = q_pochhammer_inf(z, tau, tol=tol)
    denom_arr = np.asarray(denom)
    if np.any(np.abs(denom_arr) < 1e-280):
        raise PoleError("e_tau evaluated at a zero of (z; tau)_inf "
                        "(z = tau^{-k} for some k >= 0)")
    return 1.0 / denom


def gamma_product(s):
    """Gamma(-s) * Gamma(1+s) = -pi / sin(pi*s); poles at integer s."""
    s = np.asarray(s, dtype=complex)
    sn = np.sin(np.pi * s)
    if np.any(np.abs(sn) < 1e-280):
        raise PoleError("gamma_product has poles at integer s")
    out = -np.pi / sn
    return out if out.ndim else complex(out)


def gamma_complex(z):
    """Complex Gamma (Lanczos-type, via scipy); used as a cross-check oracle."""
    return _sp.gamma(z)


def airy(x):
    """Standard Airy function Ai(x)."""
    return _sp.airy(x)[0]


def airy_pair(x):
    """(Ai(x), Ai'(x)) as needed by the Airy kernel."""
    ai, aip, _, _ = _sp.airy(x)
    return ai, aip


def airy_contour_oracle(x: float, n_nodes: int = 4000, r_max: float = 12.0) -> float:
    """Ai(x) by direct quadrature of the contour representation
    (1/2*pi*i) * int exp(z^3/3 - x z) dz over rays at angles +-pi/3.

    Independent of the series/asymptotic evaluation; test oracle only.
    """
    r = np.linspace(0.0, r_max, n_nodes)
    w = np.full(n_nodes, r[1] - r[0])
    w[0] = w[-1] = 0.5 * (r[1] - r[0])
    rot = np.exp(1j * np.pi / 3.0)
    up = np.sum(w * np.exp((r * rot) ** 3 / 3.0 - x * r * rot) * rot)
    # lower ray traversed toward the vertex, i.e. opposite direction
    dn = np.sum(w * np.exp((r * rot.conjugate()) ** 3 / 3.0 - x * r * rot.conjugate())
                * rot.conjugate())
    return float(np.real((up - dn) / (2.0j * np.pi)))
