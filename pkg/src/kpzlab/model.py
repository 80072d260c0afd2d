"""Shared domain types: asymmetry parameters, ordered configurations,
the duality weight H and the half-line Poisson generating function.

Conventions used throughout the package:

* ``theta(u) = 1`` for ``u > 0`` and ``theta(u) = 0`` for ``u <= 0``; ties
  therefore contribute no factor.
* increasing chamber: positions nondecreasing with index (primal particles);
  decreasing chamber: positions nonincreasing with index (dual particles).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidInputError

INCREASING = "increasing"
DECREASING = "decreasing"


@dataclass(frozen=True)
class ModelParams:
    """Asymmetry weights p + q = 1 with tau = p/q and gamma = q - p.

    The single source of truth for all modules; analytic operations
    additionally require 0 < tau < 1 and check it themselves.
    """

    p: float
    q: float
    tau: float
    gamma: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0) or not np.isfinite(self.p):
            raise InvalidInputError(f"p must lie in [0, 1], got {self.p}")
        if abs(self.p + self.q - 1.0) > 1e-12:
            raise InvalidInputError("p + q = 1 is required")
        if self.q > 0 and abs(self.tau - self.p / self.q) > 1e-12:
            raise InvalidInputError("tau must equal p/q")
        if abs(self.gamma - (self.q - self.p)) > 1e-12:
            raise InvalidInputError("gamma must equal q - p")

    @classmethod
    def from_p(cls, p: float) -> "ModelParams":
        q = 1.0 - p
        tau = p / q if q > 0 else np.inf
        return cls(p=p, q=q, tau=tau, gamma=q - p)

    @classmethod
    def from_tau(cls, tau: float) -> "ModelParams":
        if tau < 0 or not np.isfinite(tau):
            raise DomainError(f"tau must be finite and >= 0, got {tau}")
        p = tau / (1.0 + tau)
        return cls(p=p, q=1.0 - p, tau=tau, gamma=(1.0 - tau) / (1.0 + tau))

    def require_subcritical(self):
        """Raise unless 0 < tau < 1 (needed by every analytic formula)."""
        if not (0.0 < self.tau < 1.0):
            raise DomainError(f"operation requires 0 < tau < 1, got tau={self.tau}")


@dataclass(frozen=True)
class Config:
    """An ordered particle configuration in a Weyl chamber.

    The constructor sorts the positions to match the chamber tag; passing a
    config with the wrong tag to an operation is a hard error there.
    """

    positions: np.ndarray
    chamber: str

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1 or pos.size == 0:
            raise InvalidInputError("positions must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(pos)):
            raise InvalidInputError("positions must be finite")
        if self.chamber == INCREASING:
            pos = np.sort(pos)
        elif self.chamber == DECREASING:
            pos = np.sort(pos)[::-1]
        else:
            raise InvalidInputError(f"unknown chamber tag {self.chamber!r}")
        object.__setattr__(self, "positions", pos.copy())
        self.positions.setflags(write=False)

    def __len__(self):
        return self.positions.size

    @classmethod
    def increasing(cls, positions) -> "Config":
        return cls(np.asarray(positions, dtype=float), INCREASING)

    @classmethod
    def decreasing(cls, positions) -> "Config":
        return cls(np.asarray(positions, dtype=float), DECREASING)

    def require(self, chamber: str):
        if self.chamber != chamber:
            raise InvalidInputError(
                f"expected a {chamber} chamber configuration, got {self.chamber}"
            )


@dataclass(frozen=True)
class CountingField:
    """Number of particles of a configuration located in (-inf, u]."""

    reference_point: float
    count: int = field(default=0)

    @classmethod
    def of(cls, u: float, y: Config) -> "CountingField":
        return cls(reference_point=u, count=count_left(u, y))


def count_left(u: float, y: Config) -> int:
    """#{ i : y_i <= u }, nondecreasing in u."""
    y.require(INCREASING)
    return int(np.searchsorted(y.positions, u, side="right"))


def count_left_positions(u, positions) -> np.ndarray:
    """Vectorized count of entries <= u for a batch of sorted position rows."""
    pos = np.asarray(positions, dtype=float)
    return np.sum(pos <= u, axis=-1)


def duality_h(x: Config, y: Config, params: ModelParams) -> float:
    """Duality weight H(x, y) = prod_{j,i} tau^{theta(x_j - y_i)} in (0, 1]."""
    x.require(DECREASING)
    y.require(INCREASING)
    params.require_subcritical()
    exponent = int(np.sum(x.positions[:, None] > y.positions[None, :]))
    return float(params.tau**exponent)


def duality_h_batch(x_rows: np.ndarray, y: Config, params: ModelParams) -> np.ndarray:
    """H(x, y) for a batch of decreasing configurations (rows of x_rows)."""
    y.require(INCREASING)
    exps = np.sum(x_rows[:, :, None] > y.positions[None, None, :], axis=(1, 2))
    return params.tau ** exps.astype(float)


def genfun_initial(x: Config, params: ModelParams) -> float:
    """Poisson-averaged duality weight for unit density on the half-line.

    Closed form of exp[ int_0^inf (prod_j tau^{theta(x_j - u)} - 1) du ]:
    with a_k the k-th largest positive part of x, the integrand equals
    tau^k - 1 on (a_{k+1}, a_k), so the exponent is
    sum_k (tau^k - 1)(a_k - a_{k+1}).  Coordinates at 0 contribute nothing
    (theta(0) = 0), which makes the value continuous across sector changes.
    """
    x.require(DECREASING)
    params.require_subcritical()
    a = np.maximum(x.positions, 0.0)  # already sorted nonincreasing
    a = np.append(a, 0.0)
    k = np.arange(1, len(x) + 1, dtype=float)
    exponent = np.sum((params.tau**k - 1.0) * (a[:-1] - a[1:]))
    return float(np.exp(exponent))


def genfun_initial_batch(x_rows: np.ndarray, tau: float) -> np.ndarray:
    """genfun_initial for a batch of decreasing rows (no Config wrapping)."""
    a = np.maximum(x_rows, 0.0)
    a = np.concatenate([a, np.zeros((a.shape[0], 1))], axis=1)
    k = np.arange(1, x_rows.shape[1] + 1, dtype=float)
    exponent = np.sum((tau**k - 1.0) * (a[:, :-1] - a[:, 1:]), axis=1)
    return np.exp(exponent)
