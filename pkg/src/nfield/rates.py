"""Firing-rate nonlinearities with certified local Lipschitz bounds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# integer tags consumed by the compiled evaluation kernels
RATE_HILL = 0
RATE_TANH = 1
RATE_LOGISTIC = 2
RATE_IDENTITY = 3
RATE_SQUARE = 4


class FiringRate:
    """Scalar nonlinearity u -> f(u) applied componentwise.

    Subclasses provide ``lipschitz_bound(r)``, a constant L with
    |f(u1)-f(u2)| <= L|u1-u2| for all |u1|,|u2| <= r, non-decreasing in r,
    and ``bound(r)``, a constant with |f(u)| <= bound(r) on |u| <= r.
    """

    def __call__(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def lipschitz_bound(self, r: float) -> float:
        raise NotImplementedError

    def bound(self, r: float) -> float:
        raise NotImplementedError

    def numba_spec(self) -> tuple[int, float, float] | None:
        """(kind, p1, p2) for the compiled kernels, or None for callables."""
        return None


@dataclass(frozen=True)
class Hill(FiringRate):
    """f(u) = u^k/(theta^k + u^k) for u >= 0, zero for u < 0.

    Requires steepness >= 1: below that the slope diverges at the origin
    and no finite local Lipschitz constant exists.
    """

    steepness: float
    threshold: float

    def __post_init__(self):
        if self.steepness < 1.0:
            raise ValueError("Hill steepness must be >= 1 for a finite Lipschitz bound")
        if self.threshold <= 0.0:
            raise ValueError("Hill threshold must be positive")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        pos = u > 0.0
        with np.errstate(divide="ignore", over="ignore"):
            out[pos] = 1.0 / (1.0 + (self.threshold / u[pos]) ** self.steepness)
        return out

    def lipschitz_bound(self, r: float) -> float:
        k, th = self.steepness, self.threshold
        if k == 1.0:
            return 1.0 / th
        # max of (k/th) z^{1-1/k}/(1+z)^2 over z >= 0, attained at z=(k-1)/(k+1)
        z = (k - 1.0) / (k + 1.0)
        return (k / th) * z ** (1.0 - 1.0 / k) / (1.0 + z) ** 2

    def bound(self, r: float) -> float:
        return 1.0

    def numba_spec(self):
        return (RATE_HILL, self.steepness, self.threshold)


@dataclass(frozen=True)
class TanhSigmoid(FiringRate):
    """f(u) = (1 + tanh(k(u - theta)))/2; max slope k/2."""

    steepness: float
    threshold: float

    def __post_init__(self):
        if self.steepness <= 0 or self.threshold <= 0:
            raise ValueError("sigmoid parameters must be positive")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * (1.0 + np.tanh(self.steepness * (u - self.threshold)))

    def lipschitz_bound(self, r: float) -> float:
        return self.steepness / 2.0

    def bound(self, r: float) -> float:
        return 1.0

    def numba_spec(self):
        return (RATE_TANH, self.steepness, self.threshold)


@dataclass(frozen=True)
class Logistic(FiringRate):
    """f(u) = 1/(1 + exp(-k(u - theta))); max slope k/4.

    Evaluated through the tanh identity to avoid exp overflow.
    """

    steepness: float
    threshold: float

    def __post_init__(self):
        if self.steepness <= 0 or self.threshold <= 0:
            raise ValueError("logistic parameters must be positive")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * (1.0 + np.tanh(0.5 * self.steepness * (u - self.threshold)))

    def lipschitz_bound(self, r: float) -> float:
        return self.steepness / 4.0

    def bound(self, r: float) -> float:
        return 1.0

    def numba_spec(self):
        return (RATE_LOGISTIC, self.steepness, self.threshold)


@dataclass(frozen=True)
class Identity(FiringRate):
    """f(u) = u. Unbounded; Lipschitz constant 1."""

    def __call__(self, u):
        return np.asarray(u, dtype=float)

    def lipschitz_bound(self, r: float) -> float:
        return 1.0

    def bound(self, r: float) -> float:
        return float(r)

    def numba_spec(self):
        return (RATE_IDENTITY, 0.0, 0.0)


@dataclass(frozen=True)
class Square(FiringRate):
    """f(u) = u^2; mean-value Lipschitz bound 2r on |u| <= r."""

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return u * u

    def lipschitz_bound(self, r: float) -> float:
        return 2.0 * float(r)

    def bound(self, r: float) -> float:
        return float(r) ** 2

    def numba_spec(self):
        return (RATE_SQUARE, 0.0, 0.0)


class CustomRate(FiringRate):
    """User-supplied rate. The Lipschitz bound is either supplied or
    estimated by a dense finite-difference sweep with a 1.25 safety factor.
    """

    def __init__(self, fn, lipschitz_fn=None, bound_fn=None, name="custom",
                 samples: int = 4001):
        self.fn = fn
        self.lipschitz_fn = lipschitz_fn
        self.bound_fn = bound_fn
        self.name = name
        self.samples = samples

    def __call__(self, u):
        return np.asarray(self.fn(np.asarray(u, dtype=float)), dtype=float)

    def lipschitz_bound(self, r: float) -> float:
        if self.lipschitz_fn is not None:
            return float(self.lipschitz_fn(r))
        u = np.linspace(-r, r, self.samples)
        f = self(u)
        slopes = np.abs(np.diff(f) / np.diff(u))
        return 1.25 * float(np.max(slopes))

    def bound(self, r: float) -> float:
        if self.bound_fn is not None:
            return float(self.bound_fn(r))
        u = np.linspace(-r, r, self.samples)
        return float(np.max(np.abs(self(u))))

    def __repr__(self):
        return f"CustomRate({self.name})"


def certify_lipschitz(rate: FiringRate, r: float, pairs: int = 10_000,
                      seed: int = 0) -> dict:
    """Check |f(u1)-f(u2)| <= lipschitz_bound(r)*|u1-u2| on random pairs.

    Returns a report with the violation count and the worst observed
    ratio relative to the certified constant.
    """
    rng = np.random.default_rng(seed)
    bound = rate.lipschitz_bound(r)
    u1 = rng.uniform(-r, r, size=pairs)
    u2 = rng.uniform(-r, r, size=pairs)
    keep = np.abs(u1 - u2) > 1e-14
    u1, u2 = u1[keep], u2[keep]
    ratios = np.abs(rate(u1) - rate(u2)) / np.abs(u1 - u2)
    violations = int(np.sum(ratios > bound * (1.0 + 1e-12)))
    return {
        "bound": bound,
        "pairs": int(u1.size),
        "violations": violations,
        "max_ratio": float(np.max(ratios)) if u1.size else 0.0,
    }
