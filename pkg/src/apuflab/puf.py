"""
Arbiter PUF simulation as a linear threshold function.

A challenge is a +/-1 vector of length n+1 whose last coordinate is fixed to +1.
Single challenges are 1-d arrays, batches are 2-d arrays of shape (N, n+1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "ArbiterPuf", "CrpSet", "Noiseless", "FlipNoise", "DelayNoise", "NoiseModel",
    "as_challenges", "sample_puf", "evaluate", "evaluate_noisy", "gamma", "is_uncorrelated",
]

CHALLENGE_DTYPE = np.int8


def as_challenges(bits, n: int | None = None) -> np.ndarray:
    """
    Validate and convert challenge data to an int8 array.

    :param bits: array-like of shape (n+1,) or (N, n+1) with entries in {+1, -1}
    :param n: expected number of stages, checked when given
    :return: int8 array of the same shape
    """
    arr = np.asarray(bits)
    if arr.ndim not in (1, 2) or arr.shape[-1] < 2:
        raise ValueError(f"challenges must have shape (n+1,) or (N, n+1) with n >= 1, got {arr.shape}")
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError("challenge entries must be +1 or -1")
    if not np.all(arr[..., -1] == 1):
        raise ValueError("last challenge coordinate must be +1")
    if n is not None and arr.shape[-1] != n + 1:
        raise ValueError(f"challenge length {arr.shape[-1]} does not match n+1 = {n + 1}")
    return arr.astype(CHALLENGE_DTYPE, copy=False)


@dataclass(frozen=True, eq=False)
class ArbiterPuf:
    """One manufactured arbiter PUF instance, given by its delay-difference weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("weights must be a vector of length n+1 with n >= 1")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if not np.any(w):
            raise ValueError("weights must not be all zero")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.size - 1

    def delay(self, challenges) -> np.ndarray:
        """Delay difference w.Phi for one or many challenges."""
        return as_challenges(challenges, self.n) @ self.weights

    def __eq__(self, other):
        return isinstance(other, ArbiterPuf) and np.array_equal(self.weights, other.weights)

    __hash__ = None


@dataclass(frozen=True)
class Noiseless:
    def flip_rate(self) -> float:
        return 0.0


@dataclass(frozen=True)
class FlipNoise:
    """Each response is negated independently with probability ``p``."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"flip probability must lie in [0, 1], got {self.p}")

    def flip_rate(self) -> float:
        return self.p


@dataclass(frozen=True)
class DelayNoise:
    """
    Gaussian measurement noise added to the delay difference before the arbiter decides.

    The noise standard deviation is ``||w|| * tan(pi * p)``, which makes a uniformly random
    challenge flip with probability ``p`` (in the large-n Gaussian limit). Challenges close to
    the decision boundary flip far more often than that, distant ones almost never.
    """

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p < 0.5:
            raise ValueError(f"delay-noise flip rate must lie in [0, 0.5), got {self.p}")

    def flip_rate(self) -> float:
        return self.p

    def sigma(self, puf: ArbiterPuf) -> float:
        return float(np.linalg.norm(puf.weights) * np.tan(np.pi * self.p))


NoiseModel = Union[Noiseless, FlipNoise, DelayNoise]


def sample_puf(n: int, sigma: float = 1.0, rng: np.random.Generator | None = None) -> ArbiterPuf:
    """Draw weights i.i.d. from Normal(0, sigma^2)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rng = np.random.default_rng() if rng is None else rng
    return ArbiterPuf(rng.normal(0.0, sigma, size=n + 1))


def _sign(values: np.ndarray, rng: np.random.Generator | None) -> np.ndarray:
    out = np.where(values > 0, 1, -1).astype(CHALLENGE_DTYPE)
    ties = values == 0
    if np.any(ties):
        rng = np.random.default_rng() if rng is None else rng
        out[ties] = rng.choice(np.array([-1, 1], dtype=CHALLENGE_DTYPE), size=int(ties.sum()))
    return out


def evaluate(puf: ArbiterPuf, c, rng: np.random.Generator | None = None):
    """
    Noiseless response sign(w.Phi).

    An exactly zero delay sum is resolved by a fair coin from ``rng``.
    Returns an int for a single challenge and an int8 array for a batch.
    """
    c = as_challenges(c, puf.n)
    r = _sign(np.atleast_1d(c @ puf.weights), rng)
    return int(r[0]) if c.ndim == 1 else r


def evaluate_noisy(puf: ArbiterPuf, c, noise: NoiseModel, rng: np.random.Generator):
    """Measured response under ``noise``. Every call draws fresh noise."""
    c = as_challenges(c, puf.n)
    delay = np.atleast_1d(c @ puf.weights)
    if isinstance(noise, DelayNoise):
        r = _sign(delay + rng.normal(0.0, noise.sigma(puf), size=delay.shape), rng)
    else:
        r = _sign(delay, rng)
        if isinstance(noise, FlipNoise):
            r = np.where(rng.random(r.shape) < noise.p, -r, r).astype(CHALLENGE_DTYPE)
        elif not isinstance(noise, Noiseless):
            raise TypeError(f"unknown noise model {noise!r}")
    return int(r[0]) if c.ndim == 1 else r


def gamma(a, b) -> int:
    """Number of agreeing minus disagreeing coordinates among the first n (the +1 tail excluded)."""
    a, b = as_challenges(a), as_challenges(b)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("gamma takes two single challenges")
    if a.shape != b.shape:
        raise ValueError(f"challenge lengths differ: {a.size} vs {b.size}")
    return int(np.dot(a[:-1].astype(np.int64), b[:-1]))


def is_uncorrelated(a, b) -> bool:
    """True when the two responses agree with probability exactly 1/2 over random PUFs."""
    g = gamma(a, b)
    a, b = np.asarray(a), np.asarray(b)
    if a[0] == b[0]:
        return g == 0
    return g + 1 == 0


@dataclass(eq=False)
class CrpSet:
    """
    Ordered challenge-response pairs sharing one n.

    :param challenges: int8 array of shape (N, n+1)
    :param responses: int8 array of shape (N,), entries +/-1
    """

    challenges: np.ndarray
    responses: np.ndarray
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        ch = np.asarray(self.challenges)
        if ch.ndim == 1:
            ch = ch.reshape(1, -1)
        if ch.ndim != 2:
            raise ValueError("challenges must be a 2-d array")
        self.challenges = as_challenges(ch)
        r = np.asarray(self.responses).reshape(-1)
        if r.shape[0] != self.challenges.shape[0]:
            raise ValueError(f"{self.challenges.shape[0]} challenges but {r.shape[0]} responses")
        if not np.all((r == 1) | (r == -1)):
            raise ValueError("responses must be +1 or -1")
        self.responses = r.astype(CHALLENGE_DTYPE)

    @classmethod
    def empty(cls, n: int) -> "CrpSet":
        return cls(np.empty((0, n + 1), dtype=CHALLENGE_DTYPE), np.empty(0, dtype=CHALLENGE_DTYPE))

    @property
    def n(self) -> int:
        return self.challenges.shape[1] - 1

    def __len__(self) -> int:
        return self.responses.shape[0]

    def __getitem__(self, item) -> "CrpSet":
        if isinstance(item, (int, np.integer)):
            item = slice(item, item + 1 if item != -1 else None)
        return CrpSet(self.challenges[item], self.responses[item])

    def __iter__(self):
        return zip(self.challenges, (int(r) for r in self.responses))

    def __eq__(self, other) -> bool:
        return (isinstance(other, CrpSet)
                and np.array_equal(self.challenges, other.challenges)
                and np.array_equal(self.responses, other.responses))

    def __add__(self, other: "CrpSet") -> "CrpSet":
        if self.n != other.n:
            raise ValueError(f"cannot join CRP sets with n={self.n} and n={other.n}")
        return CrpSet(np.concatenate([self.challenges, other.challenges]),
                      np.concatenate([self.responses, other.responses]))

    @classmethod
    def from_puf(cls, puf: ArbiterPuf, challenges, noise: NoiseModel | None = None,
                 rng: np.random.Generator | None = None) -> "CrpSet":
        challenges = np.atleast_2d(as_challenges(challenges, puf.n))
        if noise is None or isinstance(noise, Noiseless):
            return cls(challenges, evaluate(puf, challenges, rng))
        return cls(challenges, evaluate_noisy(puf, challenges, noise, rng))
