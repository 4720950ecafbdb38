"""
Challenge sources: uniform random challenges, Sylvester-Hadamard sets, and challenges
constructed at a chosen normalized distance from a learned hyperplane.
"""
from __future__ import annotations

import numpy as np

from . import _core
from .puf import CHALLENGE_DTYPE

__all__ = [
    "UnreachableTargetError", "sylvester_hadamard", "hadamard_challenge_set",
    "random_challenge", "random_challenges", "construct_challenge",
]


class UnreachableTargetError(ValueError):
    """No +/-1 challenge can bring the delay sum to the requested target."""

    def __init__(self, target: float, low: float, high: float, context: str = ""):
        self.target, self.low, self.high = target, low, high
        msg = f"target delay sum {target:.6g} outside attainable range [{low:.6g}, {high:.6g}]"
        super().__init__(f"{msg}: {context}" if context else msg)


def _is_power_of_two(m: int) -> bool:
    return isinstance(m, (int, np.integer)) and m >= 1 and (m & (m - 1)) == 0


def sylvester_hadamard(order: int) -> np.ndarray:
    """
    Sylvester Hadamard matrix: H_1 = [1], H_2m = [[H_m, H_m], [H_m, -H_m]].

    :param order: a power of two
    :return: int8 array of shape (order, order)
    """
    if not _is_power_of_two(order):
        raise ValueError(f"order must be a power of two, got {order}")
    h = np.ones((1, 1), dtype=CHALLENGE_DTYPE)
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


def hadamard_challenge_set(n: int, count: int | None = None) -> np.ndarray:
    """First ``count`` rows of the order-n Sylvester matrix, each with +1 appended."""
    if not _is_power_of_two(n):
        raise ValueError(f"n must be a power of two, got {n}")
    count = n if count is None else count
    if not 1 <= count <= n:
        raise ValueError(f"count must lie in [1, {n}], got {count}")
    rows = sylvester_hadamard(n)[:count]
    return np.hstack([rows, np.ones((count, 1), dtype=CHALLENGE_DTYPE)])


def random_challenges(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    c = np.ones((count, n + 1), dtype=CHALLENGE_DTYPE)
    c[:, :n] = 1 - 2 * rng.integers(0, 2, size=(count, n), dtype=CHALLENGE_DTYPE)
    return c


def random_challenge(n: int, rng: np.random.Generator) -> np.ndarray:
    return random_challenges(n, 1, rng)[0]


def construct_challenge(model, k: float, rng: np.random.Generator) -> np.ndarray:
    """
    Build a challenge at signed normalized distance about +k or -k (fair coin) from the model's
    hyperplane w.x - b = 0.

    The target delay sum is ``T = s*k*||w|| + b``. Coordinates 1..n are visited in a fresh random
    order and each is set to push the running sum toward T, so the result satisfies
    ``|w.Phi - T| <= 2 max|w_i|`` whenever T is reachable with that slack.

    :param model: a :class:`~apuflab.learner.LinearModel`
    :param k: normalized distance parameter
    :param rng: random source for the sign coin and the visiting order
    :raises UnreachableTargetError: T lies outside the attainable range of w.Phi
    """
    w = model.weights
    if not model.norm > 0:
        raise ValueError("cannot construct challenges for a zero-norm model")
    n = w.size - 1
    s = 1.0 if rng.random() < 0.5 else -1.0
    target = s * k * model.norm + model.bias
    reach = float(np.abs(w[:n]).sum())
    low, high = w[n] - reach, w[n] + reach
    if not low <= target <= high:
        raise UnreachableTargetError(target, low, high)
    return _core.greedy_challenge(w, rng.permutation(n), target)
