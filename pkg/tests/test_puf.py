import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from apuflab.puf import (ArbiterPuf, CrpSet, DelayNoise, FlipNoise, Noiseless, as_challenges, evaluate,
                         evaluate_noisy, gamma, is_uncorrelated, sample_puf)
from conftest import all_challenges


def challenge_strategy(n):
    return st.lists(st.sampled_from([1, -1]), min_size=n, max_size=n).map(lambda v: np.array(v + [1], dtype=np.int8))


@st.composite
def challenge_pair(draw, max_n=32):
    n = draw(st.integers(1, max_n))
    return draw(challenge_strategy(n)), draw(challenge_strategy(n))


class TestChallenges:
    def test_valid(self):
        c = as_challenges([1, -1, 1])
        assert c.dtype == np.int8 and c.tolist() == [1, -1, 1]

    @pytest.mark.parametrize("bad", [[1, 0, 1], [1, -1, -1], [1], [[1, 2, 1]]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            as_challenges(bad)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="n\\+1"):
            as_challenges([1, -1, 1], n=3)


class TestSamplePuf:
    def test_reproducible(self):
        a = sample_puf(4, 1.0, np.random.default_rng(7))
        b = sample_puf(4, 1.0, np.random.default_rng(7))
        assert a.weights.shape == (5,) and a == b

    def test_n1(self):
        assert sample_puf(1, rng=np.random.default_rng(0)).weights.shape == (2,)

    @pytest.mark.parametrize("n,sigma", [(0, 1.0), (4, 0.0), (4, -1.0)])
    def test_rejects(self, n, sigma):
        with pytest.raises(ValueError):
            sample_puf(n, sigma, np.random.default_rng(0))

    def test_pooled_mean(self):
        # 10^5 draws of 65 N(0,1) entries; the pooled mean has standard error 1/sqrt(N)
        rng = np.random.default_rng(3)
        w = np.concatenate([sample_puf(64, rng=rng).weights for _ in range(100_000 // 65 + 1)])
        assert abs(w.mean()) <= 3 / math.sqrt(w.size)

    def test_immutable(self):
        p = sample_puf(4, rng=np.random.default_rng(0))
        with pytest.raises(ValueError):
            p.weights[0] = 1.0

    @pytest.mark.parametrize("w", [[1.0], [0.0, 0.0], [1.0, np.inf]])
    def test_invalid_weights(self, w):
        with pytest.raises(ValueError):
            ArbiterPuf(w)


class TestEvaluate:
    def test_examples(self):
        puf = ArbiterPuf(np.ones(5))
        assert evaluate(puf, [1, 1, 1, 1, 1]) == 1
        assert evaluate(puf, [-1, -1, -1, -1, 1]) == -1

    @pytest.mark.parametrize("n", range(1, 11))
    def test_exhaustive_oracle(self, n):
        puf = sample_puf(n, rng=np.random.default_rng(n))
        cs = all_challenges(n)
        expected = []
        for c in cs.tolist():
            s = 0.0
            for ci, wi in zip(c, puf.weights.tolist()):
                s += ci * wi
            expected.append(1 if s > 0 else -1)
        assert evaluate(puf, cs).tolist() == expected

    def test_tie_is_fair_coin(self):
        puf = ArbiterPuf([1.0, -1.0, 0.0])
        c = np.tile(np.array([1, 1, 1], dtype=np.int8), (4000, 1))
        r = evaluate(puf, c, np.random.default_rng(0))
        assert set(r.tolist()) == {1, -1}
        assert abs(r.mean()) < 4 / math.sqrt(4000)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            evaluate(ArbiterPuf(np.ones(5)), [1, 1, 1])

    def test_single_returns_int(self):
        assert isinstance(evaluate(ArbiterPuf(np.ones(3)), [1, 1, 1]), int)


class TestNoise:
    def test_noiseless_identity(self, rng):
        puf = sample_puf(16, rng=rng)
        c = np.vstack([all_challenges(16)[::97]])
        assert np.array_equal(evaluate_noisy(puf, c, Noiseless(), rng), evaluate(puf, c))

    def test_full_flip(self, rng):
        puf = sample_puf(16, rng=rng)
        c = all_challenges(16)[::101]
        assert np.array_equal(evaluate_noisy(puf, c, FlipNoise(1.0), rng), -evaluate(puf, c))

    def test_flip_rate(self):
        # Binomial(10^5, 0.035): 4 sigma is about 0.0023, inside the +-0.005 band
        rng = np.random.default_rng(11)
        puf = sample_puf(64, rng=rng)
        c = np.tile(np.append(np.ones(64, dtype=np.int8), 1), (100_000, 1))
        truth = evaluate(puf, c[0])
        r = evaluate_noisy(puf, c, FlipNoise(0.035), rng)
        flips = int(np.sum(r != truth))
        sd = math.sqrt(100_000 * 0.035 * 0.965)
        assert abs(flips - 3500) <= 4 * sd
        assert abs(flips / 100_000 - 0.035) <= 0.005

    def test_flip_independent_per_call(self):
        rng = np.random.default_rng(5)
        puf = sample_puf(8, rng=rng)
        c = all_challenges(8)[3]
        draws = [evaluate_noisy(puf, c, FlipNoise(0.5), rng) for _ in range(200)]
        assert len(set(draws)) == 2

    def test_delay_noise_rate_on_random_challenges(self):
        # averaged over uniform challenges the delay noise flips about p of the responses
        rng = np.random.default_rng(2)
        flips = []
        for _ in range(20):
            puf = sample_puf(64, rng=rng)
            c = np.hstack([rng.choice(np.array([1, -1], dtype=np.int8), size=(5000, 64)),
                           np.ones((5000, 1), dtype=np.int8)])
            flips.append(np.mean(evaluate_noisy(puf, c, DelayNoise(0.035), rng) != evaluate(puf, c)))
        assert abs(np.mean(flips) - 0.035) < 0.005

    @pytest.mark.parametrize("cls,p", [(FlipNoise, -0.1), (FlipNoise, 1.1), (DelayNoise, 0.5)])
    def test_rejects(self, cls, p):
        with pytest.raises(ValueError):
            cls(p)


class TestGamma:
    def test_identical(self):
        a = np.append(np.ones(64, dtype=np.int8), 1)
        assert gamma(a, a) == 64

    def test_half(self):
        a = np.ones(65, dtype=np.int8)
        b = a.copy()
        b[:32] = -1
        assert gamma(a, b) == 0

    def test_hand_count(self):
        a = np.array([1, -1, -1, 1, 1, -1, 1], dtype=np.int8)
        b = np.array([1, 1, -1, -1, 1, 1, 1], dtype=np.int8)
        same = sum(1 for i in range(6) if a[i] == b[i])
        assert gamma(a, b) == same - (6 - same) == -0

    def test_excludes_tail(self):
        a = np.array([1, 1, 1], dtype=np.int8)
        assert gamma(a, a) == 2

    def test_mismatch(self):
        with pytest.raises(ValueError):
            gamma(np.ones(3, dtype=np.int8), np.ones(4, dtype=np.int8))

    @given(challenge_pair())
    def test_properties(self, pair):
        a, b = pair
        n = a.size - 1
        g = gamma(a, b)
        assert g == gamma(b, a)
        assert gamma(a, a) == n
        assert -n <= g <= n and (g - n) % 2 == 0

    @given(challenge_pair(), st.data())
    def test_single_flip_changes_by_two(self, pair, data):
        a, b = pair
        i = data.draw(st.integers(0, a.size - 2))
        b2 = b.copy()
        b2[i] = -b2[i]
        assert abs(gamma(a, b2) - gamma(a, b)) == 2


class TestUncorrelated:
    def test_identical_false(self):
        a = np.ones(9, dtype=np.int8)
        assert not is_uncorrelated(a, a)

    def test_half_agree(self):
        a = np.ones(9, dtype=np.int8)
        b = np.array([1, 1, 1, 1, -1, -1, -1, -1, 1], dtype=np.int8)
        assert is_uncorrelated(a, b)

    def test_first_bit_differs(self):
        # phi_1 differs, Gamma = -1
        a = np.array([1, 1, 1, 1], dtype=np.int8)
        b = np.array([-1, -1, 1, 1], dtype=np.int8)
        assert gamma(a, b) == -1 and is_uncorrelated(a, b)

    @pytest.mark.parametrize("n", [9, 10])
    def test_exhaustive_count(self, n):
        # phi_1 equal and Gamma = 0: n/2 disagreements among the other n-1 positions;
        # phi_1 different and Gamma = -1: (n+1)/2 disagreements, one of them at position 1
        a = all_challenges(n)[137]
        count = sum(is_uncorrelated(a, b) for b in all_challenges(n))
        expected = math.comb(n - 1, n // 2) if n % 2 == 0 else math.comb(n - 1, (n - 1) // 2)
        assert count == expected
        if n == 10:
            assert count == 126


class TestCrpSet:
    def test_basic(self, rng):
        puf = sample_puf(8, rng=rng)
        s = CrpSet.from_puf(puf, all_challenges(8)[:10])
        assert len(s) == 10 and s.n == 8
        assert s[:4] + s[4:] == s
        assert len(s[3]) == 1
        assert list(s)[0][1] in (1, -1)

    def test_invariants(self):
        with pytest.raises(ValueError):
            CrpSet(np.ones((2, 3), dtype=np.int8), [1])
        with pytest.raises(ValueError):
            CrpSet(np.ones((1, 3), dtype=np.int8), [0])

    def test_join_mismatch(self):
        with pytest.raises(ValueError):
            CrpSet.empty(3) + CrpSet.empty(4)
