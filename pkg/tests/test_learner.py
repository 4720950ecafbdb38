import numpy as np
import pytest
from hypothesis import given, strategies as st

from apuflab import _fallback
from apuflab.challenges import hadamard_challenge_set, random_challenges
from apuflab.learner import (LinearModel, TrainConfig, _pack, _svm_ipm, accuracy, lr_objective, normalized_distance,
                             predict, svm_dual_objective, train, train_lr, train_svm)
from apuflab.puf import ArbiterPuf, CrpSet, evaluate, sample_puf
from conftest import all_challenges

try:
    from apuflab import _kernels
except ImportError:  # extension not built
    _kernels = None

PAIR = CrpSet(np.array([[1, 1, 1], [-1, -1, 1]], dtype=np.int8), np.array([1, -1], dtype=np.int8))


def puf_crps(n, count, seed, noise_flip=0.0):
    rng = np.random.default_rng(seed)
    puf = sample_puf(n, rng=rng)
    c = random_challenges(n, count, rng)
    r = evaluate(puf, c)
    if noise_flip:
        r = np.where(rng.random(count) < noise_flip, -r, r).astype(np.int8)
    return puf, CrpSet(c, r)


class TestLinearModel:
    def test_norm(self):
        m = LinearModel(np.array([3.0, 4.0, 0.0]))
        assert m.norm == 5.0 and m.n == 2

    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40))
    def test_norm_property(self, w):
        m = LinearModel(np.array(w))
        ref = np.sqrt(sum(v * v for v in w))
        assert abs(m.norm - ref) <= 1e-12 * max(ref, 1e-300)

    def test_rejects(self):
        with pytest.raises(ValueError):
            LinearModel(np.array([1.0, np.nan]))
        with pytest.raises(ValueError):
            LinearModel(np.array([1.0]))

    def test_config_rejects(self):
        for kw in ({"learner": "tree"}, {"regularization": 0}, {"tolerance": -1}, {"max_iterations": 0},
                   {"solver": "newton"}):
            with pytest.raises(ValueError):
                TrainConfig(**kw)


class TestGeometry:
    def test_hand_case(self):
        assert normalized_distance(LinearModel(np.array([3.0, 4.0, 0.0])), [1, 1, 1]) == pytest.approx(1.4)

    def test_on_plane(self):
        m = LinearModel(np.array([1.0, -1.0, 0.0]), 0.0)
        assert normalized_distance(m, [1, 1, 1]) == 0.0

    @given(st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
    def test_homogeneous(self, scale, seed):
        rng = np.random.default_rng(seed)
        m = LinearModel(rng.normal(size=9), float(rng.normal()))
        c = random_challenges(8, 20, rng)
        assert np.allclose(normalized_distance(m.scaled(scale), c), normalized_distance(m, c), atol=1e-10, rtol=0)
        assert np.array_equal(predict(m.scaled(scale), c), predict(m, c))

    def test_zero_norm(self):
        with pytest.raises(ValueError):
            normalized_distance(LinearModel(np.zeros(3)), [1, 1, 1])

    def test_tie_maps_to_plus(self):
        assert predict(LinearModel(np.array([1.0, -1.0, 0.0])), [1, 1, 1]) == 1

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            predict(LinearModel(np.ones(3)), [1, 1, 1, 1])

    @pytest.mark.parametrize("n", [1, 4, 8, 10])
    def test_exhaustive_oracle(self, n):
        rng = np.random.default_rng(n)
        m = LinearModel(rng.normal(size=n + 1), float(rng.normal()))
        cs = all_challenges(n)
        brute = [1 if sum(a * b for a, b in zip(c, m.weights.tolist())) - m.bias >= 0 else -1 for c in cs.tolist()]
        assert predict(m, cs).tolist() == brute

    @pytest.mark.parametrize("n", [4, 8, 10])
    def test_oracle_model_matches_puf(self, n):
        puf = sample_puf(n, rng=np.random.default_rng(n))
        cs = all_challenges(n)
        assert np.array_equal(predict(LinearModel(puf.weights), cs), evaluate(puf, cs))
        assert accuracy(LinearModel(puf.weights), CrpSet(cs, evaluate(puf, cs))) == 1.0

    @given(st.integers(0, 2**32 - 1))
    def test_negation_complement(self, seed):
        rng = np.random.default_rng(seed)
        m = LinearModel(rng.normal(size=17), float(rng.normal()))
        data = CrpSet(random_challenges(16, 50, rng), rng.choice(np.array([1, -1], dtype=np.int8), 50))
        assert np.array_equal(predict(-m, data.challenges), -predict(m, data.challenges))
        assert accuracy(m, data) + accuracy(-m, data) == pytest.approx(1.0)

    def test_accuracy_empty(self):
        with pytest.raises(ValueError):
            accuracy(LinearModel(np.ones(3)), CrpSet.empty(2))


class TestSvm:
    def test_separable_pair(self):
        m = train_svm(PAIR)
        assert accuracy(m, PAIR) == 1.0
        assert np.all(PAIR.responses * m.decision(PAIR.challenges) > 0)

    @pytest.mark.parametrize("n", range(1, 11))
    def test_zero_training_error_exhaustive(self, n):
        # separable data; a large C approximates the hard margin (at C=1 points closer than
        # about 1/||w|| to the true plane may be given up)
        puf = sample_puf(n, rng=np.random.default_rng(100 + n))
        cs = all_challenges(n)
        data = CrpSet(cs, evaluate(puf, cs))
        assert accuracy(train_svm(data, TrainConfig(regularization=1e6)), data) == 1.0
        assert accuracy(train_svm(data), data) >= 0.95

    def test_sklearn_oracle(self):
        from sklearn.svm import SVC

        _, data = puf_crps(16, 300, 1, noise_flip=0.05)
        X, y = data.challenges.astype(float), data.responses.astype(float)
        ref = SVC(kernel="linear", C=1.0, tol=1e-6).fit(X, y)
        w_ref, b_ref = ref.coef_[0], -ref.intercept_[0]
        m = train_svm(data, TrainConfig(tolerance=1e-6))
        assert np.allclose(m.weights, w_ref, atol=1e-3)
        assert m.bias == pytest.approx(b_ref, abs=1e-3)
        # dual objective of libsvm's solution and ours agree
        alpha_ref = np.zeros(len(y))
        alpha_ref[ref.support_] = np.abs(ref.dual_coef_[0])
        assert svm_dual_objective(m.dual, X, y) == pytest.approx(svm_dual_objective(alpha_ref, X, y), rel=1e-6)

    def test_dual_objective_monotone(self):
        _, data = puf_crps(16, 200, 2, noise_flip=0.05)
        X, y = data.challenges.astype(float), data.responses.astype(float)
        values = []
        for cap in range(1, 60):
            m = train_svm(data, TrainConfig(max_iterations=cap, solver="smo"))
            values.append(svm_dual_objective(m.dual, X, y))
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))

    def test_feasible_dual(self):
        _, data = puf_crps(32, 400, 3)
        m = train_svm(data)
        y = data.responses.astype(float)
        assert np.all(m.dual >= 0) and np.all(m.dual <= 1.0)
        assert abs(m.dual @ y) < 1e-9
        assert m.info["converged"]

    def test_deterministic(self):
        _, data = puf_crps(32, 300, 4)
        a, b = train_svm(data), train_svm(data)
        assert a == b

    def test_warm_matches_cold(self):
        _, data = puf_crps(32, 500, 5)
        first = train_svm(data[:300])
        warm = train_svm(data, warm_start=first.dual)
        cold = train_svm(data)
        X, y = data.challenges.astype(float), data.responses.astype(float)
        assert svm_dual_objective(warm.dual, X, y) == pytest.approx(svm_dual_objective(cold.dual, X, y), rel=1e-3)
        test = CrpSet(random_challenges(32, 2000, np.random.default_rng(0)), predict(cold, random_challenges(
            32, 2000, np.random.default_rng(0))))
        assert accuracy(warm, test) > 0.98

    def test_ipm_matches_smo(self):
        _, data = puf_crps(32, 400, 6, noise_flip=0.1)
        X, y = data.challenges.astype(float), data.responses.astype(float)
        smo = train_svm(data, TrainConfig(solver="smo"))
        ipm = train_svm(data, TrainConfig(solver="ipm"))
        assert ipm.info["solver"] == "ipm+smo" and ipm.info["converged"]
        assert svm_dual_objective(ipm.dual, X, y) == pytest.approx(svm_dual_objective(smo.dual, X, y), rel=1e-4)
        raw = _svm_ipm(X, y, 1.0)
        assert np.all(raw >= 0) and np.all(raw <= 1.0) and abs(raw @ y) < 1e-9

    def test_single_class(self):
        data = CrpSet(random_challenges(8, 5, np.random.default_rng(0)), np.ones(5, dtype=np.int8))
        for learner in ("svm", "lr"):
            m = train(data, TrainConfig(learner=learner))
            assert m.degenerate and accuracy(m, data) == 1.0

    def test_pinned_bias(self):
        _, data = puf_crps(16, 300, 7)
        m = train_svm(data, TrainConfig(fit_bias=False), np.random.default_rng(0))
        assert m.bias == 0.0 and accuracy(m, data) > 0.95 and m.info["converged"]
        ipm = train_svm(data, TrainConfig(fit_bias=False, solver="ipm"), np.random.default_rng(0))
        X, y = data.challenges.astype(float), data.responses.astype(float)
        assert svm_dual_objective(ipm.dual, X, y) == pytest.approx(svm_dual_objective(m.dual, X, y), rel=1e-6)
        assert np.all(ipm.dual >= 0) and np.all(ipm.dual <= 1.0)

    def test_dense_features(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(120, 4))
        y = np.where(X @ np.array([1.0, -2.0, 0.5, 0.3]) > 0.2, 1, -1)
        m = train_svm((X, y), TrainConfig(regularization=100.0))
        assert np.mean(np.where(X @ m.weights - m.bias >= 0, 1, -1) == y) > 0.97

    @pytest.mark.parametrize("bad", [(np.ones((0, 3)), np.ones(0)), (np.array([[np.nan, 1.0]]), np.array([1])),
                                     (np.ones((2, 3)), np.array([1, 0]))])
    def test_errors(self, bad):
        with pytest.raises(ValueError):
            train_svm(bad)

    def test_random_baseline_1000(self):
        # 1000 random noiseless CRPs on n=64: error about 3.2 %, within 1.5 points (single PUF, wider band)
        puf, data = puf_crps(64, 1000, 9)
        rng = np.random.default_rng(99)
        c = random_challenges(64, 10_000, rng)
        err = 100 * (1 - accuracy(train_svm(data), CrpSet(c, evaluate(puf, c))))
        assert abs(err - 3.2) <= 3.0


@pytest.mark.skipif(_kernels is None, reason="compiled extension not built")
class TestBackends:
    @pytest.mark.parametrize("seed", range(3))
    def test_smo_bitwise(self, seed):
        _, data = puf_crps(64, 250, seed, noise_flip=0.05)
        X, y = data.challenges, data.responses.astype(float)
        packed = _pack(X)
        results = []
        for impl in (_kernels, _fallback):
            alpha, G = np.zeros(len(y)), -np.ones(len(y))
            it = impl.smo_binary(packed, X.shape[1], y, 1.0, 1e-3, 100_000, alpha, G)
            results.append((it, alpha, G))
        assert results[0][0] == results[1][0]
        assert np.array_equal(results[0][1], results[1][1]) and np.array_equal(results[0][2], results[1][2])

    def test_dense_same_optimum(self):
        # real-valued kernels round differently in the two paths, so only the optimum is shared
        rng = np.random.default_rng(1)
        X = rng.normal(size=(150, 6))
        y = np.where(rng.random(150) < 0.5, 1.0, -1.0)
        objectives = []
        for impl in (_kernels, _fallback):
            alpha, G = np.zeros(150), -np.ones(150)
            assert impl.smo_dense(X, y, 1.0, 1e-3, 100_000, alpha, G) < 100_000
            objectives.append(svm_dual_objective(alpha, X, y))
        assert objectives[0] == pytest.approx(objectives[1], rel=1e-6)

    @given(st.integers(1, 100), st.floats(-5, 5), st.integers(0, 2**32 - 1))
    def test_greedy_identical(self, n, target, seed):
        rng = np.random.default_rng(seed)
        w = rng.normal(size=n + 1)
        order = rng.permutation(n)
        assert np.array_equal(_kernels.greedy_challenge(w, order, target),
                              _fallback.greedy_challenge(w, order, target))


class TestLr:
    def test_separable_pair(self):
        assert accuracy(train_lr(PAIR), PAIR) == 1.0

    @pytest.mark.parametrize("seed", range(3))
    def test_gradient_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        _, data = puf_crps(10, 60, seed, noise_flip=0.1)
        X, y = data.challenges.astype(float), data.responses.astype(float)
        theta = rng.normal(size=X.shape[1] + 1)
        f, g = lr_objective(theta, X, y, 1.0)
        h = 1e-5
        num = np.array([(lr_objective(theta + h * e, X, y, 1.0)[0] - lr_objective(theta - h * e, X, y, 1.0)[0])
                        / (2 * h) for e in np.eye(theta.size)])
        assert np.linalg.norm(num - g) <= 1e-4 * np.linalg.norm(g)

    def test_gradient_at_solution(self):
        _, data = puf_crps(10, 60, 3, noise_flip=0.1)
        m = train_lr(data, TrainConfig(learner="lr", tolerance=1e-8))
        X, y = data.challenges.astype(float), data.responses.astype(float)
        theta = np.append(m.weights, m.bias)
        _, g = lr_objective(theta, X, y, 1.0)
        assert m.info["converged"] and np.linalg.norm(g) < 1e-8

    def test_learns(self):
        puf, data = puf_crps(32, 800, 4)
        c = random_challenges(32, 5000, np.random.default_rng(1))
        assert accuracy(train_lr(data), CrpSet(c, evaluate(puf, c))) > 0.9

    def test_hadamard_catch_up(self):
        # n=128: with the full Hadamard set LR matches Hadamard SVM and is well above LR on as
        # many random challenges
        rng = np.random.default_rng(12)
        lr_h, svm_h, lr_r = [], [], []
        for _ in range(6):
            puf = sample_puf(128, rng=rng)
            h, r = hadamard_challenge_set(128), random_challenges(128, 128, rng)
            test_c = random_challenges(128, 5000, rng)
            test = CrpSet(test_c, evaluate(puf, test_c))
            lr_h.append(accuracy(train_lr(CrpSet(h, evaluate(puf, h))), test))
            svm_h.append(accuracy(train_svm(CrpSet(h, evaluate(puf, h))), test))
            lr_r.append(accuracy(train_lr(CrpSet(r, evaluate(puf, r))), test))
        assert np.mean(lr_h) > 0.7
        assert abs(np.mean(lr_h) - np.mean(svm_h)) < 0.01
        assert np.mean(lr_h) - np.mean(lr_r) > 0.03


def test_pure_backend_selected_at_import():
    # a fresh interpreter with APUFLAB_PURE=1 uses the numpy fallback and trains the same model
    import os
    import subprocess
    import sys

    code = ("import numpy as np, apuflab\n"
            "from apuflab.challenges import random_challenges\n"
            "from apuflab.puf import CrpSet, evaluate, sample_puf\n"
            "rng = np.random.default_rng(3); puf = sample_puf(32, rng=rng); c = random_challenges(32, 200, rng)\n"
            "m = apuflab.train_svm(CrpSet(c, evaluate(puf, c)))\n"
            "print(apuflab.BACKEND, repr(m.bias), repr(float(m.weights.sum())))\n")
    outs = {}
    for pure in ("1", "0"):
        env = dict(os.environ, APUFLAB_PURE=pure)
        outs[pure] = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                    check=True).stdout.split()
    assert outs["1"][0] == "python"
    if _kernels is not None:
        assert outs["0"][0] == "compiled" and outs["0"][1:] == outs["1"][1:]
