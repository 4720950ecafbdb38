"""
Linear learners over +/-1 challenge features: soft-margin SVM and L2-regularized logistic regression.

Both return a :class:`LinearModel` describing the hyperplane ``w.x - b = 0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .puf import CrpSet, as_challenges

__all__ = [
    "LinearModel", "TrainConfig", "train", "train_svm", "train_lr", "predict",
    "normalized_distance", "accuracy", "lr_objective", "svm_dual_objective",
]

log = logging.getLogger(__name__)

LEARNERS = ("svm", "lr")
SOLVERS = ("auto", "smo", "ipm")


@dataclass(frozen=True, eq=False)
class LinearModel:
    """
    Learned hyperplane ``w.x - b = 0``.

    ``info`` carries solver metadata (``degenerate``, ``converged``, ``iterations``), ``dual`` the
    SVM dual variables used for warm starts. Neither takes part in equality.
    """

    weights: np.ndarray
    bias: float = 0.0
    info: dict = field(default_factory=dict)
    dual: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("weights must be a vector of length n+1")
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise ValueError("model parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def n(self) -> int:
        return self.weights.size - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.weights))

    @property
    def degenerate(self) -> bool:
        return bool(self.info.get("degenerate", False))

    def decision(self, challenges) -> np.ndarray:
        return as_challenges(challenges, self.n) @ self.weights - self.bias

    def scaled(self, factor: float) -> "LinearModel":
        return LinearModel(self.weights * factor, self.bias * factor, dict(self.info))

    def __neg__(self) -> "LinearModel":
        return self.scaled(-1.0)

    def __eq__(self, other):
        return (isinstance(other, LinearModel) and np.array_equal(self.weights, other.weights)
                and self.bias == other.bias)

    __hash__ = None


@dataclass(frozen=True)
class TrainConfig:
    """
    :param learner: ``"svm"`` or ``"lr"``
    :param regularization: SVM cost C, or LR penalty lambda
    :param tolerance: SVM maximal KKT violation / LR gradient norm at which to stop
    :param max_iterations: solver iteration cap
    :param fit_bias: fit a free (unpenalized) bias; False pins b = 0
    :param solver: SVM dual solver. ``"smo"`` runs SMO alone; ``"ipm"`` starts SMO from an
        interior-point solution; ``"auto"`` runs SMO for a budget of ``1000 + l//4`` iterations
        and switches to the ``"ipm"`` route if that is not enough. With ``fit_bias=False`` dual
        coordinate descent takes SMO's place (``auto`` budget: 50 epochs)
    """

    learner: str = "svm"
    regularization: float = 1.0
    tolerance: float = 1e-3
    max_iterations: int = 10_000_000
    fit_bias: bool = True
    solver: str = "auto"

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.learner not in LEARNERS:
            raise ValueError(f"learner must be one of {LEARNERS}, got {self.learner!r}")
        if not self.regularization > 0:
            raise ValueError("regularization must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def _features(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, CrpSet):
        X, y = data.challenges, data.responses
    else:
        X, y = data
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y).reshape(-1)
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be +1 or -1")
    if len(y) == 0:
        raise ValueError("training data is empty")
    if X.shape[0] != y.shape[0]:
        raise ValueError("features and labels differ in length")
    return X, y.astype(np.float64)


def _single_class_model(X: np.ndarray, label: float, learner: str) -> LinearModel:
    # mean label direction, bias placed one unit of ||w|| beyond the extreme point
    w = label * X.mean(axis=0)
    if not np.any(w):
        w = np.zeros(X.shape[1])
        w[-1] = label
    scores = X @ w
    margin = float(np.linalg.norm(w))
    b = scores.min() - margin if label > 0 else scores.max() + margin
    log.debug("single-class training set, returning heuristic model")
    return LinearModel(w, b, {"learner": learner, "degenerate": True, "converged": True, "iterations": 0})


def _is_pm1(X: np.ndarray) -> bool:
    return X.dtype == np.int8 or bool(np.all((X == 1) | (X == -1)))


def _pack(X: np.ndarray) -> np.ndarray:
    """Sign bits of the non-constant columns, 64 per word (constant columns never differ)."""
    neg = np.asarray(X) < 0
    neg = neg[:, neg.min(axis=0) != neg.max(axis=0)]
    l, p = neg.shape
    words = max(1, -(-p // 64))
    packed = np.zeros((l, words * 8), dtype=np.uint8)
    if p:
        packed[:, : -(-p // 8)] = np.packbits(neg, axis=1, bitorder="little")
    return packed.view(np.uint64)


def svm_dual_objective(alpha: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Dual objective 0.5 a'Qa - sum(a) with Q_ij = y_i y_j x_i.x_j (lower is better)."""
    v = (alpha * y) @ np.asarray(X, dtype=np.float64)
    return 0.5 * float(v @ v) - float(alpha.sum())


def _rho(alpha, G, y, C) -> float:
    yG = y * G
    upper = alpha >= C
    lower = alpha <= 0
    free = ~(upper | lower)
    if free.any():
        return float(yG[free].mean())
    ub_mask = (upper & (y < 0)) | (lower & (y > 0))
    lb_mask = (upper & (y > 0)) | (lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2)


def _svm_dcd(X, y, C, tol, max_iter, rng, alpha=None):
    # dual coordinate descent for the bias-free problem (no equality constraint)
    l = len(y)
    alpha = np.zeros(l) if alpha is None else np.clip(alpha, 0.0, C)
    w = (alpha * y) @ X
    QD = np.einsum("ij,ij->i", X, X)
    it = 0
    converged = False
    while it < max_iter:
        pg_max, pg_min = -np.inf, np.inf
        for i in rng.permutation(l):
            g = y[i] * (X[i] @ w) - 1.0
            pg = min(g, 0.0) if alpha[i] <= 0 else max(g, 0.0) if alpha[i] >= C else g
            pg_max, pg_min = max(pg_max, pg), min(pg_min, pg)
            if pg != 0.0:
                old = alpha[i]
                alpha[i] = min(max(old - g / QD[i], 0.0), C)
                w += (alpha[i] - old) * y[i] * X[i]
        it += 1
        if pg_max - pg_min < tol:
            converged = True
            break
    return w, alpha, it, converged


def _svm_ipm(X, y, C, gap_tol=1e-8, max_iter=100, free_bias=True):
    """
    Primal-dual interior point (Mehrotra predictor-corrector) for the SVM dual.

    Q = V V' with V = diag(y) X has rank at most d, so each Newton system is solved through
    the Woodbury identity at O(l d^2) cost. Returns the dual variables, approximately optimal
    and only approximately feasible; callers snap and polish them.

    :param free_bias: keep the constraint y.alpha = 0 (False solves the bias-free dual)
    """
    l, d = X.shape
    V = X * y[:, None]
    a = np.full(l, C / 2)
    s = np.ones(l)
    z = np.ones(l)
    b = 0.0
    for _ in range(max_iter):
        u = C - a
        w = V.T @ a
        rd = V @ w - 1.0 + y * b - s + z
        rp = float(y @ a) if free_bias else 0.0
        mu = (a @ s + u @ z) / (2 * l)
        primal = 0.5 * (w @ w) + C * np.maximum(0.0, 1.0 - y * (X @ w) - y * b).sum()
        gap = primal - (a.sum() - 0.5 * (w @ w))
        if gap <= gap_tol * max(1.0, abs(primal)) and np.abs(rd).max() < 1e-6 and abs(rp) < 1e-6:
            break
        Hi = 1.0 / (s / a + z / u)
        try:
            L = np.linalg.cholesky(np.eye(d) + V.T @ (V * Hi[:, None]))
        except np.linalg.LinAlgError:
            break

        def solve(r):
            t = Hi * r
            q = np.linalg.solve(L.T, np.linalg.solve(L, V.T @ t))
            return t - Hi * (V @ q)

        Sy = solve(y) if free_bias else np.zeros(l)
        ySy = y @ Sy

        def newton(ta, tu):
            # ta, tu: targets for a*s and u*z
            Sr = solve(-rd + (ta / a - s) - (tu / u - z))
            db = (y @ Sr + rp) / ySy if free_bias else 0.0
            da = Sr - Sy * db
            return da, db, (ta - a * s - s * da) / a, (tu - u * z + z * da) / u

        def step(v, dv):
            m = dv < 0
            return min(1.0, float((-v[m] / dv[m]).min())) if m.any() else 1.0

        da, db, ds, dz = newton(0.0, 0.0)
        ap = min(step(a, da), step(u, -da))
        ad = min(step(s, ds), step(z, dz))
        mu_aff = ((a + ap * da) @ (s + ad * ds) + (u - ap * da) @ (z + ad * dz)) / (2 * l)
        sigma = (mu_aff / mu) ** 3
        da, db, ds, dz = newton(sigma * mu - da * ds, sigma * mu + da * dz)
        ap = 0.99 * min(step(a, da), step(u, -da))
        ad = 0.99 * min(step(s, ds), step(z, dz))
        nxt = a + ap * da, s + ad * ds, z + ad * dz
        if not all(np.all(np.isfinite(v)) for v in nxt) or nxt[0].min() <= 0 or nxt[0].max() >= C:
            # rounding pushed the iterate onto the box; keep the last interior point
            break
        a, s, z = nxt
        b = b + ad * db
    return _snap(a, y, C) if free_bias else np.clip(a, 0.0, C)


def _snap(alpha, y, C, tol=1e-6):
    """Round near-bound values onto the box and restore y.alpha = 0 exactly enough for SMO."""
    a = np.clip(alpha, 0.0, C)
    a[a < tol * C] = 0.0
    a[a > C - tol * C] = C
    r = float(a @ y)
    # move free variables first, then any variable with room, until the residual is gone
    for pool in ((a > 0) & (a < C), np.ones(a.size, dtype=bool)):
        for i in np.flatnonzero(pool):
            if abs(r) <= 1e-12:
                break
            # changing a_i by t changes r by y_i t; want y_i t = -r
            t = -r * y[i]
            new = min(max(a[i] + t, 0.0), C)
            r += y[i] * (new - a[i])
            a[i] = new
    return a


def train_svm(data, config: TrainConfig | None = None, rng: np.random.Generator | None = None,
              warm_start: np.ndarray | None = None) -> LinearModel:
    """
    Soft-margin linear SVM, minimizing 0.5||w||^2 + C sum hinge(y (w.x - b)).

    Solved in the dual by SMO (free bias) or, with ``fit_bias=False``, dual coordinate descent.
    Hard instances (many bounded support vectors close to the boundary) are handed to an
    interior-point solver whose solution SMO then polishes, so every result meets the same
    KKT stopping rule. SMO is deterministic; ``rng`` only drives the coordinate order of the
    bias-free solver.

    :param data: a :class:`CrpSet` or an ``(X, y)`` pair
    :param warm_start: dual variables for a prefix of the data (the rest start at 0)
    """
    config = config or TrainConfig()
    X, y = _features(data)
    if np.all(y == y[0]):
        return _single_class_model(np.asarray(X, dtype=np.float64), y[0], "svm")
    C = config.regularization
    Xf = np.asarray(X, dtype=np.float64)
    if not config.fit_bias:
        rng = np.random.default_rng(0) if rng is None else rng
        start = None
        if warm_start is not None and len(warm_start):
            start = np.zeros(len(y))
            start[:min(len(warm_start), len(y))] = warm_start[:len(y)]
        used = "dcd"
        if config.solver == "ipm":
            start, used = _svm_ipm(Xf, y, C, free_bias=False), "ipm+dcd"
        cap = min(50, config.max_iterations) if config.solver == "auto" else config.max_iterations
        w, alpha, it, conv = _svm_dcd(Xf, y, C, config.tolerance, cap, rng, start)
        if not conv and config.solver == "auto" and cap < config.max_iterations:
            # slow coordinate descent: same interior-point route as the free-bias problem
            start, used = _svm_ipm(Xf, y, C, free_bias=False), "ipm+dcd"
            w, alpha, more, conv = _svm_dcd(Xf, y, C, config.tolerance, config.max_iterations, rng, start)
            it += more
        return LinearModel(w, 0.0, {"learner": "svm", "degenerate": False, "converged": conv,
                                    "iterations": it, "solver": used}, alpha)

    l = len(y)
    binary = _is_pm1(X)
    packed = _pack(X) if binary else None

    def smo(alpha, cap):
        G = y * (Xf @ ((alpha * y) @ Xf)) - 1.0 if alpha.any() else -np.ones(l)
        if binary:
            return _core.smo_binary(packed, X.shape[1], y, C, config.tolerance, cap, alpha, G), G
        return _core.smo_dense(Xf, y, C, config.tolerance, cap, alpha, G), G

    alpha = np.zeros(l)
    if warm_start is not None and len(warm_start):
        m = min(len(warm_start), l)
        alpha[:m] = _snap(warm_start[:m], y[:m], C) if config.solver != "smo" else np.clip(warm_start[:m], 0.0, C)
    used = "smo"
    it = 0
    converged = False
    if config.solver == "ipm":
        alpha, used = _svm_ipm(Xf, y, C), "ipm+smo"
    elif config.solver == "auto":
        budget = min(1_000 + l // 4, config.max_iterations)
        it, G = smo(alpha, budget)
        converged = it < budget
        if not converged and budget < config.max_iterations:
            alpha, used = _svm_ipm(Xf, y, C), "ipm+smo"
    if used != "smo" or config.solver == "smo":
        more, G = smo(alpha, config.max_iterations)
        it += more
        converged = more < config.max_iterations
    if not converged:
        log.warning("SMO stopped at the iteration cap (%d) before reaching tolerance", it)
    w = (alpha * y) @ Xf
    return LinearModel(w, _rho(alpha, G, y, C),
                       {"learner": "svm", "degenerate": False, "converged": converged, "iterations": it,
                        "solver": used},
                       alpha)


def lr_objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, lam: float,
                 fit_bias: bool = True) -> tuple[float, np.ndarray]:
    """
    Regularized logistic loss and its gradient.

    ``theta`` is ``(w, b)`` flattened; the loss is
    ``sum log(1 + exp(-y (w.x - b))) + lam/2 ||w||^2``.
    """
    X = np.asarray(X, dtype=np.float64)
    w, b = theta[:-1], theta[-1]
    z = X @ w - b
    m = y * z
    f = float(np.logaddexp(0.0, -m).sum() + 0.5 * lam * (w @ w))
    r = -y * _sigmoid(-m)
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ r + lam * w
    grad[-1] = -r.sum() if fit_bias else 0.0
    return f, grad


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def train_lr(data, config: TrainConfig | None = None, rng: np.random.Generator | None = None) -> LinearModel:
    """
    L2-regularized logistic regression by damped Newton steps with Armijo backtracking.

    Deterministic; ``rng`` is accepted for symmetry with :func:`train_svm` and unused.
    """
    config = config or TrainConfig(learner="lr")
    X, y = _features(data)
    if np.all(y == y[0]):
        return _single_class_model(np.asarray(X, dtype=np.float64), y[0], "lr")
    X = np.asarray(X, dtype=np.float64)
    lam = config.regularization
    d = X.shape[1]
    theta = np.zeros(d + 1)
    f, g = lr_objective(theta, X, y, lam, config.fit_bias)
    it = 0
    converged = False
    while it < config.max_iterations:
        if np.linalg.norm(g) < config.tolerance:
            converged = True
            break
        m = y * (X @ theta[:-1] - theta[-1])
        D = _sigmoid(m) * _sigmoid(-m)
        H = np.empty((d + 1, d + 1))
        H[:d, :d] = (X.T * D) @ X + lam * np.eye(d)
        H[:d, d] = H[d, :d] = -(X.T @ D)
        H[d, d] = D.sum() + 1e-12
        if not config.fit_bias:
            H[:d, d] = H[d, :d] = 0.0
            H[d, d] = 1.0
        step = -np.linalg.solve(H, g)
        slope = float(g @ step)
        t = 1.0
        while True:
            f_new, g_new = lr_objective(theta + t * step, X, y, lam, config.fit_bias)
            if f_new <= f + 1e-4 * t * slope or t < 1e-10:
                break
            t *= 0.5
        theta = theta + t * step
        f, g = f_new, g_new
        it += 1
    return LinearModel(theta[:-1], theta[-1] if config.fit_bias else 0.0,
                       {"learner": "lr", "degenerate": False, "converged": converged, "iterations": it})


def train(data, config: TrainConfig | None = None, rng: np.random.Generator | None = None,
          warm_start=None) -> LinearModel:
    config = config or TrainConfig()
    if config.learner == "svm":
        return train_svm(data, config, rng, warm_start)
    return train_lr(data, config, rng)


def predict(model: LinearModel, c):
    """sign(w.Phi - b), with 0 mapped to +1. Int for one challenge, int8 array for a batch."""
    c = as_challenges(c, model.n)
    r = np.where(np.atleast_1d(c @ model.weights - model.bias) >= 0, 1, -1).astype(np.int8)
    return int(r[0]) if c.ndim == 1 else r


def normalized_distance(model: LinearModel, c):
    """Signed distance (w.Phi - b)/||w|| of challenge(s) from the model hyperplane."""
    norm = model.norm
    if not norm > 0:
        raise ValueError("normalized distance undefined for a zero-norm model")
    d = model.decision(c) / norm
    return float(d) if np.ndim(d) == 0 else d


def accuracy(model: LinearModel, data: CrpSet) -> float:
    """Fraction of pairs whose stored response the model predicts."""
    if len(data) == 0:
        raise ValueError("accuracy of an empty CRP set is undefined")
    return float(np.mean(predict(model, data.challenges) == data.responses))
