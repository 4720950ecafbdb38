"""
Learning procedures: passive baselines (random or Hadamard-then-random challenges) and the
pool-free adaptive loop that constructs challenges at a chosen distance from the current model.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .challenges import UnreachableTargetError, construct_challenge, hadamard_challenge_set, random_challenges
from .learner import LinearModel, TrainConfig, accuracy, train
from .puf import ArbiterPuf, CrpSet, Noiseless, NoiseModel, as_challenges, evaluate_noisy

__all__ = [
    "Checkpoint", "LearningTrace", "EvaluationReport", "AveragedTrace", "PASSIVE_SOURCES",
    "make_test_set", "run_passive", "run_active", "generate_adversarial_set",
    "evaluate_recognition", "k_sweep", "average_traces",
]

PASSIVE_SOURCES = ("random", "hadamard")


@dataclass(frozen=True)
class Checkpoint:
    crp_count: int
    model: LinearModel = field(repr=False)
    test_accuracy: float | None


@dataclass
class LearningTrace:
    """
    Models and test accuracies recorded while CRPs accumulate.

    ``crps_used`` holds every queried pair in query order; the model at a checkpoint was trained
    on its first ``crp_count`` pairs.
    """

    checkpoints: list[Checkpoint]
    crps_used: CrpSet
    params: dict

    @property
    def crp_counts(self) -> list[int]:
        return [c.crp_count for c in self.checkpoints]

    @property
    def accuracies(self) -> list[float | None]:
        return [c.test_accuracy for c in self.checkpoints]

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]

    def at(self, crp_count: int) -> Checkpoint:
        for c in self.checkpoints:
            if c.crp_count == crp_count:
                return c
        raise KeyError(f"no checkpoint at {crp_count} CRPs")


@dataclass(frozen=True)
class EvaluationReport:
    external_accuracy: float
    internal_accuracy: float


@dataclass(frozen=True)
class AveragedTrace:
    crp_counts: list[int]
    mean_accuracy: list[float]
    std_error: list[float]
    replicas: int

    def at(self, crp_count: int) -> float:
        return self.mean_accuracy[self.crp_counts.index(crp_count)]


def make_test_set(puf: ArbiterPuf, size: int, rng: np.random.Generator,
                  noise: NoiseModel | None = None) -> CrpSet:
    """Fresh uniformly random challenges labeled by the PUF (noiselessly unless ``noise`` is given)."""
    return CrpSet.from_puf(puf, random_challenges(puf.n, size, rng), noise, rng)


def _test_set(puf, eval_size, rng, test):
    if test is not None:
        return test
    if eval_size and eval_size > 0:
        return make_test_set(puf, eval_size, rng)
    return None


def _query(puf, challenges, noise, rng) -> CrpSet:
    challenges = np.atleast_2d(challenges)
    return CrpSet(challenges, evaluate_noisy(puf, challenges, noise, rng))


def _schedule(total: int, step: int, start: int, extra) -> list[int]:
    points = set(range(start, total + 1, step)) | {total}
    if extra is not None:
        points |= {int(c) for c in extra if start <= c <= total}
    return sorted(points)


def run_passive(puf: ArbiterPuf, noise: NoiseModel, total: int, source: str = "random",
                config: TrainConfig | None = None, eval_size: int = 10_000,
                rng: np.random.Generator | None = None, checkpoints=None, M: int = 20,
                test: CrpSet | None = None) -> LearningTrace:
    """
    Learn from challenges that do not depend on the model.

    ``source="hadamard"`` takes the Sylvester rows first (up to n of them) and random challenges
    after that. Each challenge is queried once. The model at every checkpoint is trained from
    scratch on the prefix of that size.

    :param checkpoints: CRP counts to train at; default every count when ``total <= n``,
        otherwise every ``M`` plus ``total``
    :param test: test set to use instead of drawing ``eval_size`` fresh challenges
    """
    if total < 1:
        raise ValueError("total must be >= 1")
    if source not in PASSIVE_SOURCES:
        raise ValueError(f"source must be one of {PASSIVE_SOURCES}, got {source!r}")
    config = config or TrainConfig()
    rng = np.random.default_rng() if rng is None else rng
    test_rng, query_rng, draw_rng = rng.spawn(3)
    test = _test_set(puf, eval_size, test_rng, test)

    n = puf.n
    parts = []
    if source == "hadamard":
        h = min(total, n)
        parts.append(hadamard_challenge_set(n, h))
    drawn = total - sum(len(p) for p in parts)
    if drawn:
        parts.append(random_challenges(n, drawn, draw_rng))
    crps = _query(puf, np.vstack(parts), noise, query_rng)

    if checkpoints is None:
        counts = list(range(1, total + 1)) if total <= n else _schedule(total, M, M, None)
    else:
        counts = sorted({int(c) for c in checkpoints if 1 <= c <= total})
        if not counts:
            raise ValueError("no checkpoint within [1, total]")
    trace = []
    for c in counts:
        model = train(crps[:c], config, rng)
        trace.append(Checkpoint(c, model, accuracy(model, test) if test is not None else None))
    return LearningTrace(trace, crps, {"source": source, "learner": config.learner, "M": M, "total": total})


def run_active(puf: ArbiterPuf, noise: NoiseModel, initial, k: float, M: int = 20, total: int = 1000,
               config: TrainConfig | None = None, eval_size: int = 10_000,
               rng: np.random.Generator | None = None, checkpoints=None,
               test: CrpSet | None = None, warm_start: bool = True) -> LearningTrace:
    """
    Pool-free adaptive learning.

    Query the initial challenges and train; then repeatedly construct ``M`` challenges at
    normalized distance about +/-k from the current model (independent sign coin per challenge),
    query each once, append and retrain, until ``total`` CRPs are used. A batch is shortened when
    needed so that a retrain lands on every requested checkpoint.

    :param initial: challenge array, shape (|S|, n+1)
    :param warm_start: start each SVM retrain from the previous dual solution
    :raises UnreachableTargetError: the requested distance cannot be reached for the current model
    """
    initial = np.atleast_2d(as_challenges(initial, puf.n))
    if len(initial) < 1:
        raise ValueError("initial set must not be empty")
    if M < 1:
        raise ValueError("M must be >= 1")
    if total < len(initial):
        raise ValueError(f"total ({total}) is smaller than the initial set ({len(initial)})")
    config = config or TrainConfig()
    rng = np.random.default_rng() if rng is None else rng
    test_rng, query_rng, build_rng = rng.spawn(3)
    test = _test_set(puf, eval_size, test_rng, test)

    crps = _query(puf, initial, noise, query_rng)
    extra = sorted(int(c) for c in checkpoints) if checkpoints is not None else []
    trace = []
    model = None
    hard = replace(config, solver="ipm") if config.learner == "svm" and config.solver == "auto" else config
    while True:
        dual = model.dual if (warm_start and model is not None) else None
        # once SMO alone was too slow, later retrains (a superset of points) go straight to the
        # interior-point route
        cfg = hard if model is not None and model.info.get("solver") == "ipm+smo" else config
        model = train(crps, cfg, rng, dual)
        trace.append(Checkpoint(len(crps), model, accuracy(model, test) if test is not None else None))
        if len(crps) >= total:
            break
        nxt = min([len(crps) + M, total] + [c for c in extra if c > len(crps)])
        batch = []
        for _ in range(nxt - len(crps)):
            try:
                batch.append(construct_challenge(model, k, build_rng))
            except UnreachableTargetError as e:
                raise UnreachableTargetError(
                    e.target, e.low, e.high,
                    context=f"k={k} is too large for the model trained on {len(crps)} CRPs",
                ) from e
        crps = crps + _query(puf, np.array(batch), noise, query_rng)
    params = {"k": k, "M": M, "initial_size": len(initial), "learner": config.learner, "total": total}
    return LearningTrace(trace, crps, params)


def generate_adversarial_set(puf: ArbiterPuf, initial_size: int = 40, k: float = 5.0, count: int = 10_000,
                             M: int = 20, config: TrainConfig | None = None,
                             rng: np.random.Generator | None = None) -> CrpSet:
    """
    Challenges an authenticating server would emit for slow learning, with noiseless responses.

    Runs the adaptive loop from ``initial_size`` random challenges and returns only the ``count``
    constructed pairs.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    init_rng, loop_rng = rng.spawn(2)
    initial = random_challenges(puf.n, initial_size, init_rng)
    trace = run_active(puf, Noiseless(), initial, k, M, initial_size + count, config, eval_size=0, rng=loop_rng)
    return trace.crps_used[initial_size:]


def evaluate_recognition(crps: CrpSet, train_prefix: int, puf: ArbiterPuf, config: TrainConfig | None = None,
                         eval_size: int = 10_000, rng: np.random.Generator | None = None,
                         test: CrpSet | None = None) -> EvaluationReport:
    """
    Train on the first ``train_prefix`` pairs; internal accuracy on the rest of ``crps``,
    external accuracy on fresh random challenges labeled by the true PUF.
    """
    if not 1 <= train_prefix < len(crps):
        raise ValueError(f"train_prefix must lie in [1, {len(crps) - 1}], got {train_prefix}")
    rng = np.random.default_rng() if rng is None else rng
    test = test if test is not None else make_test_set(puf, eval_size, rng)
    model = train(crps[:train_prefix], config, rng)
    return EvaluationReport(external_accuracy=accuracy(model, test),
                            internal_accuracy=accuracy(model, crps[train_prefix:]))


def average_traces(traces: list[LearningTrace]) -> AveragedTrace:
    """Pointwise mean and standard error of test accuracy over the CRP counts all traces share."""
    if not traces:
        raise ValueError("nothing to average")
    common = sorted(set.intersection(*(set(t.crp_counts) for t in traces)))
    acc = np.array([[t.at(c).test_accuracy for c in common] for t in traces], dtype=float)
    mean = acc.mean(axis=0)
    se = acc.std(axis=0, ddof=1) / np.sqrt(len(traces)) if len(traces) > 1 else np.zeros_like(mean)
    return AveragedTrace(common, mean.tolist(), se.tolist(), len(traces))


def k_sweep(puf_count: int, n: int, ks, noise: NoiseModel, total: int, config: TrainConfig | None = None,
            rng: np.random.Generator | None = None, M: int = 20, initial_size: int = 60,
            eval_size: int = 10_000, checkpoints=None, noisy_test: bool = False) -> dict[float, AveragedTrace]:
    """
    Average the adaptive loop over ``puf_count`` PUFs for each k.

    Every k sees the same PUFs, initial sets and test sets, so differences between k are paired.
    """
    from .puf import sample_puf

    if puf_count < 1:
        raise ValueError("puf_count must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    replicas = rng.spawn(puf_count)
    runs: dict[float, list[LearningTrace]] = {float(k): [] for k in ks}
    for rep in replicas:
        puf_rng, test_rng, init_rng, loop_rng = rep.spawn(4)
        puf = sample_puf(n, rng=puf_rng)
        test = make_test_set(puf, eval_size, test_rng, noise if noisy_test else None)
        initial = random_challenges(n, initial_size, init_rng)
        loop_rngs = loop_rng.spawn(len(runs))
        for k, krng in zip(runs, loop_rngs):
            runs[k].append(run_active(puf, noise, initial, k, M, total, config, rng=krng,
                                      checkpoints=checkpoints, test=test))
    return {k: average_traces(v) for k, v in runs.items()}
