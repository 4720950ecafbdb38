"""
Command line entry point.

    apuflab gen hadamard --n 64 --count 64 [--out FILE]
    apuflab gen random --n 64 --count 100 --seed 7 [--out FILE]
    apuflab gen adversarial --n 64 --k 5 --initial 40 --count 10000 --seed 7 --out FILE
    apuflab run [--config FILE] [--spec NAME] [--n ... --out DIR]
    apuflab reproduce TARGET [--replicas R] [--seed S] [--out DIR]
    apuflab eval --crps FILE (--model FILE | --train-prefix P [--learner svm|lr] [--save-model FILE])

Exit codes: 0 success, 1 error, 2 a reproduced value outside its acceptance band.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .challenges import hadamard_challenge_set, random_challenges
from .harness import (BUILTIN_SPECS, MODES, NOISE_MODELS, TARGETS, ExperimentSpec, SpecError, reproduce,
                      run_experiment, spec_from_mapping, write_result)
from .io import FormatError, read_crps, read_model, write_challenges, write_crps, write_model
from .learner import TrainConfig, accuracy, train

EXIT_OK, EXIT_ERROR, EXIT_BAND = 0, 1, 2

# flag destination -> ExperimentSpec field
_SPEC_FLAGS = {
    "n": "n", "k": "k", "m": "M", "initial": "initial_size", "noise": "noise_p", "replicas": "replicas",
    "seed": "seed", "learner": "learner", "checkpoints": "crp_checkpoints", "mode": "mode",
    "noise_model": "noise_model", "noisy_test": "noisy_test", "eval_size": "eval_size",
    "initial_source": "initial_source", "name": "name",
}


class CliError(Exception):
    pass


def read_config(path) -> dict[str, str]:
    """
    Flat ``key = value`` file; ``#`` starts a comment. Keys are flag or spec field names
    (``initial`` or ``initial_size``, ``m`` or ``M``, dashes or underscores).
    """
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise FormatError(path, lineno, "expected key = value")
            key, value = (t.strip() for t in text.split("=", 1))
            if not key:
                raise FormatError(path, lineno, "empty key")
            key = key.replace("-", "_")
            field = _SPEC_FLAGS.get(key.lower(), key)
            if field in out:
                raise FormatError(path, lineno, f"duplicate key {key!r}")
            out[field] = value
    return out


def _checkpoints(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_spec_flags(p):
    p.add_argument("--n", type=int, help="number of stages")
    p.add_argument("--k", type=float, help="normalized distance (active mode)")
    p.add_argument("--m", type=int, help="challenges per retrain")
    p.add_argument("--initial", type=int, help="initial set size (active mode)")
    p.add_argument("--noise", type=float, help="response flip rate, 0 for noiseless")
    p.add_argument("--noise-model", choices=NOISE_MODELS, help="flip (default) or delay")
    p.add_argument("--noisy-test", action="store_const", const=True, default=None,
                   help="label the test set with noisy responses")
    p.add_argument("--replicas", type=int, help="number of PUF instances")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--learner", choices=("svm", "lr"))
    p.add_argument("--checkpoints", type=_checkpoints, help="CRP counts, e.g. 200,350,550")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--initial-source", choices=("random", "hadamard"))
    p.add_argument("--eval-size", type=int, help="test set size")
    p.add_argument("--name")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apuflab", description="Arbiter PUF active learning experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a challenge or CRP file")
    gsub = gen.add_subparsers(dest="source", required=True)
    h = gsub.add_parser("hadamard", help="first COUNT Sylvester rows with +1 appended")
    h.add_argument("--n", type=int, required=True)
    h.add_argument("--count", type=int)
    h.add_argument("--out", help="output file (default stdout)")
    r = gsub.add_parser("random", help="uniform random challenges")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--count", type=int, required=True)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--out")
    a = gsub.add_parser("adversarial", help="k-distance CRP set for a simulated PUF")
    a.add_argument("--n", type=int, default=64)
    a.add_argument("--k", type=float, default=5.0)
    a.add_argument("--m", type=int, default=20)
    a.add_argument("--initial", type=int, default=40)
    a.add_argument("--count", type=int, default=10_000)
    a.add_argument("--seed", type=int, required=True)
    a.add_argument("--learner", choices=("svm", "lr"), default="svm")
    a.add_argument("--out", required=True)
    a.add_argument("--save-puf", help="also write the simulated PUF weights in the model format")

    run = sub.add_parser("run", help="run one averaged experiment")
    run.add_argument("--config", help="flat key=value file; flags override it")
    run.add_argument("--spec", choices=sorted(BUILTIN_SPECS), help="start from a built-in spec")
    _add_spec_flags(run)
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.add_argument("--out", help="directory for result.csv and trace.csv")

    rep = sub.add_parser("reproduce", help="regenerate a published table or figure")
    rep.add_argument("target", choices=TARGETS)
    rep.add_argument("--replicas", type=int)
    rep.add_argument("--seed", type=int, default=1)
    rep.add_argument("--jobs", type=int, default=1)
    rep.add_argument("--out", default="out")

    ev = sub.add_parser("eval", help="accuracy of a model, or internal recognition of a CRP set")
    ev.add_argument("--crps", required=True, help="CRP file to evaluate on")
    ev.add_argument("--model", help="model file; evaluate it on all of --crps")
    ev.add_argument("--train-prefix", type=int, help="train on this many leading pairs, evaluate on the rest")
    ev.add_argument("--learner", choices=("svm", "lr"), default="svm")
    ev.add_argument("--save-model", help="write the trained model here")
    return parser


def _cmd_gen(args) -> int:
    if args.source == "hadamard":
        c = hadamard_challenge_set(args.n, args.count)
    elif args.source == "random":
        if args.count < 0:
            raise CliError("--count must be >= 0")
        c = random_challenges(args.n, args.count, np.random.default_rng(args.seed))
    else:
        from .active import generate_adversarial_set
        from .puf import sample_puf

        puf_rng, set_rng = np.random.default_rng(args.seed).spawn(2)
        puf = sample_puf(args.n, rng=puf_rng)
        crps = generate_adversarial_set(puf, args.initial, args.k, args.count, args.m,
                                        TrainConfig(learner=args.learner), set_rng)
        write_crps(args.out, crps)
        if args.save_puf:
            from .learner import LinearModel

            write_model(args.save_puf, LinearModel(puf.weights, 0.0))
        return EXIT_OK
    if args.out:
        write_challenges(args.out, c)
    else:
        sys.stdout.write(f"# n={c.shape[1] - 1}\n")
        for row in c:
            sys.stdout.write(" ".join("+1" if v > 0 else "-1" for v in row) + "\n")
    return EXIT_OK


def _cmd_run(args) -> int:
    base = BUILTIN_SPECS[args.spec] if args.spec else ExperimentSpec()
    values = read_config(args.config) if args.config else {}
    for dest, field in _SPEC_FLAGS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[field] = v
    spec = spec_from_mapping(values, base)
    result = run_experiment(spec, jobs=args.jobs)
    print(f"{spec.name}: {spec.mode} n={spec.n} learner={spec.learner} k={spec.k} noise={spec.noise_p} "
          f"({spec.noise_model}) replicas={spec.replicas} seed={spec.seed}  [{result.wall_time:.1f} s]")
    print(f"{'crps':>8} {'accuracy':>10} {'std_err':>9} {'error%':>8}")
    for c, m, se in result.per_checkpoint:
        print(f"{c:>8} {m:>10.4f} {se:>9.4f} {100 - 100 * m:>8.2f}")
    if args.out:
        paths = write_result(args.out, result)
        print(f"wrote {paths['result']} and {paths['trace']}")
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    report = reproduce(args.target, args.out, args.replicas, args.seed, args.jobs)
    for label, measured, ref, ok in report.checks:
        mark = "    " if ok is None else ("PASS" if ok else "FAIL")
        print(f"{mark}  {label}: {measured:.3f} (reference {ref})")
    print(f"{args.target}: {'all checks pass' if report.passed else 'outside acceptance band'}; "
          f"files in {args.out}/{args.target}/")
    return EXIT_OK if report.passed else EXIT_BAND


def _cmd_eval(args) -> int:
    crps = read_crps(args.crps)
    if (args.model is None) == (args.train_prefix is None):
        raise CliError("give exactly one of --model or --train-prefix")
    if args.model:
        model = read_model(args.model)
        if model.n != crps.n:
            raise CliError(f"model has n={model.n} but the CRPs have n={crps.n}")
        print(f"accuracy {accuracy(model, crps):.6f} on {len(crps)} CRPs")
        return EXIT_OK
    p = args.train_prefix
    if not 1 <= p < len(crps):
        raise CliError(f"--train-prefix must lie in [1, {len(crps) - 1}]")
    model = train(crps[:p], TrainConfig(learner=args.learner))
    print(f"internal accuracy {accuracy(model, crps[p:]):.6f} on {len(crps) - p} held-out CRPs "
          f"(trained on {p}, {args.learner})")
    if args.save_model:
        write_model(args.save_model, model)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"gen": _cmd_gen, "run": _cmd_run, "reproduce": _cmd_reproduce, "eval": _cmd_eval}
    try:
        return handlers[args.command](args)
    except (CliError, SpecError, FormatError, ValueError, OSError) as e:
        print(f"apuflab: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
