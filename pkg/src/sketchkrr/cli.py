"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training finished
without convergence (the model is still written, flagged in its metadata).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace

from .data import load_dataset
from .errors import (
    DimensionMismatch,
    EmptyFile,
    ModelFormatError,
    ParseError,
    UnknownLabel,
)
from .kernels import KernelSpec, gram_matrix, statistical_dimension, theoretical_sketch_size
from .modelfile import load_model, save_model
from .numerics import symmetric_eigen
from .sketches import ChainSpec
from .solver import (
    CLASSIFY,
    REGRESS,
    SolverConfig,
    error_rate,
    mean_squared_error,
    train,
    train_random_features_baseline,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOT_CONVERGED = 0, 1, 2, 3
DATA_ERRORS = (ParseError, EmptyFile, DimensionMismatch, UnknownLabel, ModelFormatError, OSError)
DEFAULT_S1 = 256


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _data_args(p):
    p.add_argument("--format", choices=["libsvm", "csv"], default="libsvm")
    p.add_argument("--header", action="store_true", help="skip the first CSV line")
    p.add_argument("--task", choices=[CLASSIFY, REGRESS], default=CLASSIFY)
    p.add_argument("--json", action="store_true", help="machine-readable output")


def _kernel_args(p):
    p.add_argument("--kernel", choices=["gaussian", "poly"], default="gaussian")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)


def _solver_args(p):
    p.add_argument("--lambda-p", dest="lambda_p", type=float, default=None,
                   help="preconditioner shift (default: --lambda; 10x lambda often helps)")
    p.add_argument("--sketch", choices=["rff", "tensorsketch"], default=None)
    p.add_argument("--s1", type=int, default=0, help=f"feature count (0: min(n, {DEFAULT_S1}))")
    p.add_argument("--s2", type=int, default=0, help="SRHT level size (0 skips it)")
    p.add_argument("--s3", type=int, default=0, help="Gaussian level size (0 skips it)")
    p.add_argument("--adaptive", action="store_true", help="grow the sketch until it tests good")
    p.add_argument("--no-precond", action="store_true", help="plain conjugate gradients")
    p.add_argument("--tau", type=float, default=None,
                   help="relative residual tolerance (default 1e-3 classify, 1e-5 regress)")
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sketchkrr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a model and write it to a file")
    p.add_argument("data")
    p.add_argument("-o", "--model", required=True)
    _data_args(p)
    _kernel_args(p)
    _solver_args(p)

    p = sub.add_parser("predict", help="print predictions for a dataset")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("-o", "--output", default=None)
    _data_args(p)

    p = sub.add_parser("eval", help="print error rate or MSE of a model on a dataset")
    p.add_argument("model")
    p.add_argument("data")
    _data_args(p)

    p = sub.add_parser("bench", help="compare PCG, plain CG and the random features method")
    p.add_argument("train_data")
    p.add_argument("test_data")
    _data_args(p)
    _kernel_args(p)
    _solver_args(p)

    p = sub.add_parser("statdim", help="statistical dimension and theoretical sketch size")
    p.add_argument("data")
    p.add_argument("--delta", type=float, default=0.5)
    _data_args(p)
    _kernel_args(p)
    return parser


def _kernel(args) -> KernelSpec:
    if args.kernel == "gaussian":
        return KernelSpec.gaussian(args.sigma)
    return KernelSpec.polynomial(args.gamma, args.offset, args.degree)


def _config(args, n: int) -> SolverConfig:
    chain = None
    if not args.no_precond:
        s1 = args.s1 or min(n, DEFAULT_S1)
        chain = ChainSpec(s1, args.s2, args.s3, sketch=args.sketch)
    return SolverConfig(
        lam=args.lam,
        lambda_p=args.lambda_p,
        tau=args.tau,
        max_iter=args.max_iter,
        chain=chain,
        adaptive=args.adaptive,
        seed=args.seed,
        task=args.task,
    )


def _config_dict(args) -> dict:
    skip = {"json", "verbose", "func", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _metric(task, model, dataset) -> float:
    if task == CLASSIFY:
        return error_rate(model.predict_labels(dataset.X), dataset.y)
    return mean_squared_error(model.predict(dataset.X), dataset.y)


def _metric_name(task) -> str:
    return "error_rate" if task == CLASSIFY else "mse"


def _per_rhs(report) -> list:
    return [
        {"iterations": r.iterations, "residual": r.residual, "converged": r.converged}
        for r in report.per_rhs
    ]


def _emit(args, payload: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print("\n".join(lines))


def cmd_train(args) -> int:
    dataset = load_dataset(args.data, args.format, args.task, args.header)
    kernel = _kernel(args)
    model, report = train(dataset, kernel, _config(args, dataset.n))
    save_model(model, args.model)
    metric = _metric(args.task, model, dataset)
    payload = {
        "command": "train",
        "config": _config_dict(args),
        "per_rhs": _per_rhs(report),
        "metric": {_metric_name(args.task): metric},
        "sketch_size": report.sketch_size,
        "wall_time_sec": report.wall_time,
    }
    lines = [f"model written to {args.model}"]
    for j, r in enumerate(report.per_rhs):
        status = "converged" if r.converged else "NOT converged"
        lines.append(f"rhs {j}: {r.iterations} iterations, residual {r.residual:.3e}, {status}")
    lines.append(f"training {_metric_name(args.task)}: {metric:.6g}")
    lines.append(f"wall time: {report.wall_time:.3f} s")
    _emit(args, payload, lines)
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _load_for_model(args):
    model = load_model(args.model)
    task = model.meta.get("task", args.task)
    dataset = load_dataset(args.data, args.format, task, args.header,
                           n_features=model.d if args.format == "libsvm" else None)
    if dataset.d != model.d:
        raise DimensionMismatch(f"model expects {model.d} features, data has {dataset.d}")
    return model, dataset, task


def cmd_predict(args) -> int:
    model, dataset, task = _load_for_model(args)
    if task == CLASSIFY:
        preds = model.predict_labels(dataset.X).tolist()
    else:
        scores = model.predict(dataset.X)
        preds = scores[:, 0].tolist() if scores.shape[1] == 1 else scores.tolist()
    text = "\n".join(str(p) if not isinstance(p, float) else repr(p) for p in preds)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if args.json:
        print(json.dumps({"command": "predict", "predictions": preds}))
    elif not args.output:
        print(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    model, dataset, task = _load_for_model(args)
    start = time.perf_counter()
    metric = _metric(task, model, dataset)
    payload = {
        "command": "eval",
        "config": _config_dict(args),
        "metric": {_metric_name(task): metric},
        "iterations": model.meta.get("iterations"),
        "wall_time_sec": time.perf_counter() - start,
    }
    _emit(args, payload, [f"{_metric_name(task)}: {metric:.6g}"])
    return EXIT_OK


def cmd_bench(args) -> int:
    train_set = load_dataset(args.train_data, args.format, args.task, args.header)
    test_set = load_dataset(args.test_data, args.format, args.task, args.header,
                            n_features=train_set.d if args.format == "libsvm" else None)
    if test_set.d != train_set.d:
        raise DimensionMismatch(f"train has {train_set.d} features, test has {test_set.d}")
    kernel = _kernel(args)
    args.no_precond = False
    config = _config(args, train_set.n)
    rows = []

    for name, cfg in (("pcg", config), ("cg", replace(config, chain=None, adaptive=False))):
        model, report = train(train_set, kernel, cfg)
        rows.append({
            "method": name,
            "iterations": report.iterations,
            "converged": report.converged,
            "time_sec": report.wall_time,
            "train_metric": _metric(args.task, model, train_set),
            "test_metric": _metric(args.task, model, test_set),
            "sketch_size": report.sketch_size,
        })

    s = rows[0]["sketch_size"]
    start = time.perf_counter()
    rf = train_random_features_baseline(
        train_set, kernel, config.chain.scaled_to(s), args.lam, seed=args.seed, task=args.task
    )
    elapsed = time.perf_counter() - start
    rows.append({
        "method": "random_features",
        "iterations": 0,
        "converged": True,
        "time_sec": elapsed,
        "train_metric": _metric(args.task, rf, train_set),
        "test_metric": _metric(args.task, rf, test_set),
        "sketch_size": s,
    })

    metric = _metric_name(args.task)
    lines = [f"{'method':<16}{'iterations':>11}{'time (s)':>11}{'train ' + metric:>18}{'test ' + metric:>18}"]
    for r in rows:
        lines.append(f"{r['method']:<16}{r['iterations']:>11d}{r['time_sec']:>11.3f}"
                     f"{r['train_metric']:>18.6g}{r['test_metric']:>18.6g}")
    _emit(args, {"command": "bench", "config": _config_dict(args), "metric": metric, "rows": rows},
          lines)
    return EXIT_OK


def cmd_statdim(args) -> int:
    dataset = load_dataset(args.data, args.format, args.task, args.header)
    kernel = _kernel(args)
    eigenvalues = symmetric_eigen(gram_matrix(kernel, dataset.X)).eigenvalues
    s_lambda = statistical_dimension(eigenvalues, args.lam)
    payload = {"command": "statdim", "config": _config_dict(args),
               "statistical_dimension": s_lambda, "n": dataset.n}
    lines = [repr(round(s_lambda, 10))]
    if not kernel.is_gaussian:
        size = theoretical_sketch_size(kernel.degree, s_lambda, args.delta)
        payload["theoretical_sketch_size"] = size
        lines.append(f"theoretical sketch size (q={kernel.degree}, delta={args.delta}): {size}")
    _emit(args, payload, lines)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "statdim": cmd_statdim,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except DATA_ERRORS as exc:
        print(f"sketchkrr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"sketchkrr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
