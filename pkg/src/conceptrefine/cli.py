"""Command-line experiment harness.

Subcommands: gen, single, multi, adversarial, classify, sweep. Every run
is a deterministic function of its full flag set (seed included); outputs
are CSV files plus optional hand-emitted SVG charts. Exit codes: 0 on
success, 1 when a bound check or support-recovery assertion fails, 2 on
usage errors.

Flags override entries of an optional key=value config file (--config),
which in turn override built-in defaults.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .classifier import (ConceptBank, EmbeddingDataset, LinearHead,
                         TrainConfig, evaluate, explain_sample, train)
from .generative import (GenerativeParams, build_adversarial_dictionary,
                         draw_samples, perturb_dictionary, sample_sparse_code,
                         synthesize_sample)
from .io import (fmt, load_concepts, load_embeddings, save_concepts,
                 save_explanation, save_matrix, save_trajectory)
from .linalg import random_orthonormal
from .optimizer import (RefinementConfig, SupportRecoveryError,
                        run_multi_sample, run_single_sample)
from .svgplot import render_line_chart

__all__ = ["main"]


def _build_parser(suppress: bool) -> argparse.ArgumentParser:
    """Build the full parser; with ``suppress`` every default is suppressed
    so a parse yields only the flags given explicitly."""

    def dflt(v):
        return argparse.SUPPRESS if suppress else v

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=dflt(0))
    common.add_argument("--out", default=dflt("."), help="output directory")
    common.add_argument("--config", default=dflt(None),
                        help="key=value config file; flags take precedence")
    common.add_argument("--strict", action="store_true", default=dflt(False),
                        help="enforce the contraction preconditions as errors")
    common.add_argument("--plot", action="store_true", default=dflt(False),
                        help="also write SVG charts")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--d", type=int, default=dflt(10))
    model.add_argument("--n", type=int, default=dflt(8))
    model.add_argument("--k", type=int, default=dflt(5))
    model.add_argument("--gamma", type=float, default=dflt(0.5),
                       help="lower bound on nonzero code magnitudes")
    model.add_argument("--gamma-max", type=float, default=dflt(1.0),
                       help="upper bound on nonzero code magnitudes")
    model.add_argument("--signs", choices=["on", "off"], default=dflt("on"),
                       help="Rademacher signs on code magnitudes (on) or raw "
                            "positive magnitudes (off)")

    p = argparse.ArgumentParser(
        prog="conceptrefine",
        description="Constrained refinement of concept-embedding dictionaries")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen", parents=[common, model],
                        help="write a generative instance to CSV")
    sp.add_argument("--rho", type=float, default=dflt(0.2))
    sp.add_argument("--m", type=int, default=dflt(100), help="sample count")

    sp = sub.add_parser("single", parents=[common, model],
                        help="single-sample refinement run")
    sp.add_argument("--rho", type=float, default=dflt(0.2))
    sp.add_argument("--eta", type=float, default=dflt(1e-2))
    sp.add_argument("--iters", type=int, default=dflt(500))

    sp = sub.add_parser("multi", parents=[common, model],
                        help="multi-sample refinement run")
    sp.add_argument("--rho", type=float, default=dflt(0.2))
    sp.add_argument("--eta", type=float, default=dflt(0.1))
    sp.add_argument("--iters", type=int, default=dflt(300))
    sp.add_argument("--m", type=int, default=dflt(5000))

    sp = sub.add_parser("adversarial", parents=[common, model],
                        help="worst-case rotation lower-bound check")
    sp.add_argument("--eps", default=dflt(None),
                    help="comma-separated column deviations; default is an "
                         "--eps-count grid inside the admissible range")
    sp.add_argument("--eps-count", type=int, default=dflt(20))
    sp.add_argument("--trials", type=int, default=dflt(50))

    cls_common = argparse.ArgumentParser(add_help=False)
    cls_common.add_argument("--concepts", default=dflt(None))
    cls_common.add_argument("--train", default=dflt(None))
    cls_common.add_argument("--test", default=dflt(None))
    cls_common.add_argument("--lambda", dest="lam", type=float, default=dflt(0.1))
    cls_common.add_argument("--rho", type=float, default=dflt(0.1))
    cls_common.add_argument("--eta-d", type=float, default=dflt(0.05))
    cls_common.add_argument("--eta-l", type=float, default=dflt(0.5))
    cls_common.add_argument("--epochs", type=int, default=dflt(50))
    cls_common.add_argument("--batch", type=int, default=dflt(256))
    cls_common.add_argument("--disperse", type=float, default=dflt(1.0),
                            help="concept dispersion factor (1 disables)")
    cls_common.add_argument("--no-normalize", action="store_true",
                            default=dflt(False),
                            help="do not renormalize embedding rows at load")

    sp = sub.add_parser("classify", parents=[common, cls_common],
                        help="train the interpretable classifier")
    sp.add_argument("--explain", type=int, default=dflt(0),
                    help="write explanations for the first N eval samples")

    sp = sub.add_parser("sweep", parents=[common, cls_common],
                        help="train across a lambda or rho grid")
    sp.add_argument("--param", choices=["lambda", "rho"],
                    default=dflt("lambda"))
    sp.add_argument("--grid", default=dflt(None),
                    help="comma-separated grid values")

    return p


def _require(args, *names) -> None:
    """Flags that may come from the command line or the config file."""
    for name in names:
        if getattr(args, name) is None:
            raise ValueError(f"--{name} is required")


def _read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _coerce(raw: str):
    low = raw.lower()
    if low in ("true", "yes"):
        return True
    if low in ("false", "no"):
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def _merge_config(argv: list[str], args: argparse.Namespace) -> argparse.Namespace:
    explicit = vars(_build_parser(suppress=True).parse_args(argv))
    merged = dict(vars(args))
    for key, raw in _read_config(args.config).items():
        if key not in merged:
            raise ValueError(f"unknown config key: {key}")
        if key not in explicit:
            merged[key] = _coerce(raw)
    return argparse.Namespace(**merged)


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _build_parser(suppress=False)
    args = parser.parse_args(argv)
    try:
        if args.config:
            args = _merge_config(argv, args)
        os.makedirs(args.out, exist_ok=True)
        return _COMMANDS[args.command](args)
    except SupportRecoveryError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def _instance(args):
    """Deterministically derive (params, dstar, dinit) from the seed."""
    params = GenerativeParams(d=args.d, n=args.n, k=args.k,
                              gamma=args.gamma, gamma_max=args.gamma_max)
    dstar = random_orthonormal(args.d, args.n, args.seed)
    dinit = perturb_dictionary(dstar, args.rho, args.seed + 1)
    return params, dstar, dinit


def _cmd_gen(args) -> int:
    params, dstar, dinit = _instance(args)
    samples = draw_samples(dstar, params, args.m, args.seed + 2,
                           signs=args.signs == "on")
    save_matrix(os.path.join(args.out, "dstar.csv"), dstar.mat)
    save_matrix(os.path.join(args.out, "dinit.csv"), dinit.mat)
    rows = np.stack([np.concatenate([s.beta, s.x]) for s in samples])
    save_matrix(os.path.join(args.out, "samples.csv"), rows)
    print(f"wrote dstar.csv dinit.csv samples.csv to {args.out}")
    return 0


def _write_run_outputs(args, traj) -> None:
    save_trajectory(os.path.join(args.out, "trajectory.csv"), traj.records)
    if args.plot:
        iters = [r.iter for r in traj.records]
        render_line_chart([("loss", iters, [r.loss for r in traj.records])],
                          os.path.join(args.out, "loss.svg"),
                          title="aggregate squared loss", xlabel="iteration",
                          ylabel="loss", logy=True)
        render_line_chart(
            [("all columns", iters, [r.dev_all for r in traj.records]),
             ("active columns", iters, [r.dev_active for r in traj.records])],
            os.path.join(args.out, "deviation.svg"),
            title="column deviation from ground truth", xlabel="iteration",
            ylabel="max column deviation")


def _cmd_single(args) -> int:
    params, dstar, dinit = _instance(args)
    code = sample_sparse_code(params, args.seed + 2, signs=args.signs == "on")
    sample = synthesize_sample(dstar, code)
    cfg = RefinementConfig(eta=args.eta, rho=args.rho, iters=args.iters,
                           k=args.k, strict=args.strict)
    traj = run_single_sample(dstar, dinit, sample, cfg)
    _write_run_outputs(args, traj)
    last = traj.records[-1]
    print(f"single: final loss {fmt(last.loss)} dev_all {fmt(last.dev_all)}")
    return 0


def _cmd_multi(args) -> int:
    params, dstar, dinit = _instance(args)
    samples = draw_samples(dstar, params, args.m, args.seed + 2,
                           signs=args.signs == "on")
    cfg = RefinementConfig(eta=args.eta, rho=args.rho, iters=args.iters,
                           k=args.k, strict=args.strict)
    traj = run_multi_sample(dstar, dinit, samples, cfg)
    _write_run_outputs(args, traj)
    last = traj.records[-1]
    print(f"multi: final loss {fmt(last.loss)} dev_all {fmt(last.dev_all)}")
    return 0


def _cmd_adversarial(args) -> int:
    gamma, gmax = args.gamma, args.gamma_max
    eps_max = 1.0 / math.sqrt(1.0 + 16.0 * gmax**2 / gamma**2)
    if args.eps:
        grid = [float(v) for v in str(args.eps).split(",")]
    else:
        grid = [eps_max * i / (args.eps_count + 1)
                for i in range(1, args.eps_count + 1)]
    dstar = random_orthonormal(args.d, args.n, args.seed)
    rng = np.random.default_rng(args.seed + 1)
    failures = 0
    lines = ["eps,trial,loss,floor,passed"]
    for eps in grid:
        theta = 2.0 * math.asin(eps / 2.0) if 0 < eps < 2 else math.nan
        admissible = (0 < eps < eps_max and math.tan(theta) < gamma / gmax)
        if not admissible:
            print(f"warning: eps={fmt(eps)} outside admissible range, skipped",
                  file=sys.stderr)
            lines.append(f"{fmt(eps)},-1,nan,nan,skipped")
            continue
        dtilde = build_adversarial_dictionary(dstar, args.k, theta)
        floor = 81.0 * (args.k - 1) * eps**2 * gamma**2 / 200.0
        support = np.arange(args.k)
        for trial in range(args.trials):
            mags = rng.uniform(gamma, gmax, size=args.k)
            if args.signs == "on":
                mags *= rng.integers(0, 2, size=args.k) * 2 - 1
            beta = np.zeros(args.n)
            beta[:args.k] = mags
            x = dstar.mat @ beta
            resid = dstar.mat[:, support] @ (dtilde.mat[:, support].T @ x) - x
            loss = float(resid @ resid)
            ok = loss >= floor * (1.0 - 1e-9)
            failures += 0 if ok else 1
            lines.append(f"{fmt(eps)},{trial},{fmt(loss)},{fmt(floor)},"
                         f"{'pass' if ok else 'fail'}")
    with open(os.path.join(args.out, "adversarial.csv"), "w",
              encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    if args.plot:
        per_eps: dict[float, list[float]] = {}
        floors: dict[float, float] = {}
        for row in lines[1:]:
            eps_s, trial, loss_s, floor_s, status = row.split(",")
            if status in ("pass", "fail"):
                per_eps.setdefault(float(eps_s), []).append(float(loss_s))
                floors[float(eps_s)] = float(floor_s)
        if per_eps:
            xs = sorted(per_eps)
            render_line_chart(
                [("smallest measured loss", xs, [min(per_eps[e]) for e in xs]),
                 ("theoretical floor", xs, [floors[e] for e in xs])],
                os.path.join(args.out, "adversarial.svg"),
                title="worst-case loss vs column deviation",
                xlabel="column deviation", ylabel="squared loss", logy=True)
    if failures:
        print(f"error: {failures} trials fell below the theoretical floor",
              file=sys.stderr)
        return 1
    print(f"adversarial: all trials at or above the floor "
          f"({len(lines) - 1} rows)")
    return 0


def _load_classifier_inputs(args):
    _require(args, "concepts", "train")
    names, cmat = load_concepts(args.concepts)
    bank = ConceptBank.from_embeddings(names, cmat)
    X, y = load_embeddings(args.train)
    train_ds = EmbeddingDataset.from_arrays(X, y, normalize=not args.no_normalize)
    test_ds = None
    n_classes = train_ds.n_classes
    if args.test:
        Xt, yt = load_embeddings(args.test)
        n_classes = max(n_classes, int(yt.max()) + 1)
        test_ds = EmbeddingDataset.from_arrays(Xt, yt, n_classes=n_classes,
                                               normalize=not args.no_normalize)
        train_ds = EmbeddingDataset.from_arrays(X, y, n_classes=n_classes,
                                                normalize=not args.no_normalize)
    return bank, train_ds, test_ds, n_classes


def _metrics_csv(path, rows: list[tuple[int, "Metrics"]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("epoch,accuracy,ael,asr,aced\n")
        for epoch, m in rows:
            f.write(f"{epoch},{fmt(m.accuracy)},{fmt(m.ael)},{fmt(m.asr)},"
                    f"{fmt(m.aced)}\n")


def _cmd_classify(args) -> int:
    bank, train_ds, test_ds, n_classes = _load_classifier_inputs(args)
    head = LinearHead.init_random(n_classes, bank.D.n, args.seed)
    cfg = TrainConfig(eta_d=args.eta_d, eta_l=args.eta_l, rho=args.rho,
                      lam=args.lam, epochs=args.epochs, batch=args.batch,
                      dispersion_r=args.disperse, seed=args.seed)
    bank, head, history = train(bank, head, train_ds, cfg)
    _metrics_csv(os.path.join(args.out, "metrics.csv"),
                 list(enumerate(history, start=1)))
    eval_ds = test_ds if test_ds is not None else train_ds
    final = evaluate(bank, head, eval_ds, args.lam)
    _metrics_csv(os.path.join(args.out, "test_metrics.csv"), [(cfg.epochs, final)])
    save_concepts(os.path.join(args.out, "concepts_refined.csv"),
                  bank.names, bank.D.mat)
    save_matrix(os.path.join(args.out, "head.csv"),
                np.hstack([head.W, head.b[:, None]]))
    for i in range(min(args.explain, len(eval_ds))):
        rows = explain_sample(bank, head, eval_ds.X[i], args.lam,
                              top=min(10, bank.D.n))
        save_explanation(os.path.join(args.out, f"explain_{i:03d}.csv"), rows)
    if args.plot:
        epochs = list(range(1, len(history) + 1))
        render_line_chart(
            [("train accuracy", epochs, [m.accuracy for m in history])],
            os.path.join(args.out, "accuracy.svg"), title="training accuracy",
            xlabel="epoch", ylabel="accuracy")
    print(f"classify: accuracy {fmt(final.accuracy)} ael {fmt(final.ael)} "
          f"aced {fmt(final.aced)}")
    return 0


def _cmd_sweep(args) -> int:
    _require(args, "grid")
    bank0, train_ds, test_ds, n_classes = _load_classifier_inputs(args)
    grid = [float(v) for v in str(args.grid).split(",")]
    eval_ds = test_ds if test_ds is not None else train_ds
    lines = ["param,value,accuracy,ael,asr,aced"]
    points = []
    for value in grid:
        lam = value if args.param == "lambda" else args.lam
        rho = value if args.param == "rho" else args.rho
        head = LinearHead.init_random(n_classes, bank0.D.n, args.seed)
        cfg = TrainConfig(eta_d=args.eta_d, eta_l=args.eta_l, rho=rho, lam=lam,
                          epochs=args.epochs, batch=args.batch,
                          dispersion_r=args.disperse, seed=args.seed)
        bank, head, _ = train(bank0, head, train_ds, cfg)
        m = evaluate(bank, head, eval_ds, lam)
        points.append((value, m))
        lines.append(f"{args.param},{fmt(value)},{fmt(m.accuracy)},"
                     f"{fmt(m.ael)},{fmt(m.asr)},{fmt(m.aced)}")
    with open(os.path.join(args.out, "sweep.csv"), "w", encoding="utf-8",
              newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    if args.plot:
        xs = [v for v, _ in points]
        render_line_chart([("accuracy", xs, [m.accuracy for _, m in points])],
                          os.path.join(args.out, "sweep_accuracy.svg"),
                          title=f"accuracy vs {args.param}",
                          xlabel=args.param, ylabel="accuracy")
        render_line_chart([("explanation length", xs,
                            [m.ael for _, m in points])],
                          os.path.join(args.out, "sweep_ael.svg"),
                          title=f"explanation length vs {args.param}",
                          xlabel=args.param, ylabel="mean active concepts")
    print(f"sweep: {len(grid)} grid points written")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "single": _cmd_single,
    "multi": _cmd_multi,
    "adversarial": _cmd_adversarial,
    "classify": _cmd_classify,
    "sweep": _cmd_sweep,
}


if __name__ == "__main__":
    sys.exit(main())
