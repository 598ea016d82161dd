"""Command line interface.

    enose simulate    --table binary-ethanol --seed 42 --out sessions/
    enose ingest      --in frames.txt --out session.csv
    enose preprocess  --in session.csv --out processed.csv
    enose train-svm   --in features.csv --c 10 --kernel rbf --gamma auto --model out.svm
    enose classify    --model out.svm --in features.csv --report report.csv
    enose train-mlp   --in features.csv --model out.mlp
    enose predict     --model out.mlp --in features.csv --report pred.csv
    enose bench       --table ternary --seed 7 --out results/ [--features kpca]

Every failure exits nonzero with a `[stage=...]` tagged message.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import acquisition, bench, config as configmod, features, modelio
from . import preprocess as prep
from . import report as reportmod
from . import sensors
from .bench import PipelineConfig, StageError
from .mlp import MlpConfig, evaluate_regression, mlp_forward, mlp_train
from .svm import SvmParams, svm_predict, svm_train_multiclass

log = logging.getLogger("enose")

TABLE_CHOICES = ("binary-ethanol", "binary-methanol", "ternary")


def _pipeline_config(args) -> PipelineConfig:
    """Defaults <- config file <- command line flags."""
    kv: dict[str, object] = {}
    if getattr(args, "config", None):
        kv = configmod.typed_config(configmod.read_config(args.config))
    cfg = PipelineConfig()
    filter_kw = {}
    direct = {}
    for key, value in kv.items():
        if key in ("window_m", "baseline_degree"):
            filter_kw[key] = value
        else:
            direct[key] = value
    if filter_kw:
        direct["filter"] = dataclasses.replace(cfg.filter, **filter_kw)
    if getattr(args, "features", None):
        direct["features"] = args.features
    if getattr(args, "noise", None) is not None:
        direct["noise_sigma"] = args.noise
    return dataclasses.replace(cfg, **direct)


def cmd_simulate(args) -> int:
    table = bench.get_table(args.table)
    cfg = _pipeline_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.per_row is not None:
        sessions = sensors.generate_dataset(table, args.per_row, args.seed,
                                            specs=bench.sensor_array_for(cfg),
                                            sample_rate_hz=cfg.sample_rate_hz)
    else:
        sessions = bench.build_sessions(table, cfg, args.seed)
    for i, session in enumerate(sessions):
        acquisition.write_session(session, out / f"session_{i:04d}.csv")
    print(f"wrote {len(sessions)} sessions to {out}")
    return 0


def cmd_ingest(args) -> int:
    if args.infile == "-":
        lines = sys.stdin.read().splitlines()
    else:
        lines = Path(args.infile).read_text().splitlines()
    mixture = sensors.GasMixture(args.acetone, args.ethanol, args.methanol)
    session = acquisition.parse_stream(lines, label=args.label, mixture=mixture,
                                       sample_rate_hz=args.rate)
    acquisition.write_session(session, args.out)
    print(f"ingested {len(session.frames)} frames -> {args.out}")
    return 0


def cmd_preprocess(args) -> int:
    session = acquisition.read_session(args.infile)
    cfg = prep.FilterConfig(window_m=args.window, baseline_degree=args.degree)
    processed = prep.process_session(session, cfg)
    prep.write_processed(processed, args.out)
    print(f"processed {processed.n} samples -> {args.out}")
    return 0


def cmd_train_svm(args) -> int:
    x, y, _ = features.read_features_csv(args.infile)
    gamma = None if args.gamma == "auto" else float(args.gamma)
    params = SvmParams(c_penalty=args.c, kernel=args.kernel, gamma=gamma)
    model = svm_train_multiclass(x, y, params)
    modelio.save_model(model, args.model)
    print(f"trained {len(model.machines)} class pairs -> {args.model}")
    return 0


def cmd_classify(args) -> int:
    model = modelio.load_model(args.model)
    x, y, _ = features.read_features_csv(args.infile)
    pred = svm_predict(model, x)
    lines = []
    if np.any(y != 0):
        accuracy = float(np.mean(pred == y))
        lines.append(f"# accuracy = {accuracy!r}")
    lines.append("index,label,predicted")
    lines += [f"{i},{int(t)},{int(p)}" for i, (t, p) in enumerate(zip(y, pred))]
    Path(args.report).write_text("\n".join(lines) + "\n")
    print(f"classified {pred.size} samples -> {args.report}")
    return 0


def cmd_train_mlp(args) -> int:
    x, _, conc = features.read_features_csv(args.infile)
    hidden = tuple(int(h) for h in args.hidden.split(",") if h)
    cfg = MlpConfig(input_dim=x.shape[1], hidden_layers=hidden, lr=args.lr,
                    epochs=args.epochs, seed=args.seed)
    model = mlp_train(x, conc[:, 0], cfg)
    modelio.save_model(model, args.model)
    print(f"trained MLP ({len(model.loss_trace)} epochs, "
          f"final loss {model.loss_trace[-1]:.3e}) -> {args.model}")
    return 0


def cmd_predict(args) -> int:
    model = modelio.load_model(args.model)
    x, _, conc = features.read_features_csv(args.infile)
    preds = mlp_forward(model, x)
    metrics = evaluate_regression(model, x, conc[:, 0])
    r2 = "undefined" if metrics["r2"] is None else repr(metrics["r2"])
    lines = [
        f"# rmse_ppm = {metrics['rmse_ppm']!r}",
        f"# mae_ppm = {metrics['mae_ppm']!r}",
        f"# r2 = {r2}",
        "index,true_ppm,pred_ppm",
    ]
    lines += [f"{i},{float(t)!r},{float(p)!r}"
              for i, (t, p) in enumerate(zip(conc[:, 0], preds))]
    Path(args.report).write_text("\n".join(lines) + "\n")
    print(f"predicted {preds.size} samples -> {args.report}")
    return 0


def cmd_bench(args) -> int:
    t0 = time.perf_counter()
    table = bench.get_table(args.table)
    cfg = _pipeline_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    prepared = bench.prepare_features(table, cfg, args.seed)
    features.write_features_csv(out / "features_train.csv",
                                prepared.x[prepared.train_idx],
                                prepared.y[prepared.train_idx],
                                prepared.conc[prepared.train_idx])
    features.write_features_csv(out / "features_test.csv",
                                prepared.x[prepared.test_idx],
                                prepared.y[prepared.test_idx],
                                prepared.conc[prepared.test_idx])

    if args.regression:
        rep = bench.run_regression_experiment(table, cfg, args.seed, prepared=prepared)
        reportmod.emit_report(rep, "csv", out)
        r2 = "undefined" if rep.r2 is None else f"{rep.r2:.4f}"
        print(f"{table.id}: rmse={rep.rmse_ppm:.3f} ppm  mae={rep.mae_ppm:.3f} ppm  "
              f"r2={r2}  ({time.perf_counter() - t0:.1f}s)")
    else:
        rep = bench.run_experiment(table, cfg, args.seed, prepared=prepared)
        reportmod.emit_report(rep, "csv", out)
        reportmod.emit_report(rep, "svg", out)
        print(f"{table.id}: accuracy={rep.accuracy:.4f} on {rep.y_true.size} "
              f"test samples  ({time.perf_counter() - t0:.1f}s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="enose",
                                     description="gas sensor array toolkit")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log pipeline stages to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate labeled sessions for a table")
    p.add_argument("--table", required=True, choices=TABLE_CHOICES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--noise", type=float, default=None, help="override noise sigma")
    p.add_argument("--per-row", type=int, default=None,
                   help="sessions per mixture row (default: table split sizes)")
    p.add_argument("--config", default=None, help="flat key = value config file")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("ingest", help="parse a raw frame stream into a session CSV")
    p.add_argument("--in", dest="infile", required=True, help="file or - for stdin")
    p.add_argument("--out", required=True)
    p.add_argument("--label", type=int, default=0)
    p.add_argument("--rate", type=float, default=10.0)
    p.add_argument("--acetone", type=float, default=0.0)
    p.add_argument("--ethanol", type=float, default=0.0)
    p.add_argument("--methanol", type=float, default=0.0)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("preprocess", help="smooth and detrend a session CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--degree", type=int, default=2)
    p.set_defaults(fn=cmd_preprocess)

    p = sub.add_parser("train-svm", help="train a one-vs-one SVM on a features CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--c", type=float, default=10.0)
    p.add_argument("--kernel", choices=("linear", "rbf"), default="rbf")
    p.add_argument("--gamma", default="auto")
    p.add_argument("--model", required=True)
    p.set_defaults(fn=cmd_train_svm)

    p = sub.add_parser("classify", help="label a features CSV with a trained SVM")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("train-mlp", help="train a concentration regressor")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--hidden", default="16", help="comma-separated layer sizes")
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", required=True)
    p.set_defaults(fn=cmd_train_mlp)

    p = sub.add_parser("predict", help="predict acetone ppm with a trained MLP")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("bench", help="run a full experiment end to end")
    p.add_argument("--table", required=True, choices=TABLE_CHOICES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--features", choices=("pca", "kpca"), default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--regression", action="store_true",
                   help="run the MLP concentration experiment instead")
    p.add_argument("--config", default=None, help="flat key = value config file")
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.fn(args)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - tag CLI-level failures too
        print(f"error [stage={args.command}] {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
