"""Command-line entry point.

Each run writes one directory holding ``config-resolved.json``,
``results.csv`` and ``summary.json`` (plus ``histogram.csv`` for ``mc`` and
``weights.json`` for ``ann train``).  Exit codes: 0 success, 1 validation
error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import vtc as _vtc
from .ann import AnnModel, default_weights_path, load_iris, stratified_split, train_ann
from .config import RunConfig, available_scenarios, load_config, parse_quantity
from .errors import C3puError, ValidationError
from .experiments import crossbar_batch, fxp_compare, mc_crossbar, mc_vtc, random_input_sets, read_inputs_csv, vtc_sweep
from .netmap import compile_network, evaluate, infer
from .oracle import FXP_BASELINES
from .variability import histogram, sample_rngs

log = logging.getLogger("c3pu")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


class Run:
    """Output directory of one command; nothing is created until ``write``."""

    def __init__(self, out: Path, rc: RunConfig, command: str):
        self.out, self.rc, self.command = out, rc, command
        self.files: dict[str, str] = {}

    def csv(self, name: str, header, rows):
        lines = [header] + [[_fmt(v) for v in r] for r in rows]
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(lines)
        self.files[name] = buf.getvalue()

    def json(self, name: str, doc):
        self.files[name] = json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n"

    def write(self):
        self.json("config-resolved.json", {"command": self.command, **self.rc.resolved()})
        self.out.mkdir(parents=True, exist_ok=True)
        for name, text in sorted(self.files.items()):
            (self.out / name).write_text(text)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


# ---- commands -------------------------------------------------------------

def cmd_vtc_sweep(rc: RunConfig, args) -> tuple[dict, Run]:
    steps = args.steps if args.steps is not None else rc.section("sweep")["steps"]
    sw = vtc_sweep(rc.vtc, steps, rc.crossbar.clk_high)
    run = Run(args.out, rc, "vtc-sweep")
    run.csv("results.csv", ["v_in_V", "delay_s", "pulse_width_s"], zip(sw.v_in, sw.delay, sw.pulse_width))
    summary = {
        "steps": steps,
        "gain_s_per_V": sw.gain,
        "analytic_gain_s_per_V": _vtc.conversion_gain(rc.vtc),
        "linear_fit_mse_s2": sw.linear_mse,
        "delay_min_s": float(sw.delay[0]),
        "delay_max_s": float(sw.delay[-1]),
    }
    run.json("summary.json", summary)
    return summary, run


def cmd_mc(rc: RunConfig, args) -> tuple[dict, Run]:
    mc = rc.section("mc")
    target = args.target or mc["target"]
    n = args.samples if args.samples is not None else mc["samples"]
    v_in = rc.quantity("mc", "v_in")
    run = Run(args.out, rc, "mc")
    if target == "vtc":
        stats = mc_vtc(rc.vtc, mc["stages"], n, rc.mismatch, v_in)
        labels = [f"stages={s}" for s in mc["stages"]]
    else:
        stats = mc_crossbar(rc.crossbar, rc.vtc, n, rc.mismatch, v_in)
        labels = [f"column={j}" for j in range(rc.crossbar.cols)]
    run.csv(
        "results.csv",
        ["group", "mean", "std", "variation_pct", "n_samples"],
        [(lab, s.mean, s.std, s.variation_pct, s.n_samples) for lab, s in zip(labels, stats)],
    )
    hist_rows = []
    for lab, s in zip(labels, stats):
        edges, counts = histogram(s.samples, mc["bins"])
        hist_rows += [(lab, edges[k], edges[k + 1], counts[k]) for k in range(counts.size)]
    run.csv("histogram.csv", ["group", "bin_lo", "bin_hi", "count"], hist_rows)
    summary = {
        "target": target,
        "n_samples": n,
        "seed": rc.seed,
        "v_in_V": v_in,
        "variation_pct": {lab: s.variation_pct for lab, s in zip(labels, stats)},
    }
    run.json("summary.json", summary)
    return summary, run


def cmd_crossbar(rc: RunConfig, args) -> tuple[dict, Run]:
    cfg = rc.crossbar
    if args.inputs:
        x = read_inputs_csv(args.inputs, cfg.rows)
    else:
        x = random_input_sets(rc.seed, rc.samples, cfg.rows)
    b = crossbar_batch(x, cfg, rc.vtc, rc.mismatch)
    run = Run(args.out, rc, "crossbar")
    c = range(cfg.cols)
    header = (
        [f"v_in{i + 1}" for i in range(cfg.rows)]
        + [f"V{j + 1}_volts" for j in c]
        + [f"out{j + 1}" for j in c]
        + [f"expected{j + 1}" for j in c]
        + [f"error{j + 1}_pct" for j in c]
    )
    rows = [
        list(x[k]) + list(b.voltages[k]) + list(b.observed[k]) + list(b.expected[k]) + list(b.errors.per_column[k])
        for k in range(x.shape[0])
    ]
    run.csv("results.csv", header, rows)
    summary = {
        "input_sets": int(x.shape[0]),
        "average_error_pct": b.errors.average,
        "column_error_pct": b.errors.column_average,
        "mse": b.errors.mse,
        "energy": b.energy,
        "mismatch": {
            "vtc_delay_rel_sigma": rc.mismatch.vtc_delay_rel_sigma,
            "xeq_rel_sigma": rc.mismatch.xeq_rel_sigma,
            "gm_rel_sigma": rc.mismatch.gm_rel_sigma,
        },
    }
    run.json("summary.json", summary)
    return summary, run


def _ann_inputs(rc: RunConfig):
    a = rc.section("ann")
    data = load_iris(a["dataset"])
    return a, data


def _load_model(a) -> AnnModel:
    return AnnModel.load(a["weights"] or default_weights_path())


def _compile(rc: RunConfig, a, model: AnnModel, data):
    train_idx, _ = stratified_split(data.labels, model.meta.get("split_seed", a["split_seed"]))
    return compile_network(
        model,
        rc.vtc,
        pulse_scale=a["pulse_scale"],
        t_min=parse_quantity(a["t_min"], "s", "ann.t_min"),
        calibration_inputs=model.normalize(data.features[train_idx]),
    )


def cmd_ann_train(rc: RunConfig, args) -> tuple[dict, Run]:
    a, data = _ann_inputs(rc)
    train_seed = rc.seed if args.seed is not None else a["train_seed"]
    model = train_ann(
        data,
        split_seed=a["split_seed"],
        train_seed=train_seed,
        epochs=a["epochs"],
        lr=a["learning_rate"],
        weight_decay=a["weight_decay"],
    )
    run = Run(args.out, rc, "ann train")
    run.json("weights.json", model.to_json())
    run.csv(
        "results.csv",
        ["split", "accuracy"],
        [("train", model.meta["train_accuracy"]), ("test", model.meta["test_accuracy"])],
    )
    summary = dict(model.meta)
    run.json("summary.json", summary)
    return summary, run


def cmd_ann_infer(rc: RunConfig, args) -> tuple[dict, Run]:
    a, data = _ann_inputs(rc)
    model = _load_model(a)
    try:
        feats = np.array([float(s) for s in args.features.split(",")])
    except ValueError:
        raise ValidationError(f"--features must be 4 comma-separated numbers (cm), got {args.features!r}") from None
    if feats.size != 4:
        raise ValidationError(f"--features needs 4 values, got {feats.size}")
    net = _compile(rc, a, model, data)
    noise = None if rc.mismatch.is_null else rc.mismatch
    rng = sample_rngs(rc.seed, 1)[0] if noise else None
    tr = infer(model.normalize(feats), net, noise, rng, a["readout_mismatch"], a["calibration"])
    run = Run(args.out, rc, "ann infer")
    names = data.class_names
    run.csv(
        "results.csv",
        ["class", "logit", "probability"],
        [(names[k], tr.logits[k], tr.probabilities[k]) for k in range(len(names))],
    )
    summary = {
        "features_cm": feats,
        "predicted": names[tr.label],
        "ideal_predicted": names[int(np.argmax(model.logits(model.normalize(feats))))],
        "trace": tr.as_dict(),
    }
    run.json("summary.json", summary)
    return summary, run


def cmd_ann_evaluate(rc: RunConfig, args) -> tuple[dict, Run]:
    a, data = _ann_inputs(rc)
    model = _load_model(a)
    _, test_idx = stratified_split(data.labels, model.meta.get("split_seed", a["split_seed"]))
    idx = np.arange(data.labels.size) if args.split == "all" else test_idx
    net = _compile(rc, a, model, data)
    v = model.normalize(data.features[idx])
    labels = data.labels[idx]
    noise = None if rc.mismatch.is_null else rc.mismatch
    res = evaluate(v, labels, net, noise, args.trace, a["readout_mismatch"], a["calibration"])
    ideal = np.argmax(model.logits(v), axis=-1)
    run = Run(args.out, rc, "ann evaluate")
    run.csv(
        "results.csv",
        ["sample", "label", "ideal_prediction", "hardware_prediction"],
        [(int(i), int(t), int(p0), int(p1)) for i, t, p0, p1 in zip(idx, labels, ideal, res.predictions)],
    )
    summary = {
        "split": args.split,
        "n_samples": int(idx.size),
        "accuracy": res.accuracy,
        "ideal_accuracy": float(np.mean(ideal == labels)),
        "agreement_with_ideal": float(np.mean(ideal == res.predictions)),
        "confusion": res.confusion,
        "class_names": list(data.class_names),
        "calibration": a["calibration"],
        "network": net.describe(),
    }
    if args.trace:
        run.json("traces.json", [dict(sample=int(i), **t.as_dict()) for i, t in zip(idx, res.traces)])
    run.json("summary.json", summary)
    return summary, run


def cmd_fxp_compare(rc: RunConfig, args) -> tuple[dict, Run]:
    rows = fxp_compare(rc.fxp_formats, rc.seed, rc.samples)
    run = Run(args.out, rc, "fxp-compare")
    ref = lambda r: FXP_BASELINES.get(r.label, {}).get("error_pct", "")  # noqa: E731
    run.csv(
        "results.csv",
        ["format", "average_error_pct", "mse", "reported_error_pct"],
        [(r.label, r.average_pct, r.mse, ref(r)) for r in rows],
    )
    summary = {"rounding": rc.section("fxp")["rounding"], "average_error_pct": {r.label: r.average_pct for r in rows}}
    run.json("summary.json", summary)
    return summary, run


# ---- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file layered over the scenario")
    common.add_argument("--scenario", help="built-in scenario name (default: paper-noise for mc, else nominal)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--samples", type=int, help="override the sample count")
    common.add_argument("--noiseless", action="store_true", help="zero every mismatch sigma")
    common.add_argument("--out", type=Path, help="output directory (default: runs/<command>)")

    p = _Parser(prog="c3pu", description="C3PU analog in-memory MAC simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("vtc-sweep", parents=[common], help="delay sweep over the input range")
    s.add_argument("--steps", type=int)
    s.set_defaults(func=cmd_vtc_sweep)

    s = sub.add_parser("mc", parents=[common], help="Monte Carlo mismatch statistics")
    s.add_argument("--target", choices=["vtc", "crossbar"])
    s.set_defaults(func=cmd_mc)

    s = sub.add_parser("crossbar", parents=[common], help="run input sets through the array")
    s.add_argument("--inputs", type=Path, help="CSV of input sets (default: seeded random sets)")
    s.set_defaults(func=cmd_crossbar)

    s = sub.add_parser("ann", help="iris classifier")
    ann = s.add_subparsers(dest="ann_command", required=True, parser_class=_Parser)
    t = ann.add_parser("train", parents=[common])
    t.set_defaults(func=cmd_ann_train)
    t = ann.add_parser("infer", parents=[common])
    t.add_argument("--features", required=True, help="four measurements in cm, comma-separated")
    t.set_defaults(func=cmd_ann_infer)
    t = ann.add_parser("evaluate", parents=[common])
    t.add_argument("--split", choices=["test", "all"], default="test")
    t.add_argument("--trace", action="store_true", help="also write per-sample traces")
    t.set_defaults(func=cmd_ann_evaluate)

    s = sub.add_parser("fxp-compare", parents=[common], help="fixed-point baseline error")
    s.set_defaults(func=cmd_fxp_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    name = args.command if args.command != "ann" else f"ann-{args.ann_command}"
    if args.out is None:
        args.out = Path("runs") / name
    if args.scenario is None:
        args.scenario = "paper-noise" if args.command == "mc" else "nominal"
    if args.samples is not None and args.samples < 2 and args.command == "mc":
        print("error: Monte Carlo needs --samples >= 2", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        rc = load_config(args.config, args.scenario, args.seed, args.samples, args.noiseless)
        summary, run = args.func(rc, args)
        run.write()
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.scenario not in available_scenarios():
            print(f"available scenarios: {', '.join(available_scenarios())}", file=sys.stderr)
        return EXIT_VALIDATION
    except (C3puError, OSError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps(_plain({"command": name, "out": str(args.out), **_headline(summary)}), sort_keys=True))
    return EXIT_OK


def _headline(summary: dict) -> dict:
    keep = ("gain_s_per_V", "linear_fit_mse_s2", "variation_pct", "average_error_pct", "accuracy",
            "test_accuracy", "predicted", "ideal_accuracy")
    return {k: summary[k] for k in keep if k in summary}


if __name__ == "__main__":
    sys.exit(main())
