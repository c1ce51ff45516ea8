"""Batch command-line front end.

Subcommands: ingest (PSV directory -> window archive), synthesize
(synthetic archive), train (checkpoint + history), sweep / ablate
(CSV + SVG reports), gradcheck (gradient-fidelity report), predict
(per-patient classes and probabilities).

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
Every command is deterministic given its flags, config file, and seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .archive import read_window_archive, write_window_archive
from .checkpoint import load_checkpoint, save_checkpoint
from .configfile import (build_model_config, build_sweep_settings,
                         load_config_file, parse_slots, parse_variants)
from .data import (apply_label_rules, build_window_dataset, default_rules,
                   parse_psv, parse_rule_file, windows_to_arrays, WindowPreprocessor)
from .diagnostics import GRADCHECK_TOLERANCE, gradcheck_suite, toy_config
from .network import ABLATIONS, ConfigError
from .report import write_sweep_reports
from .sweep import fit_variant, sweep
from .synth import SyntheticSpec, generate_synthetic_records
from .tensor import NumericsError
from .training import TrainingDiverged

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_values(config_path) -> dict:
    return load_config_file(config_path) if config_path else {}


# -- ingest -----------------------------------------------------------------


def cmd_ingest(args) -> int:
    data_dir = Path(args.data_dir)
    psv_files = sorted(data_dir.glob("*.psv"))
    if not psv_files:
        return _fail(f"no PSV files in {data_dir}", EXIT_USAGE)

    if args.rules:
        rules = parse_rule_file(Path(args.rules).read_text(encoding="utf-8"))
    else:
        rules = default_rules(args.scheme)

    records, labels = [], {}
    failures = 0
    for path in psv_files:
        try:
            record = parse_psv(path.read_text(encoding="utf-8"), patient_id=path.stem)
            labels[record.patient_id] = apply_label_rules(record, rules)
            records.append(record)
        except (ValueError, OSError) as exc:
            failures += 1
            print(f"error: {path.name}: {exc}", file=sys.stderr)
    if not records:
        return _fail("all input files failed to parse", EXIT_USAGE)

    dataset, report = build_window_dataset(records, labels, n_classes=rules.n_classes)
    write_window_archive(args.out, dataset)
    report_path = Path(args.report) if args.report else Path(str(args.out) + ".report.txt")
    text = report.to_text()
    report_path.write_text(text, encoding="utf-8")
    print(text, end="")
    if failures:
        print(f"warning: {failures} file(s) skipped due to errors", file=sys.stderr)
    return EXIT_OK


# -- synthesize ----------------------------------------------------------------


def cmd_synthesize(args) -> int:
    spec = SyntheticSpec(
        n_per_class=args.per_class, n_classes=args.classes, d_in=args.features,
        hours=args.hours, motif_strength=args.motif_strength, noise_sd=args.noise_sd)
    records, labels = generate_synthetic_records(spec, seed=args.seed)
    slots = range(2, min(23, spec.hours) + 1)
    dataset, report = build_window_dataset(records, labels, slots=slots,
                                           n_classes=spec.n_classes)
    write_window_archive(args.out, dataset)
    print(report.to_text(), end="")
    return EXIT_OK


# -- train -------------------------------------------------------------------


def _history_csv(history) -> str:
    lines = ["epoch,l_mse,l_reg,l_pred,total,val_accuracy"]
    for i, log in enumerate(history.epochs):
        val = "" if log.val_accuracy is None else f"{log.val_accuracy:.6f}"
        lines.append(f"{i},{log.loss.l_mse:.10g},{log.loss.l_reg:.10g},"
                     f"{log.loss.l_pred:.10g},{log.loss.total:.10g},{val}")
    return "\n".join(lines) + "\n"


def cmd_train(args) -> int:
    values = _load_values(args.config)
    dataset = read_window_archive(args.windows)
    windows = dataset.windows(args.slot)
    x_raw, y, _ = windows_to_arrays(windows)

    if args.seed is not None:
        values["seed"] = args.seed
    settings = build_sweep_settings(values)
    config = build_model_config(
        values, d_in=x_raw.shape[1], seq_len=args.slot,
        n_classes=dataset.n_classes, ablation=args.variant)

    preprocessor = WindowPreprocessor().fit(x_raw)
    x = preprocessor.transform(x_raw)
    network, head, history = fit_variant(
        x, y, args.variant, config, config.seed, dataset.n_classes, settings)

    save_checkpoint(args.out_checkpoint, config, dataset.columns,
                    preprocessor=preprocessor, network=network, head=head)
    history_path = Path(args.history) if args.history else Path(str(args.out_checkpoint) + ".history.csv")
    if history is not None:
        history_path.write_text(_history_csv(history), encoding="utf-8")
    else:
        history_path.write_text("epoch,l_mse,l_reg,l_pred,total,val_accuracy\n", encoding="utf-8")
    print(f"checkpoint written to {args.out_checkpoint}")
    return EXIT_OK


# -- sweep / ablate -----------------------------------------------------------


def _run_sweep(args, slots, variants) -> int:
    values = _load_values(args.config)
    dataset = read_window_archive(args.windows)
    if args.seed is not None:
        values["base_seed"] = args.seed
    env_workers = os.environ.get("MEET_TS_WORKERS")
    workers = args.workers if args.workers is not None else (
        int(env_workers) if env_workers else None)
    settings = build_sweep_settings(
        values, slots=slots, variants=variants, runs=args.runs, workers=workers)
    for slot in settings.slots:
        if slot not in dataset.by_slot or not dataset.by_slot[slot]:
            return _fail(f"archive has no windows for slot {slot}", EXIT_USAGE)
    config = build_model_config(
        values, d_in=len(dataset.columns), seq_len=max(settings.slots),
        n_classes=dataset.n_classes)

    cells = sweep(dataset, config, settings)
    paths = write_sweep_reports(cells, args.out_dir, settings.runs)
    for cell in cells:
        if cell.error:
            print(f"warning: slot {cell.slot_hours} variant {cell.variant}: {cell.error}",
                  file=sys.stderr)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    slots = parse_slots(args.slots) if args.slots else None
    variants = parse_variants(args.variants) if args.variants else None
    return _run_sweep(args, slots, variants)


def cmd_ablate(args) -> int:
    return _run_sweep(args, [args.slot], list(ABLATIONS))


# -- gradcheck ------------------------------------------------------------------


def cmd_gradcheck(args) -> int:
    if args.config:
        values = _load_values(args.config)
        values.setdefault("d_in", 3)
        values.setdefault("seq_len", 8)
        config = build_model_config(values)
    else:
        config = toy_config()
    results = gradcheck_suite(config=config, corrupt=args.corrupt)
    failed = []
    for name, err in results:
        status = "PASS" if err < GRADCHECK_TOLERANCE else "FAIL"
        print(f"{name:28s} max_rel_err={err:.3e}  {status}")
        if status == "FAIL":
            failed.append(name)
    if failed:
        print(f"gradient check failed for: {', '.join(failed)}", file=sys.stderr)
        return 1
    return EXIT_OK


# -- predict --------------------------------------------------------------------


def cmd_predict(args) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    if checkpoint.head is None:
        return _fail("checkpoint has no prediction head", EXIT_USAGE)
    if checkpoint.preprocessor is None:
        return _fail("checkpoint has no preprocessing statistics", EXIT_USAGE)

    psv_path = Path(args.psv)
    files = sorted(psv_path.glob("*.psv")) if psv_path.is_dir() else [psv_path]
    if not files:
        return _fail(f"no PSV files at {psv_path}", EXIT_USAGE)

    emitted = 0
    for path in files:
        try:
            record = parse_psv(path.read_text(encoding="utf-8"), patient_id=path.stem)
        except (ValueError, OSError) as exc:
            print(f"warning: {path.name}: {exc}", file=sys.stderr)
            continue
        missing = [c for c in checkpoint.columns if c not in record.columns]
        if missing:
            print(f"warning: {path.name}: missing columns {missing}", file=sys.stderr)
            continue
        if record.hours < args.slot:
            print(f"warning: {path.name}: record has {record.hours}h, shorter than slot {args.slot}",
                  file=sys.stderr)
            continue
        # align column order with the training-time layout
        order = [record.columns.index(c) for c in checkpoint.columns]
        aligned = record.values[:, order]
        window = aligned[:args.slot].T[None, :, :]
        x = checkpoint.preprocessor.transform(window)
        if checkpoint.network is not None:
            features = checkpoint.network.embed(x)
        else:
            features = x.reshape(1, -1)
        probs = checkpoint.head.predict_proba(features)[0]
        label = int(np.argmax(probs))
        print(f"{record.patient_id},{label}," + ",".join(f"{p:.6f}" for p in probs))
        emitted += 1
    if emitted == 0:
        return _fail("no predictions could be emitted", EXIT_USAGE)
    return EXIT_OK


# -- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="earlysep",
        description="Early sepsis risk classification from short ICU monitoring windows.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse PSV files, label, window, and archive")
    p.add_argument("--data-dir", required=True, help="directory of per-patient .psv files")
    p.add_argument("--rules", help="label rule file (overrides --scheme)")
    p.add_argument("--scheme", default="qsofa", choices=["qsofa", "sofa"],
                   help="built-in labeling scheme when no rule file is given")
    p.add_argument("--out", required=True, help="output window archive path")
    p.add_argument("--report", help="ingest report path (default: <out>.report.txt)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synthesize", help="generate a synthetic window archive")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=30)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--features", type=int, default=4)
    p.add_argument("--hours", type=int, default=12)
    p.add_argument("--motif-strength", type=float, default=1.0)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("train", help="train one variant at one slot, write a checkpoint")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--windows", required=True, help="window archive from ingest/synthesize")
    p.add_argument("--slot", type=int, required=True)
    p.add_argument("--variant", default="full", choices=list(ABLATIONS))
    p.add_argument("--out-checkpoint", required=True)
    p.add_argument("--history", help="history CSV path (default: <checkpoint>.history.csv)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="slots x variants x seeded runs, CSV + SVG reports")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--windows", required=True)
    p.add_argument("--slots", help="e.g. '2-23' or '2,5,8'")
    p.add_argument("--variants", help="comma list from: " + ",".join(ABLATIONS))
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None,
                   help="parallel cells (default: MEET_TS_WORKERS or 1)")
    p.add_argument("--seed", type=int, help="override the config base seed")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="all four variants at one slot")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--windows", required=True)
    p.add_argument("--slot", type=int, required=True)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference check of every op")
    p.add_argument("--config", help="sizes the composed-model check")
    p.add_argument("--corrupt", help="inject a fault into the named op (testing aid)")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("predict", help="classify patients from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--psv", required=True, help="a .psv file or a directory of them")
    p.add_argument("--slot", type=int, required=True)
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_USAGE)
    except (TrainingDiverged, NumericsError) as exc:
        return _fail(str(exc), EXIT_NUMERIC)
    except (ValueError, OSError) as exc:
        return _fail(str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
