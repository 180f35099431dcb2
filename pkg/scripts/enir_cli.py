"""
ENIR command line - fit, apply, evaluate and benchmark calibration models.

Usage:
    python -m scripts.enir_cli fit TRAIN_CSV --method enir --out model.json [--squash]
    python -m scripts.enir_cli apply MODEL INPUT_CSV [--out calibrated.csv]
    python -m scripts.enir_cli eval PREDS_CSV [--k 10] [--reliability-out bins.csv]
    python -m scripts.enir_cli cv CSV [--method enir] [--folds 10] [--repeats 1] [--seed 0]
    python -m scripts.enir_cli simulate --out test.csv [--scorer linear] [--n 2000] [--noise 0.05]
    python -m scripts.enir_cli compare RESULTS_CSV --control enir [--higher-is-better]
    python -m scripts.enir_cli reproduce [--out results.json]

    Global options (before the command):
        --config: Alternative config.yaml
        --log-level: DEBUG, INFO, WARNING or ERROR
        --log-file: Also log to logs/<name>_<date>.log
"""
import os
import csv
import sys
import json
import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

# Add parent directory to the Python path for imports
project_root = Path(__file__).parent.parent
if str(project_root) not in sys.path:
    sys.path.append(str(project_root))

from calibration.base_calibrator import configure_logging, load_settings
from calibration.benchmark import RankMatrix, cross_validate, friedman_holm, summarize
from calibration.calibrators import PERSISTABLE_METHODS, build_calibrator
from calibration.core import load_csv, read_csv_rows, squash_scores
from calibration.errors import CalibrationError, InvalidParameterError, ParseError
from calibration.experiment import SCORERS, run_experiment, simulate_scores
from calibration.metrics import evaluate
from calibration.model_store import default_model_path, load_calibrator, save_calibrator

logger = logging.getLogger("ENIR.cli")

METHOD_CHOICES = list(PERSISTABLE_METHODS)


def _print_json(document: Dict[str, Any]) -> None:
    print(json.dumps(document, indent=2))


def _write_rows(path: Optional[str], header: List[str], rows) -> None:
    """Write CSV rows to a file, or to standard output when path is None."""
    if path:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        handle = open(path, 'w', encoding='utf-8', newline='')
    else:
        handle = sys.stdout
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if path:
            handle.close()


def _method_options(method: str, bins: Optional[int], settings: Dict[str, Any]) -> Dict[str, Any]:
    if method == "hist":
        return {"bins": bins if bins is not None else settings["calibration"]["histogram_bins"]}
    if bins is not None:
        logger.warning(f"--bins only applies to hist; ignored for {method}")
    return {}


def cmd_fit(args, settings: Dict[str, Any]) -> Dict[str, Any]:
    """Fit a calibrator on a training CSV and save it as a model file."""
    dataset = load_csv(args.train_csv, squash=args.squash)
    options = _method_options(args.method, args.bins, settings)
    calibrator = build_calibrator(args.method, config_path=args.config, **options)
    result = calibrator.run(dataset)
    if not result["success"]:
        return {"success": False, "error": result["error"]}
    out = args.out or default_model_path(settings, args.method)
    save_calibrator(calibrator, out, squash=args.squash)
    summary = calibrator.summary()
    _print_json({**summary, "n": dataset.n, "out": out})
    return {"success": True, **summary}


def cmd_apply(args, settings: Dict[str, Any]) -> Dict[str, Any]:
    """Calibrate the scores of a CSV with a saved model, keeping input order."""
    calibrator, model_file = load_calibrator(args.model, config_path=args.config)
    scores, _ = read_csv_rows(args.input_csv, require_labels=False)
    inputs = squash_scores(scores) if model_file.squash else scores
    calibrated = calibrator.predict(inputs)
    _write_rows(args.out, ["score", "calibrated"],
                ([repr(float(s)), repr(float(p))] for s, p in zip(scores, calibrated)))
    if args.out:
        logger.info(f"Wrote {len(scores)} calibrated scores to {args.out}")
    return {"success": True, "rows": int(len(scores))}


def cmd_eval(args, settings: Dict[str, Any]) -> Dict[str, Any]:
    """Print the metrics report and the reliability bins of a predictions CSV."""
    preds, labels = read_csv_rows(args.preds_csv)
    k = args.k if args.k is not None else settings["evaluation"]["reliability_bins"]
    threshold = args.threshold if args.threshold is not None else settings["evaluation"]["threshold"]
    report = evaluate(preds, labels, k=k, threshold=threshold)
    _print_json(report.to_dict(include_bins=False))
    if args.reliability_out:
        with open(args.reliability_out, 'w', encoding='utf-8', newline='') as f:
            f.write(report.reliability_csv())
        logger.info(f"Reliability bins written to {args.reliability_out}")
    else:
        sys.stdout.write(report.reliability_csv())
    return {"success": True, **report.to_dict(include_bins=False)}


def cmd_cv(args, settings: Dict[str, Any]) -> Dict[str, Any]:
    """Cross-validate one method and print per-fold and summary metrics."""
    ev = settings["evaluation"]
    dataset = load_csv(args.csv, squash=args.squash)
    options = _method_options(args.method, args.bins, settings)
    results = cross_validate(
        dataset,
        folds=args.folds if args.folds is not None else ev["folds"],
        repeats=args.repeats if args.repeats is not None else ev["repeats"],
        method=args.method,
        seed=args.seed if args.seed is not None else ev["seed"],
        n_jobs=args.n_jobs,
        k=ev["reliability_bins"],
        threshold=ev["threshold"],
        config_path=args.config,
        **options,
    )
    summary = summarize(results)
    _print_json({"method": args.method, "folds": [r.to_dict() for r in results], "summary": summary})
    return {"success": True, "summary": summary}


def cmd_simulate(args, settings: Dict[str, Any]) -> Dict[str, Any]:
    """Generate circular data, train a scorer and write train and test score CSVs."""
    sim = settings["simulation"]
    split = simulate_scores(
        n=args.n if args.n is not None else sim["n"],
        noise=args.noise if args.noise is not None else sim["noise"],
        seed=args.seed if args.seed is not None else sim["seed"],
        scorer=args.scorer,
        epochs=args.epochs if args.epochs is not None else sim["epochs"],
        learning_rate=args.learning_rate if args.learning_rate is not None else sim["learning_rate"],
        train_fraction=sim["train_fraction"],
    )
    train_out = args.train_out or _train_path(args.out)
    _write_rows(args.out, ["score", "label"],
                ([repr(float(s)), int(z)] for s, z in zip(split.test_scores, split.test_labels)))
    _write_rows(train_out, ["score", "label"],
                ([repr(float(s)), int(z)] for s, z in zip(split.train_scores, split.train_labels)))

    test_report = evaluate(split.test_scores, split.test_labels)
    document = {
        "scorer": args.scorer,
        "train": train_out,
        "test": args.out,
        "n_train": int(split.train_labels.size),
        "n_test": int(split.test_labels.size),
        "test_auc": test_report.auc,
        "model": split.scorer.to_dict(),
    }
    _print_json(document)
    return {"success": True, **document}


def _train_path(out: str) -> str:
    stem, ext = os.path.splitext(out)
    return f"{stem}_train{ext or '.csv'}"


def _read_results_table(path: str):
    """Read `dataset,<method>,<method>...` rows of per-dataset results."""
    with open(path, 'r', encoding='utf-8', newline='') as f:
        rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    if len(rows) < 2:
        raise ParseError(f"{path} needs a header and at least one result row")
    methods = [name.strip() for name in rows[0][1:]]
    if len(methods) < 2:
        raise ParseError("the header must name at least two methods", 1)
    datasets, values = [], []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(methods) + 1:
            raise ParseError(f"expected {len(methods) + 1} columns, found {len(row)}", line_no)
        try:
            values.append([float(cell) for cell in row[1:]])
        except ValueError as e:
            raise ParseError(f"non-numeric result: {e}", line_no) from e
        datasets.append(row[0].strip())
    return datasets, methods, np.array(values)


def cmd_compare(args, settings: Dict[str, Any]) -> Dict[str, Any]:
    """Rank methods per dataset and test them against a control method."""
    datasets, methods, values = _read_results_table(args.results_csv)
    if args.control not in methods:
        raise InvalidParameterError(f"control {args.control!r} is not one of {', '.join(methods)}")
    ranks = RankMatrix.from_scores(values, higher_is_better=args.higher_is_better,
                                   methods=methods, datasets=datasets)
    alpha = args.alpha if args.alpha is not None else settings["evaluation"]["alpha"]
    result = friedman_holm(ranks, alpha=alpha, control=methods.index(args.control))
    document = result.to_dict()
    document["verdicts"] = {name: verdict.value for name, verdict in result.verdicts().items()}
    _print_json(document)
    return {"success": True, **document}


def cmd_reproduce(args, settings: Dict[str, Any]) -> Dict[str, Any]:
    """Run the simulated-data experiment for both scorers."""
    if args.seed is not None:
        settings["simulation"]["seed"] = args.seed
        settings["evaluation"]["seed"] = args.seed
    results = run_experiment(settings, scorers=args.scorers or SCORERS, n_jobs=args.n_jobs)
    text = json.dumps(results, indent=2)
    if args.out:
        directory = os.path.dirname(os.path.abspath(args.out))
        os.makedirs(directory, exist_ok=True)
        with open(args.out, 'w', encoding='utf-8') as f:
            f.write(text + "\n")
        logger.info(f"Experiment results written to {args.out}")
    else:
        print(text)
    return {"success": True, "out": args.out}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="enir", description="ENIR probability calibration toolkit")
    parser.add_argument("--config", type=str, help="Path to config.yaml")
    parser.add_argument("--log-level", type=str, help="Logging level (default from config)")
    parser.add_argument("--log-file", type=str, help="Also log to logs/<name>_<date>.log")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="Fit a calibration model on a score,label CSV")
    fit.add_argument("train_csv", help="Training CSV with score,label rows")
    fit.add_argument("--method", choices=METHOD_CHOICES, default="enir")
    fit.add_argument("--bins", type=int, help="Number of bins (hist only)")
    fit.add_argument("--squash", action="store_true", help="Apply the logistic function to raw scores")
    fit.add_argument("--out", help="Model file to write (default: <models_dir>/<method>.json)")
    fit.set_defaults(handler=cmd_fit)

    apply = sub.add_parser("apply", help="Calibrate scores with a saved model")
    apply.add_argument("model", help="Model file")
    apply.add_argument("input_csv", help="CSV of scores (labels optional)")
    apply.add_argument("--out", help="Output CSV (default: standard output)")
    apply.set_defaults(handler=cmd_apply)

    ev = sub.add_parser("eval", help="Evaluate predictions against labels")
    ev.add_argument("preds_csv", help="CSV with prediction,label rows")
    ev.add_argument("--k", type=int, help="Number of reliability bins")
    ev.add_argument("--threshold", type=float, help="Accuracy threshold")
    ev.add_argument("--reliability-out", help="Write reliability bins here instead of standard output")
    ev.set_defaults(handler=cmd_eval)

    cv = sub.add_parser("cv", help="Stratified cross-validation of one method")
    cv.add_argument("csv", help="CSV with score,label rows")
    cv.add_argument("--method", choices=METHOD_CHOICES + ["none"], default="enir")
    cv.add_argument("--bins", type=int, help="Number of bins (hist only)")
    cv.add_argument("--folds", type=int)
    cv.add_argument("--repeats", type=int)
    cv.add_argument("--seed", type=int)
    cv.add_argument("--squash", action="store_true")
    cv.add_argument("--n-jobs", type=int, default=1, help="Worker threads for folds")
    cv.set_defaults(handler=cmd_cv)

    sim = sub.add_parser("simulate", help="Generate circular data and score it")
    sim.add_argument("--n", type=int)
    sim.add_argument("--noise", type=float)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--scorer", choices=SCORERS, default="linear")
    sim.add_argument("--epochs", type=int)
    sim.add_argument("--learning-rate", type=float)
    sim.add_argument("--out", required=True, help="Test-split CSV to write")
    sim.add_argument("--train-out", help="Train-split CSV (default: <out>_train.csv)")
    sim.set_defaults(handler=cmd_simulate)

    cmp_ = sub.add_parser("compare", help="Friedman + Holm over per-dataset results")
    cmp_.add_argument("results_csv", help="CSV: dataset name then one column per method")
    cmp_.add_argument("--control", required=True, help="Control method column")
    cmp_.add_argument("--higher-is-better", action="store_true", help="Rank larger values first")
    cmp_.add_argument("--alpha", type=float)
    cmp_.set_defaults(handler=cmd_compare)

    rep = sub.add_parser("reproduce", help="Run the simulated-data experiment")
    rep.add_argument("--out", help="Result JSON (default: standard output)")
    rep.add_argument("--seed", type=int)
    rep.add_argument("--scorers", nargs="+", choices=SCORERS)
    rep.add_argument("--n-jobs", type=int, default=1)
    rep.set_defaults(handler=cmd_reproduce)
    return parser


def run_command(args, settings: Dict[str, Any]) -> Dict[str, Any]:
    """
    Run the selected command, turning calibration and I/O errors into a result.

    Returns:
        Dict with success flag, and error message on failure
    """
    try:
        return args.handler(args, settings)
    except (CalibrationError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return {"success": False, "error": str(e)}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = load_settings(args.config)
    log_settings = settings["logging"]
    configure_logging(args.log_level or log_settings["level"], args.log_file,
                      logs_dir=log_settings["logs_dir"], fmt=log_settings["format"])

    result = run_command(args, settings)
    if not result["success"]:
        print(f"error: {result['error']}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
