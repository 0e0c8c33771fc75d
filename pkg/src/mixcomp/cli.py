"""Command-line front end: generate -> track -> decompose -> detect / eval.

Exit codes: 0 ok, 2 usage error, 3 data error, 4 numerical failure.

Output CSV layouts (floats use 9 significant digits):

* track:     t,K,MC,expMC,cost,flagged
* decompose: t,K,mc_total,mc_interaction,W_1..W_L,mc_component_1..L,contribution_1..L,residual
* centers:   l,c1..cd
* detect:    alert_t
* eval:      mode,delay,far,first_alert,n_alerts
* experiment (summary): dataset,direction,delay_mc,delay_k,delay_diff,far_mc,far_k,far_diff

Every command writes ``<output>.manifest.json``; ``mixcomp replay`` re-runs it.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .data import GENERATORS, TRANSACTION, StreamSpec, TimedStream, ingest_csv, read_stream_csv, write_stream_csv
from .decomp import FuzzyCMeansConfig, track_decomposition
from .detect import AlertConfig, AlertMode, detect_changes, evaluate
from .em import PARAM_COUNTS, Criterion, FitConfig
from .errors import DataFormatError, FitFailureError, InvalidInputError, NumericalDomainError
from .experiment import drop_flagged, run_trial, summarize
from .plots import line_chart
from .sdms import SdmsConfig, track_mc

log = logging.getLogger("mixcomp")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be a positive integer")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be > 0")
    return value


def _fuzziness(text):
    value = float(text)
    if not value > 1:
        raise argparse.ArgumentTypeError(f"fuzziness m={text} must be > 1")
    return value


def _beta(text):
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"beta={text} must lie in (0, 1)")
    return value


CRITERIA = [c.value for c in Criterion]


def _add_sdms_args(p, seed_required=False):
    p.add_argument("--criterion", choices=CRITERIA, default="BIC")
    p.add_argument("--k-max", type=_positive_int, default=10)
    p.add_argument("--beta", type=_beta, default=0.01)
    p.add_argument("--restarts", type=_positive_int, default=10)
    p.add_argument("--max-iterations", type=_positive_int, default=200)
    p.add_argument("--tolerance", type=_positive_float, default=1e-4)
    p.add_argument("--regularization", type=float, default=1e-6)
    p.add_argument("--param-count", choices=PARAM_COUNTS, default="standard")
    if seed_required:
        p.add_argument("--seed", type=int, required=True, help="first seed; seeds are consecutive")
    else:
        p.add_argument("--seed", type=int, default=0)


def _add_input_args(p):
    p.add_argument("input", help="stream CSV (leading t column) or entity CSV with --window-length")
    p.add_argument("--window-length", type=_positive_int, default=None,
                   help="treat input as entity,time,features... and aggregate trailing windows")
    p.add_argument("--time-column", default="time")
    p.add_argument("--entity-column", default="entity")
    p.add_argument("--features", default=None, help="comma-separated feature columns")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixcomp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mixcomp {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic stream CSV")
    g.add_argument("dataset", choices=sorted(GENERATORS))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-T", "--t-count", type=_positive_int, default=150)
    g.add_argument("-N", "--n-per-t", type=_positive_int, default=1000)
    g.add_argument("--dimension", type=_positive_int, default=3)
    g.add_argument("--reversed", action="store_true")
    g.add_argument("-o", "--output", required=True)

    t = sub.add_parser("track", help="track K and MC over a stream")
    _add_input_args(t)
    _add_sdms_args(t)
    t.add_argument("-o", "--output", required=True)
    t.add_argument("--plot", default=None, help="SVG path for exp(MC) and K")

    d = sub.add_parser("decompose", help="track the hierarchical MC decomposition")
    _add_input_args(d)
    _add_sdms_args(d)
    d.add_argument("-L", "--upper", type=_positive_int, default=4)
    d.add_argument("-m", "--fuzziness", type=_fuzziness, default=1.5)
    d.add_argument("--fcm-iterations", type=_positive_int, default=300)
    d.add_argument("--fcm-tolerance", type=_positive_float, default=1e-6)
    d.add_argument("-o", "--output", required=True)
    d.add_argument("--centers", default=None, help="CSV for the upper-component centers")
    d.add_argument("--plot-dir", default=None)

    for name, helptext in (("detect", "list change alerts"), ("eval", "Delay / FAR of the alerts")):
        e = sub.add_parser(name, help=helptext)
        e.add_argument("track_csv")
        e.add_argument("--mode", choices=[m.value for m in AlertMode], default="mc")
        e.add_argument("--window", type=_positive_int, default=5)
        e.add_argument("--threshold", type=_positive_float, default=0.01)
        e.add_argument("--min-gap", type=_positive_int, default=5)
        e.add_argument("--start", type=_positive_int, default=10)
        e.add_argument("-o", "--output", default=None)
        if name == "eval":
            e.add_argument("--transaction", type=_positive_int, nargs=2, default=list(TRANSACTION))
            e.add_argument("--horizon", type=_positive_int, nargs=2, default=None,
                           help="default: start .. sequence length")

    x = sub.add_parser("experiment", help="averaged Delay/FAR over seeds on the synthetic streams")
    x.add_argument("--n-seeds", type=_positive_int, default=10)
    x.add_argument("--datasets", default="move,imbalance")
    x.add_argument("--directions", default="forward,reverse")
    x.add_argument("-T", "--t-count", type=_positive_int, default=150)
    x.add_argument("-N", "--n-per-t", type=_positive_int, default=1000)
    _add_sdms_args(x, seed_required=True)
    x.add_argument("-o", "--output", required=True, help="output directory")

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _jsonable(obj):
    if is_dataclass(obj):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def write_manifest(output, command, argv, config, seed, inputs, outputs) -> Path:
    path = Path(str(output) + ".manifest.json")
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": _jsonable(config),
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "version": __version__,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _sdms_config(args) -> SdmsConfig:
    fit = FitConfig(
        restarts=args.restarts,
        max_iterations=args.max_iterations,
        log_likelihood_tolerance=args.tolerance,
        regularization=args.regularization,
        rng_seed=args.seed,
    )
    return SdmsConfig(
        k_max=args.k_max,
        beta=args.beta,
        criterion=Criterion.parse(args.criterion),
        fit=fit,
        param_count=args.param_count,
    )


def _load_stream(args) -> TimedStream:
    if args.window_length is not None:
        features = args.features.split(",") if args.features else None
        stream = ingest_csv(args.input, args.window_length, args.time_column, features, args.entity_column)
    else:
        stream = read_stream_csv(args.input)
    if not stream.windows:
        raise DataFormatError(f"{args.input}: no windows to process")
    return stream


def _write_rows(path, header, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def _read_column(path, column) -> List[float]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise DataFormatError(f"{path}: missing column {column!r}", line=1)
        values = []
        for line, row in enumerate(reader, start=2):
            try:
                values.append(float(row[column]))
            except (TypeError, ValueError):
                raise DataFormatError(f"{path}: line {line}: bad value in {column!r}", line=line)
    return values


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args, argv):
    spec = StreamSpec(args.t_count, args.n_per_t, args.dimension, args.seed, args.reversed)
    stream = GENERATORS[args.dataset](spec)
    times = list(range(1, spec.t_count + 1))
    write_stream_csv(args.output, stream, times)
    write_manifest(args.output, "generate", argv, {"dataset": args.dataset, "spec": spec},
                   args.seed, [], [args.output])
    log.info("wrote %d windows to %s", len(stream), args.output)


def cmd_track(args, argv):
    stream = _load_stream(args)
    config = _sdms_config(args)
    result = track_mc(stream.windows, config)
    rows = [
        (t, k, m, np.exp(m), c, f)
        for t, k, m, c, f in zip(stream.times, result.selected_k, result.mc, result.total_cost, result.flagged)
    ]
    _write_rows(args.output, ["t", "K", "MC", "expMC", "cost", "flagged"], rows)
    outputs = [args.output]
    if args.plot:
        line_chart(args.plot, stream.times,
                   [("exp(MC)", list(result.exp_mc)), ("K", [float(k) for k in result.selected_k])],
                   title=f"exp(MC) and K ({args.criterion})")
        outputs.append(args.plot)
    write_manifest(args.output, "track", argv, config, args.seed, [args.input], outputs)


def cmd_decompose(args, argv):
    stream = _load_stream(args)
    config = _sdms_config(args)
    fcm = FuzzyCMeansConfig(args.upper, args.fuzziness, args.fcm_iterations, args.fcm_tolerance, args.seed)
    res = track_decomposition(stream.windows, config, fcm)
    L = args.upper
    header = ["t", "K", "mc_total", "mc_interaction"]
    header += [f"W_{l + 1}" for l in range(L)]
    header += [f"mc_component_{l + 1}" for l in range(L)]
    header += [f"contribution_{l + 1}" for l in range(L)]
    header.append("residual")
    rows = []
    for t, k, dec in zip(stream.times, res.track.selected_k, res.decompositions):
        rows.append((t, k, dec.mc_total, dec.mc_interaction, *dec.weight_w, *dec.mc_component,
                     *dec.contribution, dec.residual()))
    _write_rows(args.output, header, rows)
    outputs = [args.output]
    if args.centers:
        d = res.centers.shape[1]
        _write_rows(args.centers, ["l", *(f"c{i + 1}" for i in range(d))],
                    [(l + 1, *c) for l, c in enumerate(res.centers)])
        outputs.append(args.centers)
    if args.plot_dir:
        out = Path(args.plot_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = list(zip(*rows))
        panels = {
            "mc_total_interaction": [("MC(total)", cols[2]), ("MC(interaction)", cols[3])],
            "weight": [(f"W(component {l + 1})", cols[4 + l]) for l in range(L)],
            "mc_component": [(f"MC(component {l + 1})", cols[4 + L + l]) for l in range(L)],
            "contribution": [(f"Contribution({l + 1})", cols[4 + 2 * L + l]) for l in range(L)],
        }
        for name, series in panels.items():
            path = out / f"{name}.svg"
            line_chart(path, stream.times, series, title=name)
            outputs.append(path)
    write_manifest(args.output, "decompose", argv, {"sdms": config, "fcm": fcm}, args.seed,
                   [args.input], outputs)


def _alert_config(args) -> AlertConfig:
    return AlertConfig(args.window, args.threshold, args.min_gap, args.start, AlertMode(args.mode))


def _sequence(args):
    column = "MC" if args.mode == "mc" else "K"
    return _read_column(args.track_csv, column)


def _flagged_times(args):
    """1-based positions of carried-forward windows, if the CSV records them."""
    with Path(args.track_csv).open(newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    if "flagged" not in header:
        return set()
    values = _read_column(args.track_csv, "flagged")
    return {i for i, v in enumerate(values, start=1) if v}


def cmd_detect(args, argv):
    config = _alert_config(args)
    alerts = drop_flagged(detect_changes(_sequence(args), config), _flagged_times(args))
    if args.output:
        _write_rows(args.output, ["alert_t"], [(a,) for a in alerts])
        write_manifest(args.output, "detect", argv, config, None, [args.track_csv], [args.output])
    else:
        print("\n".join(str(a) for a in alerts))


def cmd_eval(args, argv):
    config = _alert_config(args)
    seq = _sequence(args)
    alerts = drop_flagged(detect_changes(seq, config), _flagged_times(args))
    horizon = tuple(args.horizon) if args.horizon else (config.start_t, len(seq))
    res = evaluate(alerts, tuple(args.transaction), horizon, config.window)
    first = "" if res.first_alert is None else str(res.first_alert)
    print(f"mode={args.mode} delay={res.delay} far={res.far:.9g} first_alert={first or '-'} "
          f"alerts={list(res.alerts)}")
    if args.output:
        _write_rows(args.output, ["mode", "delay", "far", "first_alert", "n_alerts"],
                    [(args.mode, res.delay, res.far, first, len(res.alerts))])
        write_manifest(args.output, "eval", argv,
                       {"alert": config, "transaction": args.transaction, "horizon": horizon},
                       None, [args.track_csv], [args.output])


def cmd_experiment(args, argv):
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    config = _sdms_config(args)
    datasets = [s.strip() for s in args.datasets.split(",") if s.strip()]
    directions = [s.strip() for s in args.directions.split(",") if s.strip()]
    for name in datasets:
        if name not in GENERATORS:
            raise InvalidInputError(f"unknown dataset {name!r}")
    for direction in directions:
        if direction not in ("forward", "reverse"):
            raise InvalidInputError(f"unknown direction {direction!r}")
    seeds = [args.seed + i for i in range(args.n_seeds)]
    spec_kw = {"t_count": args.t_count, "n_per_t": args.n_per_t}

    trial_rows, summary_rows = [], []
    for name in datasets:
        for direction in directions:
            trials = []
            for s in seeds:
                tr = run_trial(name, direction == "reverse", s, spec_kw=spec_kw, sdms=config)
                trials.append(tr)
                trial_rows.append((name, direction, s, tr.mc_eval.delay, tr.mc_eval.far,
                                   tr.k_eval.delay, tr.k_eval.far))
                log.info("%s %s seed=%d: delay MC=%d K=%d", name, direction, s,
                         tr.mc_eval.delay, tr.k_eval.delay)
            summ = summarize(trials)
            summary_rows.append((name, direction, summ["delay_mc"], summ["delay_k"], summ["delay_diff"],
                                 summ["far_mc"], summ["far_k"], summ["far_diff"]))
    trials_path = out / "trials.csv"
    summary_path = out / "summary.csv"
    _write_rows(trials_path, ["dataset", "direction", "seed", "delay_mc", "far_mc", "delay_k", "far_k"],
                trial_rows)
    summary_header = ["dataset", "direction", "delay_mc", "delay_k", "delay_diff", "far_mc", "far_k", "far_diff"]
    _write_rows(summary_path, summary_header, summary_rows)
    print(f"{'dataset':<10} {'direction':<8} {'Delay MC':>9} {'Delay K':>8} {'diff':>7} {'FAR MC':>7} {'FAR K':>7}")
    for row in summary_rows:
        print(f"{row[0]:<10} {row[1]:<8} {row[2]:>9.1f} {row[3]:>8.1f} {row[4]:>7.1f} {row[5]:>7.3f} {row[6]:>7.3f}")
    write_manifest(summary_path, "experiment", argv,
                   {"sdms": config, "seeds": seeds, "spec": spec_kw, "datasets": datasets,
                    "directions": directions}, args.seed, [], [trials_path, summary_path])


def cmd_replay(args, argv):
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    return main(manifest["argv"])


COMMANDS = {
    "generate": cmd_generate,
    "track": cmd_track,
    "decompose": cmd_decompose,
    "detect": cmd_detect,
    "eval": cmd_eval,
    "experiment": cmd_experiment,
    "replay": cmd_replay,
}


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code = COMMANDS[args.command](args, argv)
    except (NumericalDomainError, FitFailureError) as exc:
        print(f"mixcomp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFormatError, InvalidInputError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"mixcomp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"mixcomp: cannot write output: {exc}", file=sys.stderr)
        return EXIT_DATA
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
