"""Command-line front end: ``driftgmm {generate,run,stats,boundary-grid}``."""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import os
import sys
from collections import defaultdict
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .evaluation import (REAL_BATCH, SYNTHETIC_BATCH, cv_keep_mask, prequential_run, run_jobs, write_aot,
                         write_events, write_results, _atomic_write)
from .learner import LearnerConfig, Mechanism, OnlineGmmLearner, Phase, ablation_config, default_m
from .stats import friedman_nemenyi, wilcoxon_signed_rank
from .streams import BUILTIN_NAMES, builtin_schedule, drift_severities, generate, load_csv


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# -- config file -----------------------------------------------------------

LEARNER_KEYS = {f.name: f.type for f in dataclasses.fields(LearnerConfig) if f.name not in ("disabled",)}
EXPERIMENT_KEYS = {"dataset", "out", "seed", "noise", "ablate", "cv_runs", "cv_period", "batch_size", "events"}


def _key_line(text: str, section: str, key: str) -> int:
    current = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and s.split("=", 1)[0].split(":", 1)[0].strip().lower() == key:
            return no
    return 0


def read_config(path) -> dict:
    """Parse an experiment file with ``[experiment]`` and ``[learner]`` sections.

    Returns ``{"experiment": {...}, "learner": {...}}`` with typed values.
    Raises :class:`CliError` pointing at the offending line.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError("config", f"cannot read {path}: {exc}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise CliError("config", " ".join(str(exc).split()))
    out = {"experiment": {}, "learner": {}}
    for section in parser.sections():
        if section not in out:
            raise CliError("config", f"{path}:{_key_line(text, section, '') or '?'}: unknown section [{section}]")
        allowed = EXPERIMENT_KEYS if section == "experiment" else set(LEARNER_KEYS)
        for key, raw in parser.items(section):
            line = _key_line(text, section, key)
            if key not in allowed:
                raise CliError("config", f"{path}:{line}: unknown key {key!r} in [{section}]")
            try:
                out[section][key] = _convert(section, key, raw)
            except ValueError as exc:
                raise CliError("config", f"{path}:{line}: bad value for {key!r}: {exc}")
    return out


def _convert(section: str, key: str, raw: str):
    raw = raw.strip()
    if section == "learner":
        kind = LEARNER_KEYS[key]
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
        return raw
    if key in ("seed", "cv_runs", "cv_period", "batch_size"):
        return int(raw)
    if key == "noise":
        return parse_noise(raw)
    if key == "ablate":
        return parse_ablate(raw)
    if key == "events":
        if raw.lower() not in ("true", "false", "yes", "no", "1", "0"):
            raise ValueError("expected a boolean")
        return raw.lower() in ("true", "yes", "1")
    return raw


def parse_noise(raw: str) -> list:
    levels = [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    for v in levels:
        if not 0.0 <= v < 1.0:
            raise ValueError(f"noise level {v} outside [0, 1)")
    return levels


def parse_ablate(raw: str) -> list:
    names = [v.strip().lower() for v in raw.replace(";", ",").split(",") if v.strip()]
    return [Mechanism(n).value for n in names]


# -- datasets --------------------------------------------------------------

def resolve_stream(dataset: str, noise: float, seed: int):
    """Built-in name or CSV path -> (stream, is_synthetic)."""
    key = dataset.lower().replace(" ", "").replace("_", "")
    if key in BUILTIN_NAMES:
        return generate(builtin_schedule(key, noise_rate=noise, seed=seed)), True
    path = Path(dataset)
    if not path.exists():
        raise CliError("dataset", f"unknown dataset {dataset!r} (not a built-in name or existing file)")
    try:
        stream, rejected = load_csv(path, name=path.stem)
    except ValueError as exc:
        raise CliError("dataset", str(exc))
    if rejected:
        print(f"warning: rejected {rejected} non-numeric rows from {path}", file=sys.stderr)
    if noise > 0:
        from .streams import inject_label_noise
        rng = np.random.default_rng(seed)
        n_classes = int(stream.y.max()) + 1
        stream = dataclasses.replace(stream, clean_y=stream.y,
                                     y=inject_label_noise(stream.y, noise, n_classes, rng))
    return stream, False


# -- commands --------------------------------------------------------------

def cmd_generate(args) -> int:
    dataset, seed, noise = args.dataset, args.seed, args.noise
    if dataset and Path(dataset).suffix in (".ini", ".cfg") and Path(dataset).exists():
        cfg = read_config(dataset)["experiment"]
        dataset = cfg.get("dataset", dataset)
        seed = cfg.get("seed", seed)
        noise = (cfg.get("noise") or [noise])[0]
    key = (dataset or "").lower().replace(" ", "").replace("_", "")
    if key not in BUILTIN_NAMES:
        raise CliError("dataset", f"unknown dataset {dataset!r}; expected one of {', '.join(BUILTIN_NAMES)}")
    schedule = builtin_schedule(key, noise_rate=noise, seed=seed)
    stream = generate(schedule)
    out = Path(args.out or f"{key}.csv")
    _ensure_parent(out)
    text = stream.to_csv()
    _atomic_write(out, lambda fh: fh.write(text))
    meta = {
        "dataset": key,
        "seed": seed,
        "noise_rate": noise,
        "rows": len(stream),
        "attributes": stream.dim,
        "classes": schedule.n_classes,
        "concepts": schedule.n_concepts,
        "concept_sizes": list(schedule.sizes),
        "transition": {"kind": schedule.transition.kind, "width": schedule.transition.width},
        "drift_points": list(schedule.boundaries),
        "severity": [round(v, 4) for v in drift_severities(schedule, seed=seed)],
    }
    sidecar = out.with_suffix(out.suffix + ".json")
    _atomic_write(sidecar, lambda fh: fh.write(json.dumps(meta, indent=2, sort_keys=True) + "\n"))
    print(f"wrote {out} ({len(stream)} rows) and {sidecar}")
    return 0


def _ensure_parent(path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError("io", f"cannot create {path.parent}: {exc}")
    if not os.access(path.parent, os.W_OK):
        raise CliError("io", f"{path.parent} is not writable")


def _learner_config(learner_opts: dict, seed: int, dim: int) -> LearnerConfig:
    opts = dict(learner_opts)
    opts.setdefault("m", default_m(dim))
    opts["seed"] = seed
    try:
        return LearnerConfig(**opts)
    except (TypeError, ValueError) as exc:
        raise CliError("config", f"invalid learner configuration: {exc}")


def _run_job(job):
    stream, config, batch_size, run, period, config_id, noise = job
    if run:
        stream = stream.subset(cv_keep_mask(len(stream), run, period))
    result = prequential_run(stream, config, batch_size, run, config_id)
    result.extra["noise"] = noise
    return result


def cmd_run(args) -> int:
    cfg = read_config(args.config) if args.config else {"experiment": {}, "learner": {}}
    exp = cfg["experiment"]
    dataset = args.dataset or exp.get("dataset")
    if not dataset:
        raise CliError("config", "no dataset given (use --dataset or [experiment] dataset)")
    seed = args.seed if args.seed is not None else exp.get("seed", 0)
    noise_levels = parse_noise(args.noise) if args.noise else exp.get("noise", [0.0])
    ablate = parse_ablate(args.ablate) if args.ablate else exp.get("ablate", [])
    cv_runs = args.cv if args.cv is not None else exp.get("cv_runs", 0)
    period = exp.get("cv_period", 30)
    if cv_runs > period:
        raise CliError("config", f"cv runs {cv_runs} exceed the deletion period {period}")
    out = Path(args.out or exp.get("out", "results"))
    out.mkdir(parents=True, exist_ok=True)

    jobs = []
    for noise in noise_levels:
        stream, synthetic = resolve_stream(dataset, noise, seed)
        batch = args.batch_size or exp.get("batch_size") or (SYNTHETIC_BATCH if synthetic else REAL_BATCH)
        base = _learner_config(cfg["learner"], seed, stream.dim)
        variants = [("full", base)] + [(f"no-{a}", ablation_config(base, [a])) for a in ablate]
        for config_id, config in variants:
            runs = range(1, cv_runs + 1) if cv_runs else [0]
            for r in runs:
                jobs.append((stream, config, batch, r, period, config_id, noise))
    results = run_jobs(_run_job, jobs)
    for res in results:
        res.extra["noise"] = res.extra.get("noise", 0.0)
    _write_run_outputs(results, out, args.events or exp.get("events", False))
    print(f"wrote {len(results)} runs to {out}")
    return 0


def _write_run_outputs(results, out: Path, events: bool) -> None:
    import csv
    from .evaluation import RESULT_FIELDS, _fmt

    fields = RESULT_FIELDS + ["noise"]

    def write(fh):
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in results:
            row = r.row()
            row["noise"] = r.extra.get("noise", 0.0)
            w.writerow({k: _fmt(v) for k, v in row.items()})

    _atomic_write(out / "results.csv", write)
    write_aot(results, out / "aot.csv")
    if events:
        for r in results:
            write_events(r, out / f"events_{r.config_id}_noise{r.extra.get('noise', 0.0)}_run{r.run_id}.csv")


def load_result_rows(paths) -> list:
    import csv
    rows = []
    multi = len(paths) > 1
    for p in paths:
        try:
            with open(p, newline="") as fh:
                for row in csv.DictReader(fh):
                    row["approach"] = f"{Path(p).stem}:{row['config']}" if multi else row["config"]
                    rows.append(row)
        except (OSError, KeyError) as exc:
            raise CliError("input", f"cannot read results from {p}: {exc}")
    if not rows:
        raise CliError("input", "no result rows found")
    return rows


def stats_report(rows, metric: str = "accuracy", alpha: float = 0.05) -> str:
    """Rank table, Friedman/Nemenyi and per-dataset Wilcoxon against the first approach."""
    by_key = defaultdict(lambda: defaultdict(dict))
    for row in rows:
        ds = row["dataset"] + (f"@{row['noise']}" if row.get("noise") not in (None, "") else "")
        by_key[ds][row["approach"]][int(row["run"])] = float(row[metric])
    datasets = sorted(by_key)
    approaches = sorted({a for ds in datasets for a in by_key[ds]})
    for ds in datasets:
        if set(by_key[ds]) != set(approaches):
            missing = sorted(set(approaches) - set(by_key[ds]))
            raise CliError("input", f"dataset {ds} lacks approaches {missing}")
    means = np.array([[np.mean(list(by_key[ds][a].values())) for ds in datasets] for a in approaches])
    lines = [f"metric: {metric}", "", "mean per dataset:"]
    width = max(len(a) for a in approaches)
    lines.append(" " * (width + 2) + "  ".join(f"{ds:>14}" for ds in datasets))
    for a, row in zip(approaches, means):
        lines.append(f"{a:<{width}}  " + "  ".join(f"{v:14.6f}" for v in row))
    lines.append("")
    if len(approaches) >= 2 and len(datasets) >= 2:
        fr = friedman_nemenyi(means, alpha)
        lines.append("average ranks (1 = best):")
        for a, r in sorted(zip(approaches, fr.ranks), key=lambda t: (t[1], t[0])):
            lines.append(f"  {a:<{width}}  {r:.4f}")
        lines.append(f"friedman chi2 = {fr.statistic:.6f}  p = {fr.p_value:.6g}")
        lines.append(f"nemenyi CD (alpha={alpha}) = {fr.critical_difference:.6f}  q = {fr.q_alpha:.6f}")
    else:
        lines.append("friedman: skipped (needs >= 2 approaches and >= 2 datasets)")
    if len(approaches) >= 2:
        ref = "full" if "full" in approaches else approaches[0]
        lines.append("")
        lines.append(f"wilcoxon signed-rank vs {ref}:")
        for ds in datasets:
            for a in approaches:
                if a == ref:
                    continue
                runs = sorted(set(by_key[ds][ref]) & set(by_key[ds][a]))
                x = [by_key[ds][ref][r] for r in runs]
                y = [by_key[ds][a][r] for r in runs]
                p = wilcoxon_signed_rank(x, y)
                diff = float(np.mean(np.subtract(x, y))) if runs else float("nan")
                lines.append(f"  {ds:<14} {a:<{width}}  mean diff = {diff:+.6f}  p = {p:.6g}  n = {len(runs)}")
    return "\n".join(lines) + "\n"


def cmd_stats(args) -> int:
    rows = load_result_rows(args.results)
    report = stats_report(rows, args.metric)
    if args.out:
        out = Path(args.out)
        _ensure_parent(out)
        _atomic_write(out, lambda fh: fh.write(report))
    sys.stdout.write(report)
    return 0


def boundary_grid(learner: OnlineGmmLearner, lo, hi, resolution: int) -> np.ndarray:
    """Rows ``(x1, x2, predicted)`` over a ``resolution x resolution`` grid."""
    if learner.phase is Phase.BOOTSTRAP or learner.model is None:
        raise CliError("state", "no model yet: the learner is still bootstrapping at this timestamp")
    if learner.model.dim != 2:
        raise CliError("dimension", f"boundary grid needs 2 attributes, got {learner.model.dim}")
    g1 = np.linspace(lo[0], hi[0], resolution)
    g2 = np.linspace(lo[1], hi[1], resolution)
    xx, yy = np.meshgrid(g1, g2)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    return np.column_stack([pts, learner.model.predict_many(pts)])


def cmd_boundary_grid(args) -> int:
    cfg = read_config(args.config) if args.config else {"experiment": {}, "learner": {}}
    dataset = args.dataset or cfg["experiment"].get("dataset")
    if not dataset:
        raise CliError("config", "no dataset given")
    seed = args.seed if args.seed is not None else cfg["experiment"].get("seed", 0)
    noise = parse_noise(args.noise)[0] if args.noise else (cfg["experiment"].get("noise") or [0.0])[0]
    stream, _ = resolve_stream(dataset, noise, seed)
    if stream.dim != 2:
        raise CliError("dimension", f"boundary grid needs 2 attributes, got {stream.dim}")
    if args.resolution < 2:
        raise CliError("config", "resolution must be >= 2")
    learner = OnlineGmmLearner(_learner_config(cfg["learner"], seed, stream.dim))
    at = min(args.at, len(stream))
    for t in range(at):
        learner.process(stream.X[t], stream.y[t])
    grid = boundary_grid(learner, stream.X.min(axis=0), stream.X.max(axis=0), args.resolution)
    out = Path(args.out or "boundary.csv")
    _ensure_parent(out)

    def write(fh):
        fh.write("x1,x2,predicted\n")
        for a, b, c in grid:
            fh.write(f"{a!r},{b!r},{int(c)}\n")

    _atomic_write(out, write)
    print(f"wrote {out} ({grid.shape[0]} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="driftgmm", description="Online GMM classifier for drifting streams.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="materialize a built-in synthetic stream as CSV")
    g.add_argument("dataset", nargs="?", help="built-in name or schedule file")
    g.add_argument("--dataset", dest="dataset_flag")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="prequential or cross-validated runs")
    r.add_argument("--config")
    r.add_argument("--dataset")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--ablate", help="comma list of non-severe,severe,pool,filter")
    r.add_argument("--noise", help="comma list of label-noise levels")
    r.add_argument("--cv", type=int, help="number of cross-validation runs (0 = one plain run)")
    r.add_argument("--batch-size", type=int)
    r.add_argument("--events", action="store_true", help="also write per-observation event logs")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("stats", help="rank table, Friedman/Nemenyi and Wilcoxon from result CSVs")
    s.add_argument("results", nargs="+")
    s.add_argument("--metric", default="accuracy", choices=["accuracy", "gmean", "runtime", "aot_mean"])
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    b = sub.add_parser("boundary-grid", help="predicted class over a 2-D grid at a timestamp")
    b.add_argument("--config")
    b.add_argument("--dataset")
    b.add_argument("--seed", type=int)
    b.add_argument("--noise")
    b.add_argument("--at", type=int, required=True, help="number of observations to learn from first")
    b.add_argument("--resolution", type=int, default=100)
    b.add_argument("--out")
    b.set_defaults(func=cmd_boundary_grid)
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "dataset_flag", None):
        args.dataset = args.dataset_flag
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: code={exc.code} message={exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: code=value message={exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
