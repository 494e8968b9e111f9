"""Pipeline orchestration: ``citeassess <command> --config <path> [--seed N] [--out DIR]``.

Stages and the files they leave under ``output_dir``::

    synth    synthetic dumps + roster under synth.dir
    ingest   corpus store at store_path
    resolve  dossiers/<person_id>.json
    metrics  metrics.csv, networks/<person_id>.edges|.nodes
    sweep    sweep_results.csv
    report   significance.json, summary.json

Exit status: 0 success, 1 runtime failure (missing upstream artifact, I/O),
2 usage or configuration error.  Errors print one ``error[<code>]: message``
line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import shutil
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import yaml

from .citegraph import METRIC_NAMES, MetricVector, build_network, compute_metrics
from .errors import CiteAssessError, ConfigError, MissingInputError, UsageError
from .mlharness import (
    Algorithm,
    EvalResult,
    SubsetMask,
    SweepPlan,
    read_metrics_csv,
    report_json,
    results_csv,
    significance,
    sweep,
)
from .resolver import Dossier, Resolver, Section, load_roster
from .store import DB_FILENAME, CorpusStore, SourceKind
from .synth import SynthConfig, generate

log = logging.getLogger("citeassess")

COMMANDS = ("synth", "ingest", "resolve", "metrics", "sweep", "report")
METRICS_COLUMNS = ("candidate_id", "section", *METRIC_NAMES, "label")

METRICS_FILE = "metrics.csv"
RESULTS_FILE = "sweep_results.csv"
SIGNIFICANCE_FILE = "significance.json"
SUMMARY_FILE = "summary.json"
DOSSIER_DIR = "dossiers"
NETWORK_DIR = "networks"


@dataclass
class PipelineConfig:
    store_path: Path
    dump_specs: list[tuple[Path, SourceKind]]
    roster_path: Path
    output_dir: Path
    sweep: dict = field(default_factory=dict)
    include_sections: frozenset[Section] = frozenset({Section.A, Section.B})
    synth: dict = field(default_factory=dict)
    synth_dir: Path | None = None

    def plan(self, m: int = len(METRIC_NAMES)) -> SweepPlan:
        try:
            return SweepPlan(m=m, **self.sweep)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad sweep settings: {exc}") from None

    def validate(self, command: str) -> None:
        """Paths the command reads must exist; synth writes them instead."""
        if command == "synth":
            return
        if command == "ingest":
            for path, _ in self.dump_specs:
                if not path.exists():
                    raise ConfigError(f"dump file not found: {path}")
        if command == "resolve" and not self.roster_path.exists():
            raise ConfigError(f"roster file not found: {self.roster_path}")


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config does not parse: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a key/value mapping")
    base = path.parent

    def p(value) -> Path:
        q = Path(value)
        return q if q.is_absolute() else base / q

    try:
        dumps = []
        for spec in raw.get("dump_specs", []):
            if isinstance(spec, dict):
                dumps.append((p(spec["path"]), SourceKind(str(spec["kind"]).upper())))
            else:
                dumps.append((p(spec[0]), SourceKind(str(spec[1]).upper())))
        sections = frozenset(Section(str(s).upper()) for s in raw.get("include_sections", ["A", "B"]))
        synth = dict(raw.get("synth") or {})
        cfg = PipelineConfig(
            store_path=p(raw["store_path"]),
            dump_specs=dumps,
            roster_path=p(raw["roster_path"]),
            output_dir=p(raw["output_dir"]),
            sweep=dict(raw.get("sweep") or {}),
            include_sections=sections,
            synth=synth,
            synth_dir=p(synth.pop("dir")) if "dir" in synth else None,
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from None
    if not cfg.include_sections:
        raise ConfigError("include_sections must not be empty")
    cfg.plan()
    return cfg


# -- stages -------------------------------------------------------------------

def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingInputError(f"required input not found: {path}")
    return path


def stage_synth(cfg: PipelineConfig) -> dict:
    if cfg.synth_dir is None:
        raise ConfigError("synth.dir is not set")
    corpus = generate(SynthConfig.from_dict(cfg.synth), cfg.synth_dir)
    return {"publications": corpus.n_publications, "candidates": corpus.n_candidates,
            "commission": corpus.n_commission, "files": corpus.files}


def stage_ingest(cfg: PipelineConfig) -> list[dict]:
    out = []
    with CorpusStore(cfg.store_path) as store:
        for path, kind in cfg.dump_specs:
            stats = store.ingest_dump(path, kind)
            out.append({"path": str(path), "kind": kind.value, **stats.__dict__})
    return out


def stage_resolve(cfg: PipelineConfig) -> list[Dossier]:
    _require(cfg.store_path / DB_FILENAME)
    candidates, commission = load_roster(cfg.roster_path)
    if not commission:
        raise UsageError("roster lists no commission members")
    ddir = cfg.output_dir / DOSSIER_DIR
    if ddir.exists():
        shutil.rmtree(ddir)
    ddir.mkdir(parents=True)
    dossiers = []
    with CorpusStore(cfg.store_path, readonly=True) as store:
        resolver = Resolver(store)
        for cand in candidates:
            d = resolver.build_dossier(cand, commission)
            d.save(ddir / f"{cand.person_id}.json")
            dossiers.append(d)
    return dossiers


def load_dossiers(cfg: PipelineConfig) -> list[Dossier]:
    ddir = _require(cfg.output_dir / DOSSIER_DIR)
    return [Dossier.load(f) for f in sorted(ddir.glob("*.json"))]


def metrics_csv(rows: Sequence[tuple[str, MetricVector]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_COLUMNS)
    for cid, mv in rows:
        w.writerow([cid, mv.section.value if mv.section else "", *mv.values(),
                    mv.label.value.lower() if mv.label else ""])
    return buf.getvalue()


def compute_all_metrics(dossiers: Sequence[Dossier], include: frozenset[Section],
                        network_dir: Path | None = None) -> list[tuple[str, MetricVector]]:
    rows = []
    if network_dir is not None:
        network_dir.mkdir(parents=True, exist_ok=True)
    for d in dossiers:
        net = build_network(d)
        if network_dir is not None:
            net.export(network_dir / f"{d.dossier_id}.edges", network_dir / f"{d.dossier_id}.nodes")
        if d.section in include:
            rows.append((d.dossier_id, compute_metrics(d, net)))
    return rows


def stage_metrics(cfg: PipelineConfig) -> list[tuple[str, MetricVector]]:
    dossiers = load_dossiers(cfg)
    rows = compute_all_metrics(dossiers, cfg.include_sections, cfg.output_dir / NETWORK_DIR)
    (cfg.output_dir / METRICS_FILE).write_text(metrics_csv(rows), encoding="utf-8")
    return rows


def stage_sweep(cfg: PipelineConfig) -> list[EvalResult]:
    matrix = read_metrics_csv(_require(cfg.output_dir / METRICS_FILE), METRIC_NAMES)
    plan = cfg.plan(matrix.m)
    results = sweep(matrix, plan)
    (cfg.output_dir / RESULTS_FILE).write_text(
        results_csv(results, METRIC_NAMES, plan.k_folds), encoding="utf-8")
    return results


def read_results_csv(path: Path, m: int) -> list[EvalResult]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            folds = [float(v) for k, v in row.items() if k.startswith("fold_")]
            degenerate = tuple(int(x) for x in row["degenerate_folds"].split())
            out.append(EvalResult(SubsetMask(int(row["mask"], 2), m), Algorithm(row["algorithm"]),
                                  tuple(folds), float(row["weighted_f1"]), degenerate))
    return out


def emit_reports(results: Sequence[EvalResult] | None, dossiers: Sequence[Dossier], out: Path,
                 plan: SweepPlan, include: frozenset[Section] = frozenset({Section.A, Section.B}),
                 metric_rows: Sequence[tuple[str, MetricVector]] | None = None) -> list[Path]:
    """Write metrics table, results table, significance report and run summary."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if metric_rows is None:
        metric_rows = compute_all_metrics(dossiers, include)
    results = list(results or [])
    report = significance(results, plan, METRIC_NAMES)
    sections = {s.value: 0 for s in Section}
    for d in dossiers:
        sections[d.section.value] += 1
    summary = {
        "candidates": len(dossiers),
        "sections": sections,
        "include_sections": sorted(s.value for s in include),
        "metrics_rows": len(metric_rows),
        "classifier_count": len(results),
        "good_classifier_count": report.good_classifier_count,
        "no_classifier_passed": report.no_classifier_passed,
        "significant_metrics": [n for n, v in zip(report.metric_names, report.verdicts)
                                if v.value == "SIGNIFICANT"],
        "irrelevant_metrics": [n for n, v in zip(report.metric_names, report.verdicts)
                               if v.value == "IRRELEVANT"],
        "unresolved_entries": {d.dossier_id: d.unresolved_entries for d in dossiers
                               if d.unresolved_entries},
        "seed": plan.seed,
        "k_folds": plan.k_folds,
    }
    files = {
        out / METRICS_FILE: metrics_csv(metric_rows),
        out / RESULTS_FILE: results_csv(results, METRIC_NAMES, plan.k_folds),
        out / SIGNIFICANCE_FILE: report_json(report),
        out / SUMMARY_FILE: json.dumps(summary, indent=2, sort_keys=True) + "\n",
    }
    for path, text in files.items():
        path.write_text(text, encoding="utf-8")
    return list(files)


def stage_report(cfg: PipelineConfig) -> list[Path]:
    plan = cfg.plan()
    results = read_results_csv(_require(cfg.output_dir / RESULTS_FILE), plan.m)
    dossiers = load_dossiers(cfg)
    metric_rows = compute_all_metrics(dossiers, cfg.include_sections)
    return emit_reports(results, dossiers, cfg.output_dir, plan, cfg.include_sections, metric_rows)


# -- entry points -------------------------------------------------------------

def run(command: str, config: PipelineConfig | str | Path, seed: int | None = None,
        out: str | Path | None = None) -> int:
    """Run one stage; returns the process exit status."""
    try:
        if command not in COMMANDS:
            raise UsageError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
        cfg = config if isinstance(config, PipelineConfig) else load_config(config)
        if seed is not None:
            cfg = replace(cfg, sweep={**cfg.sweep, "seed": seed})
            cfg.plan()
        if out is not None:
            cfg = replace(cfg, output_dir=Path(out))
        cfg.validate(command)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        if command == "synth":
            print(json.dumps(stage_synth(cfg), indent=1))
        elif command == "ingest":
            for stats in stage_ingest(cfg):
                print(json.dumps(stats))
        elif command == "resolve":
            ds = stage_resolve(cfg)
            print(f"resolved {len(ds)} dossiers into {cfg.output_dir / DOSSIER_DIR}")
        elif command == "metrics":
            rows = stage_metrics(cfg)
            print(f"wrote {len(rows)} metric rows to {cfg.output_dir / METRICS_FILE}")
        elif command == "sweep":
            res = stage_sweep(cfg)
            print(f"wrote {len(res)} results to {cfg.output_dir / RESULTS_FILE}")
        else:
            for path in stage_report(cfg):
                print(path)
        return 0
    except UsageError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except CiteAssessError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error[usage]: {message}", file=sys.stderr)
        raise SystemExit(2)


def main(argv: Sequence[str] | None = None) -> int:
    parser = _Parser(prog="citeassess", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", help=" | ".join(COMMANDS))
    parser.add_argument("--config", required=True, help="pipeline configuration (YAML)")
    parser.add_argument("--seed", type=int, help="override sweep.seed")
    parser.add_argument("--out", help="override output_dir")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command not in COMMANDS:
        parser.print_usage(sys.stderr)
    return run(args.command, args.config, seed=args.seed, out=args.out)


if __name__ == "__main__":
    sys.exit(main())
