"""Experiment runner and report writer: four ELM variants over a hidden-node sweep."""

from __future__ import annotations

import configparser
import csv
import io
import logging
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from sklearn.model_selection import train_test_split

from . import chaos, elm
from . import data as D
from . import encrypted as E
from .ckks import PROFILES, CkksParams, build_context, keygen

log = logging.getLogger(__name__)

VARIANTS = ("enc_chaotic", "plain_chaotic", "enc_traditional", "plain_traditional")
VARIANT_TITLES = {
    "enc_chaotic": "Encrypted Chaotic ELM",
    "plain_chaotic": "Unencrypted Chaotic ELM",
    "enc_traditional": "Encrypted Traditional ELM",
    "plain_traditional": "Unencrypted Traditional ELM",
}
OUTPUT_MODES = ("linear", "sigmoid")
INPUT_DIM = "input_dim"
INPUT_DIM_LABEL = "Same as input Nodes"


class ConfigError(ValueError):
    pass


def _parse_hidden(item) -> int | str:
    if isinstance(item, str):
        s = item.strip().lower()
        if s in ("input", INPUT_DIM, "input_nodes"):
            return INPUT_DIM
        try:
            item = int(s)
        except ValueError:
            raise ConfigError(f"hidden node count {item!r} is not an integer or 'input'") from None
    if int(item) < 1:
        raise ConfigError("hidden node counts must be at least 1")
    return int(item)


def parse_seeds(text) -> tuple:
    """'0-9' or '1,5,7' or a list of ints."""
    if not isinstance(text, str):
        return tuple(int(s) for s in text)
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return tuple(out)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    variants: tuple = VARIANTS
    hidden_nodes: tuple = (INPUT_DIM,)
    seeds: tuple = tuple(range(10))
    split: D.SplitSpec = D.SplitSpec()
    ckks_profile: str = "paper"
    output_modes: tuple = OUTPUT_MODES
    smote_order: str = "pre"
    scale_on_all: bool = False
    burn_in: int = chaos.DEFAULT_BURN_IN
    data_dir: str | None = None
    workers: int = 1
    subsample: int | None = None  # cap on rows per fold; quick runs only

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(self.variants))
        object.__setattr__(self, "hidden_nodes", tuple(_parse_hidden(h) for h in self.hidden_nodes))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "output_modes", tuple(self.output_modes))
        if self.dataset not in D.schema_names():
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        bad = set(self.variants) - set(VARIANTS)
        if bad:
            raise ConfigError(f"unknown variant(s) {sorted(bad)}")
        if not self.hidden_nodes:
            raise ConfigError("at least one hidden node count is required")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        bad = set(self.output_modes) - set(OUTPUT_MODES)
        if bad or not self.output_modes:
            raise ConfigError(f"output modes must be drawn from {OUTPUT_MODES}")
        if self.ckks_profile not in PROFILES:
            raise ConfigError(f"ckks profile must be one of {sorted(PROFILES)}")
        if self.smote_order not in D.SMOTE_ORDERS:
            raise ConfigError(f"smote order must be one of {D.SMOTE_ORDERS}")
        if self.burn_in < 0 or self.workers < 1:
            raise ConfigError("burn_in must be >= 0 and workers >= 1")
        if self.subsample is not None and self.subsample < 4:
            raise ConfigError("subsample must keep at least 4 rows")

    @property
    def ckks(self) -> CkksParams:
        return PROFILES[self.ckks_profile]

    def echo(self) -> dict:
        """Every setting, defaults included, as printable strings."""
        p = self.ckks
        return {
            "dataset": self.dataset,
            "variants": ",".join(self.variants),
            "hidden_nodes": ",".join(str(h) for h in self.hidden_nodes),
            "seeds": ",".join(map(str, self.seeds)),
            "split": f"train_fraction={self.split.train_fraction:g} stratified={self.split.stratified}",
            "ckks_profile": self.ckks_profile,
            "ckks_params": (f"N=2^{p.degree_log2} coeff_modulus_bits={list(p.coeff_modulus_bits)} "
                            f"scale=2^{p.scale_bits} error_stddev={p.error_stddev:g}"),
            "output_modes": ",".join(self.output_modes),
            "smote_order": self.smote_order,
            "scale_on_all": str(self.scale_on_all),
            "burn_in": str(self.burn_in),
            "subsample": str(self.subsample),
            "time_unit": "seconds (wall clock, monotonic)",
        }


@dataclass
class CellResult:
    """One (variant, hidden) cell across seeds."""

    variant: str
    hidden: int | str
    resolved_hidden: int
    accuracy: dict = field(default_factory=dict)  # mode -> [per seed]
    times: list = field(default_factory=list)  # per seed: {phase: seconds}
    fidelity: list = field(default_factory=list)  # encrypted only: per seed dict

    def median_accuracy(self, mode: str) -> float:
        return float(statistics.median(self.accuracy[mode]))

    def median_time(self) -> float:
        return float(statistics.median(sum(t.values()) for t in self.times))


@dataclass
class ExperimentReport:
    config: dict
    cells: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)
    seeds: tuple = ()

    def cell(self, variant: str, hidden) -> CellResult:
        for c in self.cells:
            if c.variant == variant and c.hidden == hidden:
                return c
        raise KeyError((variant, hidden))


def _draw_params(kind: str, n_inputs: int, n_hidden: int, seed: int, burn_in: int):
    if kind == "chaotic":
        return chaos.generate_chaotic_params(n_inputs, n_hidden, seed, burn_in)
    return chaos.generate_uniform_params(n_inputs, n_hidden, seed)


def _subsample(ds: D.Dataset, limit: int | None, seed: int) -> D.Dataset:
    if limit is None or ds.n_samples <= limit:
        return ds
    idx, _ = train_test_split(np.arange(ds.n_samples), train_size=limit, random_state=seed,
                              stratify=ds.labels)
    return ds.with_rows(np.sort(idx))


def _run_plain(prep, W, b):
    timer = E.PhaseTimer()
    with timer.phase("train"):
        model = elm.fit(prep.train.features, prep.train.labels, W, b, "exact_sigmoid")
    with timer.phase("predict"):
        scores = elm.predict_scores(prep.test.features, model)
    return scores, timer.seconds


def _run_encrypted(prep, W, b, ctx, seed_key, workers):
    """Full encrypted pipeline; returns decrypted scores, phase times and beta."""
    timer = E.PhaseTimer()
    rng = np.random.default_rng(seed_key)
    with timer.phase("keygen"):
        keys = keygen(ctx, rng)
    outside = E.range_preflight(np.vstack([prep.train.features, prep.test.features]), W, b)
    with timer.phase("encrypt"):
        train = E.encrypt_dataset(prep.train.features, ctx, keys, rng)
        test = E.encrypt_dataset(prep.test.features, ctx, keys, rng)
        params = E.encrypt_model_params(W, b, ctx, keys, rng)
    trained, beta = E.train_encrypted(train, prep.train.labels, params, ctx, keys, rng,
                                      timer, workers)
    with timer.phase("predict"):
        enc_scores = E.predict_encrypted(test, trained, ctx, keys.public, workers)
    with timer.phase("decrypt"):
        scores = E.decrypt_scores(enc_scores, ctx, keys)
    return scores, timer.seconds, beta, len(outside)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Every (variant, hidden, seed) run; both output modes share one trained model."""
    report = ExperimentReport(cfg.echo(), seeds=cfg.seeds)
    ctx = build_context(cfg.ckks) if any(v.startswith("enc") for v in cfg.variants) else None
    cells: dict = {}
    for seed in cfg.seeds:
        spec = replace(cfg.split, seed=seed)
        prep = D.prepare(cfg.dataset, spec, cfg.data_dir, cfg.smote_order, cfg.scale_on_all)
        prep = D.Prepared(_subsample(prep.train, cfg.subsample, seed),
                          _subsample(prep.test, cfg.subsample, seed), prep.schema, prep.notes)
        report.notes.update(prep.notes)
        d = prep.train.n_features
        for h in cfg.hidden_nodes:
            n_hidden = d if h == INPUT_DIM else h
            for vi, variant in enumerate(cfg.variants):
                kind = "chaotic" if variant.endswith("chaotic") else "traditional"
                W, b = _draw_params("chaotic" if kind == "chaotic" else "uniform", d, n_hidden,
                                    seed, cfg.burn_in)
                cell = cells.setdefault((variant, h), CellResult(variant, h, n_hidden,
                                                                 {m: [] for m in cfg.output_modes}))
                if variant.startswith("enc"):
                    scores, times, beta, outside = _run_encrypted(
                        prep, W, b, ctx, [seed, n_hidden, vi], cfg.workers)
                    twin = elm.fit(prep.train.features, prep.train.labels, W, b, "poly_sigmoid")
                    ref = elm.predict_scores(prep.test.features, twin)
                    cell.fidelity.append({
                        "seed": seed,
                        "max_score_diff": float(np.max(np.abs(scores - ref))),
                        "label_agreement": float(np.mean(elm.classify(scores) == elm.classify(ref))),
                        "rows_outside_poly_range": outside,
                    })
                else:
                    scores, times = _run_plain(prep, W, b)
                for mode in cfg.output_modes:
                    labels = elm.classify(scores, "linear" if mode == "linear" else "extra_sigmoid")
                    cell.accuracy[mode].append(elm.accuracy(labels, prep.test.labels))
                cell.times.append(times)
                log.info("%s %s h=%s seed=%s done", cfg.dataset, variant, n_hidden, seed)
    for h in cfg.hidden_nodes:
        for v in cfg.variants:
            report.cells.append(cells[(v, h)])
    return report


# -- report output ------------------------------------------------------------------

def _hidden_label(h) -> str:
    return INPUT_DIM_LABEL if h == INPUT_DIM else str(h)


def _hidden_sort_key(h):
    return (1, 0) if h == INPUT_DIM else (0, h)


def markdown_report(report: ExperimentReport) -> str:
    cfg = report.config
    variants = [v for v in cfg["variants"].split(",") if v]
    modes = [m for m in cfg["output_modes"].split(",") if m]
    hidden = sorted({c.hidden for c in report.cells}, key=_hidden_sort_key)
    out = io.StringIO()
    out.write(f"# {cfg['dataset']}\n\n")
    out.write("Median over seeds; accuracy per output mode and wall time in seconds.\n\n")
    head = ["Hidden Nodes"]
    for v in variants:
        head += [f"{VARIANT_TITLES[v]} {m.capitalize()}" for m in modes] + [f"{VARIANT_TITLES[v]} Time"]
    out.write("| " + " | ".join(head) + " |\n")
    out.write("|" + "---|" * len(head) + "\n")
    for h in hidden:
        row = [_hidden_label(h)]
        for v in variants:
            c = report.cell(v, h)
            row += [f"{c.median_accuracy(m):.2f}" for m in modes] + [f"{c.median_time():.2f}"]
        out.write("| " + " | ".join(row) + " |\n")
    fid = [c for c in report.cells if c.fidelity]
    if fid:
        out.write("\n## Encrypted vs plaintext polynomial-sigmoid twin\n\n")
        out.write("| Variant | Hidden Nodes | Max score diff | Min label agreement |\n|---|---|---|---|\n")
        for c in fid:
            out.write(f"| {c.variant} | {_hidden_label(c.hidden)} | "
                      f"{max(f['max_score_diff'] for f in c.fidelity):.2e} | "
                      f"{min(f['label_agreement'] for f in c.fidelity):.4f} |\n")
    out.write("\n## Configuration\n\n")
    for k, v in {**cfg, **{f"note_{k}": v for k, v in sorted(report.notes.items())}}.items():
        out.write(f"- {k}: {v}\n")
    return out.getvalue()


CSV_FIELDS = ("dataset", "variant", "hidden_label", "hidden_nodes", "output_mode", "seed",
              "accuracy", "time_seconds")


def csv_report(report: ExperimentReport) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for c in report.cells:
        for mode, accs in c.accuracy.items():
            for seed, acc, t in zip(report.seeds, accs, c.times):
                w.writerow([report.config["dataset"], c.variant, _hidden_label(c.hidden),
                            c.resolved_hidden, mode, seed, f"{acc:.6f}", f"{sum(t.values()):.2f}"])
    return out.getvalue()


def read_report_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["hidden_nodes"] = int(r["hidden_nodes"])
        r["seed"] = int(r["seed"])
        r["accuracy"] = float(r["accuracy"])
        r["time_seconds"] = float(r["time_seconds"])
    return rows


def emit_report(report: ExperimentReport, fmt: str, path) -> Path:
    if fmt in ("md", "markdown", "markdown_table"):
        text = markdown_report(report)
    elif fmt == "csv":
        text = csv_report(report)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def write_reports(report: ExperimentReport, report_dir, formats=("md", "csv")) -> list[Path]:
    name = report.config["dataset"]
    ext = {"md": "md", "markdown": "md", "markdown_table": "md", "csv": "csv"}
    return [emit_report(report, f, Path(report_dir) / f"{name}.{ext.get(f, f)}") for f in formats]


# -- suites -------------------------------------------------------------------------

SUITE_KEYS = {"variants", "hidden", "seeds", "split", "ckks_profile", "output_mode",
              "smote_order", "scale_on_all", "burn_in", "data_dir", "workers", "subsample",
              "report_dir", "format", "datasets"}


def _csv_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def config_from_mapping(dataset: str, m: dict) -> ExperimentConfig:
    unknown = set(m) - SUITE_KEYS
    if unknown:
        raise ConfigError(f"unknown manifest key(s) {sorted(unknown)}")
    kw = {}
    if "variants" in m:
        kw["variants"] = _csv_list(m["variants"])
    if "hidden" in m:
        kw["hidden_nodes"] = _csv_list(m["hidden"])
    if "seeds" in m:
        kw["seeds"] = parse_seeds(m["seeds"])
    if "split" in m:
        kw["split"] = D.SplitSpec(float(m["split"]))
    if "ckks_profile" in m:
        kw["ckks_profile"] = m["ckks_profile"]
    if "output_mode" in m:
        kw["output_modes"] = _csv_list(m["output_mode"])
    if "smote_order" in m:
        kw["smote_order"] = m["smote_order"]
    if "scale_on_all" in m:
        kw["scale_on_all"] = m["scale_on_all"].lower() in ("1", "true", "yes")
    for key in ("burn_in", "workers", "subsample"):
        if key in m:
            kw[key] = int(m[key])
    if "data_dir" in m:
        kw["data_dir"] = m["data_dir"]
    return ExperimentConfig(dataset, **kw)


def read_manifest(path) -> tuple[dict, dict]:
    """Global settings and per-dataset overrides from a key=value manifest.

    Keys before any section header are global; ``[name]`` sections override
    them for one dataset. ``datasets`` lists the datasets to run in order.
    """
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string("[__global__]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"manifest: {exc}") from None
    glob = dict(parser["__global__"])
    per = {s: dict(parser[s]) for s in parser.sections() if s != "__global__"}
    return glob, per


@dataclass
class SuiteResult:
    reports: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    paths: list = field(default_factory=list)


def summary_markdown(result: SuiteResult) -> str:
    out = io.StringIO()
    out.write("# Suite summary\n\n")
    out.write("Best median linear accuracy over the hidden-node sweep.\n\n")
    out.write("| Dataset | Plain chaotic | Plain traditional | Encrypted chaotic | "
              "Encrypted traditional | Chaotic >= traditional |\n|---|---|---|---|---|---|\n")
    for name, rep in result.reports.items():
        best = {}
        for c in rep.cells:
            if "linear" in c.accuracy:
                best[c.variant] = max(best.get(c.variant, 0.0), c.median_accuracy("linear"))
        cells = [f"{best[v]:.2f}" if v in best else "-" for v in
                 ("plain_chaotic", "plain_traditional", "enc_chaotic", "enc_traditional")]
        verdicts = []
        for pre in ("plain", "enc"):
            a, b = best.get(f"{pre}_chaotic"), best.get(f"{pre}_traditional")
            if a is not None and b is not None:
                verdicts.append(f"{pre}: {'yes' if a >= b else 'no'}")
        out.write(f"| {name} | " + " | ".join(cells) + f" | {', '.join(verdicts) or '-'} |\n")
    if result.failures:
        out.write("\n## Failed datasets\n\n")
        for name, err in result.failures.items():
            out.write(f"- {name}: {err}\n")
    return out.getvalue()


def run_suite(manifest, report_dir=None) -> SuiteResult:
    glob, per = read_manifest(manifest)
    names = _csv_list(glob.get("datasets", "")) or list(per)
    if not names:
        raise ConfigError("manifest names no datasets")
    out_dir = Path(report_dir or glob.get("report_dir", "reports"))
    formats = _csv_list(glob.get("format", "md,csv"))
    result = SuiteResult()
    shared = {k: v for k, v in glob.items() if k not in ("datasets", "report_dir", "format")}
    for name in names:
        try:
            cfg = config_from_mapping(name, {**shared, **per.get(name, {})})
            rep = run_experiment(cfg)
        except Exception as exc:  # noqa: BLE001 - isolate per-dataset failures
            log.error("dataset %s failed: %s", name, exc)
            result.failures[name] = f"{type(exc).__name__}: {exc}"
            continue
        result.reports[name] = rep
        result.paths += write_reports(rep, out_dir, formats)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = out_dir / "summary.md"
    summary.write_text(summary_markdown(result), encoding="utf-8")
    result.paths.append(summary)
    return result


__all__ = ["VARIANTS", "OUTPUT_MODES", "INPUT_DIM", "ConfigError", "ExperimentConfig",
           "CellResult", "ExperimentReport", "run_experiment", "markdown_report", "csv_report",
           "read_report_csv", "emit_report", "write_reports", "read_manifest", "run_suite",
           "SuiteResult", "summary_markdown", "parse_seeds"]
