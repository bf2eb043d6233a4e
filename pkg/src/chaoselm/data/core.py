"""Tabular dataset loading and preprocessing."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
from imblearn.over_sampling import SMOTE
from sklearn.model_selection import train_test_split


class DataError(ValueError):
    pass


# -- schemas ------------------------------------------------------------------------

@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # "numeric" or "categorical"
    levels: tuple = ()
    description: str = ""


@dataclass(frozen=True)
class Schema:
    name: str
    title: str
    file: str
    columns: tuple
    label: str
    label_description: str = ""
    standardize: bool = True
    smote: bool = False
    instances: int | None = None
    class_counts: dict = field(default_factory=dict)  # raw label -> count
    url: str | None = None
    url_member: str | None = None
    bundled: tuple | None = None  # (member, format, label map)

    @property
    def feature_names(self) -> tuple:
        return tuple(c.name for c in self.columns)

    @property
    def n_features(self) -> int:
        return len(self.columns)


def _parse_mapping(text: str) -> dict:
    out = {}
    for item in text.split(","):
        if item.strip():
            k, v = item.split(":" if ":" in item else "=", 1)
            out[k.strip()] = v.strip()
    return out


def parse_schema(text: str) -> Schema:
    """Read a ``key = value`` descriptor; ``column`` may repeat."""
    kv: dict = {}
    columns = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = (s.strip() for s in line.partition("="))
        if key == "column":
            name, kind, desc = (s.strip() for s in value.split("|", 2))
            levels = ()
            if kind.startswith("categorical"):
                _, _, lv = kind.partition(":")
                levels = tuple(s.strip() for s in lv.split(",") if s.strip())
                kind = "categorical"
            elif kind != "numeric":
                raise DataError(f"unknown column kind {kind!r}")
            columns.append(Column(name, kind, levels, desc))
        else:
            kv[key] = value
    label, _, label_desc = (s.strip() for s in kv["label"].partition("|"))
    bundled = None
    if "bundled" in kv:
        parts = [s.strip() for s in kv["bundled"].split("|")]
        bundled = (parts[0], parts[1], _parse_mapping(parts[2]) if len(parts) > 2 else {})
    counts = {k: int(v) for k, v in _parse_mapping(kv.get("class_counts", "")).items()}
    return Schema(
        name=kv["name"], title=kv.get("title", kv["name"]), file=kv["file"],
        columns=tuple(columns), label=label, label_description=label_desc,
        standardize=kv.get("standardize", "true").lower() == "true",
        smote=kv.get("smote", "false").lower() == "true",
        instances=int(kv["instances"]) if "instances" in kv else None,
        class_counts=counts, url=kv.get("url"), url_member=kv.get("url_member"),
        bundled=bundled)


def schema_names() -> list[str]:
    pkg = resources.files("chaoselm.data") / "schemas"
    return sorted(p.name[:-len(".schema")] for p in pkg.iterdir() if p.name.endswith(".schema"))


def load_schema(name: str) -> Schema:
    path = resources.files("chaoselm.data") / "schemas" / f"{name}.schema"
    if not path.is_file():
        raise DataError(f"unknown dataset {name!r}; known: {', '.join(schema_names())}")
    return parse_schema(path.read_text(encoding="utf-8"))


# -- datasets -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Dataset:
    """Features plus binary labels.

    ``features`` is float64 once every column is numeric; categorical columns
    hold their raw strings (object dtype) until :func:`label_encode`.
    ``label_levels[k]`` is the raw label mapped to class ``k``.
    """

    name: str
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    feature_kinds: tuple
    label_levels: tuple = ("0", "1")
    provenance: dict = field(default_factory=dict)
    encodings: dict = field(default_factory=dict)
    rejected_rows: tuple = ()

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise DataError("features and labels disagree on sample count")
        if self.features.shape[1] != len(self.feature_names):
            raise DataError("feature names do not match the column count")
        if self.labels.size and not np.isin(self.labels, (0, 1)).all():
            raise DataError("labels must be 0 or 1")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> dict:
        return {int(k): int(np.sum(self.labels == k)) for k in (0, 1)}

    def with_rows(self, idx) -> "Dataset":
        return replace(self, features=self.features[idx], labels=self.labels[idx])


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [[c.strip() for c in row] for row in csv.reader(fh) if any(c.strip() for c in row)]


def _sort_key(level: str):
    try:
        return (0, float(level), level)
    except ValueError:
        return (1, 0.0, level)


def load_csv(path, schema: Schema, on_bad_row: str = "error", validate: bool = True) -> Dataset:
    """Parse a comma-separated file laid out as the schema's columns then the label.

    A header row is recognised when its label cell is not a known class.
    Bad rows raise :class:`DataError`, or are dropped and listed in
    ``rejected_rows`` with ``on_bad_row="drop"``. With ``validate`` the
    instance and class counts must match the schema.
    """
    if on_bad_row not in ("error", "drop"):
        raise ValueError("on_bad_row must be 'error' or 'drop'")
    rows = _read_rows(path)
    width = schema.n_features + 1
    known = set(schema.class_counts)
    if rows and known and rows[0][-1] not in known:
        rows = rows[1:]
    feats, labels, rejected = [], [], []
    for lineno, row in enumerate(rows, 1):
        try:
            if len(row) != width:
                raise DataError(f"row {lineno}: expected {width} cells, found {len(row)}")
            parsed = []
            for col, cell in zip(schema.columns, row):
                if col.kind == "numeric":
                    try:
                        v = float(cell)
                    except ValueError:
                        raise DataError(f"row {lineno}: {col.name}={cell!r} is not numeric") from None
                    if not np.isfinite(v):
                        raise DataError(f"row {lineno}: {col.name} is not finite")
                    parsed.append(v)
                else:
                    if cell not in col.levels:
                        raise DataError(f"row {lineno}: unknown level {cell!r} for {col.name}")
                    parsed.append(cell)
            if known and row[-1] not in known:
                raise DataError(f"row {lineno}: unknown class {row[-1]!r}")
        except DataError as exc:
            if on_bad_row == "error":
                raise
            rejected.append(str(exc))
            continue
        feats.append(parsed)
        labels.append(row[-1])
    levels = tuple(sorted(known or set(labels), key=_sort_key))
    if len(levels) != 2:
        raise DataError(f"expected two classes, found {levels}")
    y = np.array([levels.index(v) for v in labels], dtype=np.int64)
    kinds = tuple(c.kind for c in schema.columns)
    dtype = np.float64 if all(k == "numeric" for k in kinds) else object
    X = np.array(feats, dtype=dtype).reshape(len(feats), schema.n_features)
    ds = Dataset(schema.name, X, y, schema.feature_names, kinds, levels,
                 {"path": str(path), "sha256": file_sha256(path)}, {}, tuple(rejected))
    if validate:
        check_counts(ds, schema)
    return ds


def check_counts(ds: Dataset, schema: Schema):
    if schema.instances is not None and ds.n_samples != schema.instances:
        raise DataError(f"{schema.name}: {ds.n_samples} rows, expected {schema.instances}")
    for raw, count in schema.class_counts.items():
        got = int(np.sum(ds.labels == ds.label_levels.index(raw)))
        if got != count:
            raise DataError(f"{schema.name}: class {raw!r} has {got} rows, expected {count}")


# -- preprocessing ------------------------------------------------------------------

def label_encode(ds: Dataset) -> Dataset:
    """Replace categorical strings by their rank in sorted level order.

    Levels come from the data itself, sorted lexicographically; the mapping
    is recorded in ``encodings``. Numeric columns pass through unchanged.
    """
    X = ds.features
    if X.dtype != object:
        return ds
    out = np.empty(X.shape, dtype=np.float64)
    enc = dict(ds.encodings)
    for j, (name, kind) in enumerate(zip(ds.feature_names, ds.feature_kinds)):
        if kind == "categorical":
            levels = tuple(sorted({str(v) for v in X[:, j]}))
            enc[name] = levels
            out[:, j] = [levels.index(str(v)) for v in X[:, j]]
        else:
            out[:, j] = X[:, j].astype(np.float64)
    return replace(ds, features=out, feature_kinds=("numeric",) * ds.n_features, encodings=enc)


def apply_encoding(ds: Dataset, encodings: dict) -> Dataset:
    """Encode with fixed level lists; unseen levels are an error."""
    X = ds.features
    if X.dtype != object:
        return ds
    out = np.empty(X.shape, dtype=np.float64)
    for j, name in enumerate(ds.feature_names):
        if name in encodings:
            levels = encodings[name]
            col = [str(v) for v in X[:, j]]
            unseen = set(col) - set(levels)
            if unseen:
                raise DataError(f"unseen level(s) {sorted(unseen)} in {name}")
            out[:, j] = [levels.index(v) for v in col]
        else:
            out[:, j] = X[:, j].astype(np.float64)
    return replace(ds, features=out, feature_kinds=("numeric",) * ds.n_features,
                   encodings=dict(encodings))


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        return cls(X.mean(axis=0), X.std(axis=0))

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        safe = np.where(self.std > 0, self.std, 1.0)
        return np.where(self.std > 0, (X - self.mean) / safe, 0.0)


def standardize(train: Dataset, *others: Dataset, fit_on: Dataset | None = None):
    """Z-score with population stddev; zero-variance columns become 0.

    Statistics come from ``train`` unless ``fit_on`` is given. Returns the
    transformed datasets followed by the fitted :class:`Standardizer`.
    """
    scaler = Standardizer.fit((fit_on or train).features)
    out = [replace(d, features=scaler.transform(d.features)) for d in (train, *others)]
    return (*out, scaler)


def smote(ds: Dataset, k: int = 5, target_count: int | None = None, seed=0) -> Dataset:
    """Oversample the minority class by interpolating towards its nearest neighbours.

    ``k`` is clamped to ``minority - 1``; originals are kept unchanged and
    synthetic rows are appended.
    """
    counts = ds.class_counts()
    minority = min(counts, key=lambda c: (counts[c], c))
    majority = 1 - minority
    m = counts[minority]
    target = counts[majority] if target_count is None else int(target_count)
    if target < m:
        raise DataError("target_count is below the current minority size")
    if target == m:
        return ds
    if m < 2:
        raise DataError("SMOTE needs at least two minority samples")
    k = max(1, min(k, m - 1))
    sampler = SMOTE(sampling_strategy={minority: target}, k_neighbors=k,
                    random_state=int(np.random.SeedSequence(seed).generate_state(1)[0]))
    X, y = sampler.fit_resample(np.asarray(ds.features, dtype=np.float64), ds.labels)
    prov = dict(ds.provenance, smote=f"k={k}, minority {m}->{target}")
    return replace(ds, features=X, labels=y.astype(np.int64), provenance=prov)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def split(ds: Dataset, spec: SplitSpec = SplitSpec()) -> tuple[Dataset, Dataset]:
    idx = np.arange(ds.n_samples)
    train_idx, test_idx = train_test_split(
        idx, train_size=spec.train_fraction, random_state=spec.seed,
        stratify=ds.labels if spec.stratified else None)
    train_idx, test_idx = np.sort(train_idx), np.sort(test_idx)
    for name, part in (("train", train_idx), ("test", test_idx)):
        present = set(np.unique(ds.labels[part]).tolist())
        if present != {0, 1}:
            raise DataError(f"{name} fold is missing a class")
    return ds.with_rows(train_idx), ds.with_rows(test_idx)
