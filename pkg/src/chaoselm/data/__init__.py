"""Benchmark datasets: schemas, loading, preprocessing and fetching."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .core import (Column, DataError, Dataset, Schema, SplitSpec, Standardizer, apply_encoding,
                   check_counts, file_sha256, label_encode, load_csv, load_schema, parse_schema,
                   schema_names, smote, split, standardize)
from .fetch import (DATA_DIR_ENV, FetchResult, default_data_dir, fetch_all, fetch_dataset,
                    read_checksums, record_checksum, verify_checksum)

SMOTE_ORDERS = ("pre", "post")


def dataset_path(name: str, data_dir=None) -> Path:
    return Path(data_dir or default_data_dir()) / load_schema(name).file


def dataset_available(name: str, data_dir=None) -> bool:
    return dataset_path(name, data_dir).is_file()


def load_dataset(name: str, data_dir=None, verify: bool = True, validate: bool = True) -> Dataset:
    schema = load_schema(name)
    path = dataset_path(name, data_dir)
    if not path.is_file():
        raise DataError(f"{path} not found; run 'chaoselm fetch-data' first")
    if verify:
        verify_checksum(path, path.parent)
    return load_csv(path, schema, validate=validate)


@dataclass(frozen=True, eq=False)
class Prepared:
    train: Dataset
    test: Dataset
    schema: Schema
    notes: dict = field(default_factory=dict)


def prepare(name: str, spec: SplitSpec = SplitSpec(), data_dir=None, smote_order: str = "pre",
            scale_on_all: bool = False, smote_k: int = 5, verify: bool = True,
            dataset: Dataset | None = None) -> Prepared:
    """Load, encode, balance, split and standardize one benchmark dataset.

    SMOTE runs only for schemas that ask for it, either on the whole set
    before splitting (``pre``) or on the training fold (``post``).
    Standardization statistics come from the training fold unless
    ``scale_on_all`` is set.
    """
    if smote_order not in SMOTE_ORDERS:
        raise ValueError(f"smote_order must be one of {SMOTE_ORDERS}")
    schema = load_schema(name)
    ds = dataset if dataset is not None else load_dataset(name, data_dir, verify)
    ds = label_encode(ds)
    notes = {"split": f"{'stratified ' if spec.stratified else ''}"
                      f"{spec.train_fraction:g}/{1 - spec.train_fraction:g} seed={spec.seed}"}
    if schema.smote and smote_order == "pre":
        ds = smote(ds, smote_k, seed=spec.seed)
        notes["smote"] = f"pre-split, k={smote_k}, counts {ds.class_counts()}"
    train, test = split(ds, spec)
    if schema.smote and smote_order == "post":
        train = smote(train, smote_k, seed=spec.seed)
        notes["smote"] = f"train fold only, k={smote_k}, counts {train.class_counts()}"
    if schema.standardize:
        train, test, _ = standardize(train, test, fit_on=ds if scale_on_all else None)
        notes["standardize"] = "fit on all rows" if scale_on_all else "fit on train fold"
    else:
        notes["standardize"] = "off (categorical features)"
    return Prepared(train, test, schema, notes)


__all__ = [
    "Column", "DataError", "Dataset", "Schema", "SplitSpec", "Standardizer", "apply_encoding",
    "check_counts", "file_sha256", "label_encode", "load_csv", "load_schema", "parse_schema",
    "schema_names", "smote", "split", "standardize", "DATA_DIR_ENV", "FetchResult",
    "default_data_dir", "fetch_all", "fetch_dataset", "read_checksums", "record_checksum",
    "verify_checksum", "SMOTE_ORDERS", "dataset_path", "dataset_available", "load_dataset",
    "Prepared", "prepare",
]
