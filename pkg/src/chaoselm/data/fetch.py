"""Download the benchmark datasets into canonical CSV files and record checksums.

Each dataset is tried from its public URL first. When the network is not
reachable, files bundled with the optional ``common_datasets`` package are
converted instead (Haberman, Diabetes and Fertility only).
"""

from __future__ import annotations

import csv
import io
import logging
import os
import urllib.request
import zipfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .core import DataError, Schema, file_sha256, load_schema, schema_names

log = logging.getLogger(__name__)

DATA_DIR_ENV = "CHAOSELM_DATA_DIR"
CHECKSUM_FILE = "CHECKSUMS"


def default_data_dir() -> Path:
    env = os.environ.get(DATA_DIR_ENV)
    return Path(env) if env else Path.home() / ".cache" / "chaoselm" / "data"


@dataclass(frozen=True)
class FetchResult:
    name: str
    path: Path | None
    source: str
    sha256: str | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


# -- checksum manifest --------------------------------------------------------------

def read_checksums(data_dir) -> dict:
    """filename -> (sha256, source)."""
    path = Path(data_dir) / CHECKSUM_FILE
    out = {}
    if path.is_file():
        for line in path.read_text(encoding="utf-8").splitlines():
            parts = line.split()
            if len(parts) >= 2 and not line.startswith("#"):
                out[parts[1]] = (parts[0], " ".join(parts[2:]))
    return out


def record_checksum(data_dir, filename: str, sha: str, source: str):
    entries = read_checksums(data_dir)
    entries[filename] = (sha, source)
    lines = [f"{h}  {name}  {src}".rstrip() for name, (h, src) in sorted(entries.items())]
    (Path(data_dir) / CHECKSUM_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8")


def verify_checksum(path, data_dir=None):
    """Raise :class:`DataError` when ``path`` differs from its recorded hash."""
    path = Path(path)
    entries = read_checksums(data_dir or path.parent)
    if path.name not in entries:
        log.warning("no recorded checksum for %s; run fetch-data to register it", path)
        return None
    expected = entries[path.name][0]
    actual = file_sha256(path)
    if actual != expected:
        raise DataError(f"{path.name}: checksum {actual[:12]} does not match recorded "
                        f"{expected[:12]}; re-fetch or pass verify=False")
    return actual


# -- conversion ---------------------------------------------------------------------

def _canonical_rows(text: str, schema: Schema, label_map: dict | None = None,
                    keel: bool = False) -> list[list[str]]:
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or (keel and line.startswith("@")):
            continue
        cells = [c.strip() for c in next(csv.reader([line]))]
        rows.append(cells)
    known = set(schema.class_counts)
    if rows and known and rows[0][-1] not in known and not label_map:
        rows = rows[1:]  # header
    if label_map:
        for r in rows:
            if r[-1] not in label_map:
                raise DataError(f"unexpected label {r[-1]!r} in bundled {schema.name} data")
            r[-1] = label_map[r[-1]]
    return rows


def _write_canonical(path: Path, schema: Schema, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(schema.feature_names) + [schema.label])
        w.writerows(rows)


def _download(schema: Schema, timeout: float) -> str:
    with urllib.request.urlopen(schema.url, timeout=timeout) as resp:
        payload = resp.read()
    if schema.url_member:
        with zipfile.ZipFile(io.BytesIO(payload)) as zf:
            payload = zf.read(schema.url_member)
    return payload.decode("utf-8-sig")


def _bundled(schema: Schema) -> tuple[str, dict, bool]:
    member, fmt, label_map = schema.bundled
    try:
        root = resources.files("common_datasets")
    except ModuleNotFoundError:
        raise DataError("offline fallback needs the 'common_datasets' package") from None
    path = root / "data" / "classification" / member
    if not path.is_file():
        raise DataError(f"bundled file {member} not found")
    return path.read_text(encoding="utf-8"), label_map, fmt == "keel"


def fetch_dataset(name: str, data_dir=None, offline: bool = False,
                  timeout: float = 20.0) -> FetchResult:
    schema = load_schema(name)
    data_dir = Path(data_dir or default_data_dir())
    data_dir.mkdir(parents=True, exist_ok=True)
    target = data_dir / schema.file
    errors = []
    attempts = []
    if schema.url and not offline:
        attempts.append(("url", lambda: (_download(schema, timeout), None, False)))
    if schema.bundled:
        attempts.append(("common_datasets", lambda: _bundled(schema)))
    for source, get in attempts:
        try:
            text, label_map, keel = get()
            rows = _canonical_rows(text, schema, label_map, keel)
            _write_canonical(target, schema, rows)
        except Exception as exc:  # noqa: BLE001 - any failure moves to the next source
            errors.append(f"{source}: {exc}")
            continue
        origin = schema.url if source == "url" else f"common_datasets:{schema.bundled[0]}"
        sha = file_sha256(target)
        record_checksum(data_dir, schema.file, sha, origin)
        return FetchResult(name, target, origin, sha)
    if target.is_file():
        # Placed by hand: register it so later loads detect changes.
        sha = file_sha256(target)
        if schema.file not in read_checksums(data_dir):
            record_checksum(data_dir, schema.file, sha, "manual")
        return FetchResult(name, target, "manual", sha)
    if not attempts:
        errors.append(f"no download source; place {schema.file} in {data_dir} by hand")
    return FetchResult(name, None, "", None, "; ".join(errors))


def fetch_all(data_dir=None, names=None, offline: bool = False,
              timeout: float = 20.0) -> list[FetchResult]:
    return [fetch_dataset(n, data_dir, offline, timeout) for n in (names or schema_names())]
