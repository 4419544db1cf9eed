"""Defect datasets: CSV ingestion, log preprocessing and cross-project pools."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

METRICS: tuple[str, ...] = (
    "wmc", "dit", "noc", "cbo", "rfc", "lcom", "ca", "ce", "npm", "lcom3",
    "loc", "dam", "moa", "mfa", "cam", "ic", "cbm", "amc", "max_cc", "avg_cc",
)
IDENTIFIER_COLUMNS = ("name", "version", "name.1", "project")
BUG_COLUMN = "bug"


class SchemaError(ValueError):
    """A required column is missing or the schema itself is malformed."""


class ParseError(ValueError):
    """A cell could not be parsed as a number."""


class ConfigError(ValueError):
    """The requested experiment configuration cannot be built."""


@dataclass(frozen=True)
class MetricSchema:
    names: tuple[str, ...] = METRICS

    def __post_init__(self):
        if len(self.names) != 20:
            raise SchemaError(f"schema needs exactly 20 metrics, got {len(self.names)}")
        if len(set(self.names)) != len(self.names):
            raise SchemaError("metric names must be unique")

    def __len__(self) -> int:
        return len(self.names)


DEFAULT_SCHEMA = MetricSchema()


@dataclass(frozen=True, eq=False)
class DefectDataset:
    """One project version: an n x 20 metric matrix with binarized defect labels."""

    project: str
    version: str
    rows: np.ndarray
    bug_counts: np.ndarray
    labels: np.ndarray = field(default=None)
    schema: MetricSchema = DEFAULT_SCHEMA

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        counts = np.array(self.bug_counts, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != len(self.schema):
            raise SchemaError(f"rows must be n x {len(self.schema)}, got {rows.shape}")
        if rows.shape[0] < 1:
            raise SchemaError("dataset must have at least one row")
        if counts.shape != (rows.shape[0],):
            raise SchemaError("row count differs from label count")
        if not np.all(np.isfinite(rows)):
            raise ParseError("metric values must be finite")
        if np.any(counts < 0):
            raise ParseError("bug counts must be nonnegative")
        labels = (counts > 0).astype(np.int8)
        if self.labels is not None and not np.array_equal(np.asarray(self.labels), labels):
            raise SchemaError("labels disagree with bug counts")
        rows.setflags(write=False)
        counts.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "bug_counts", counts)
        object.__setattr__(self, "labels", labels)

    @property
    def name(self) -> str:
        return f"{self.project}-{self.version}"

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def n_defective(self) -> int:
        return int(self.labels.sum())

    @property
    def defect_rate(self) -> float:
        return self.n_defective / self.n

    def __repr__(self) -> str:
        return f"DefectDataset({self.name!r}, n={self.n}, defective={self.n_defective})"


@dataclass(frozen=True)
class CrossProjectPool:
    datasets: tuple[DefectDataset, ...]
    held_out_project: str

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        for d in self.datasets:
            if d.project == self.held_out_project:
                raise ConfigError(f"{d.name} belongs to the held-out project")

    def __len__(self) -> int:
        return len(self.datasets)

    def __iter__(self):
        return iter(self.datasets)

    def concatenated(self) -> tuple[np.ndarray, np.ndarray]:
        """All pool rows stacked in pool order, with their labels."""
        X = np.vstack([d.rows for d in self.datasets])
        y = np.concatenate([d.labels for d in self.datasets])
        return X, y


def _parse_bug(value: str, row: int) -> int:
    v = value.strip().lower()
    if v in ("true", "yes"):
        return 1
    if v in ("false", "no"):
        return 0
    try:
        f = float(v)
    except ValueError:
        raise ParseError(f"row {row}: bug value {value!r} is not numeric") from None
    if not math.isfinite(f) or f < 0 or f != int(f):
        raise ParseError(f"row {row}: bug value {value!r} is not a nonnegative count")
    return int(f)


def load_csv(path, schema: MetricSchema = DEFAULT_SCHEMA, project: str | None = None,
             version: str | None = None) -> DefectDataset:
    """Read a PROMISE-style CSV file.

    The header must contain every schema metric plus a ``bug`` column. Identifier
    columns (name, version) are ignored as features; any other column is dropped
    with a warning. Row indices in errors are 1-based data rows.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        index = {h: i for i, h in enumerate(header)}
        for col in (*schema.names, BUG_COLUMN):
            if col not in index:
                raise SchemaError(f"{path}: missing column {col!r}")
        extra = [h for h in header
                 if h not in schema.names and h != BUG_COLUMN and h not in IDENTIFIER_COLUMNS]
        if extra:
            log.warning("%s: ignoring extra columns %s", path, extra)
        cols = [index[c] for c in schema.names]
        bug_col = index[BUG_COLUMN]
        version_col = index.get("version")
        rows, bugs = [], []
        file_version = None
        for r, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) < len(header):
                raise ParseError(f"{path}: row {r} has {len(rec)} fields, expected {len(header)}")
            try:
                rows.append([float(rec[c]) for c in cols])
            except ValueError:
                bad = next(schema.names[k] for k, c in enumerate(cols) if not _is_float(rec[c]))
                raise ParseError(f"{path}: row {r}, column {bad!r}: non-numeric value") from None
            bugs.append(_parse_bug(rec[bug_col], r))
            if version_col is not None and file_version is None:
                file_version = rec[version_col].strip()
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    if project is None or version is None:
        stem_project, _, stem_version = path.stem.rpartition("-")
        project = project or stem_project or path.stem
        version = version or stem_version or file_version or "0"
    return DefectDataset(project, version, np.array(rows), np.array(bugs), schema=schema)


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def write_csv(d: DefectDataset, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "version", *d.schema.names, BUG_COLUMN])
        for row, bug in zip(d.rows, d.bug_counts):
            w.writerow([d.project, d.version, *(repr(float(v)) for v in row), int(bug)])


def log_transform(d: DefectDataset) -> DefectDataset:
    """Replace every metric value x by ln(x + 1)."""
    if np.any(d.rows < 0):
        raise ValueError(f"{d.name}: log transform needs nonnegative metric values")
    return DefectDataset(d.project, d.version, np.log1p(d.rows), d.bug_counts, schema=d.schema)


def build_pool(collection: Sequence[DefectDataset], target: DefectDataset) -> CrossProjectPool:
    """Every dataset of the collection except the versions of the target's project."""
    if not any(d.project == target.project for d in collection):
        raise ConfigError(f"project {target.project!r} is not in the collection")
    pool = [d for d in collection if d.project != target.project]
    if not pool:
        raise ConfigError(f"no training data left after removing project {target.project!r}")
    return CrossProjectPool(tuple(pool), target.project)


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    project: str
    version: str


def read_manifest(path) -> list[ManifestEntry]:
    """Parse ``<csv path> <project> <version>`` lines; paths resolve against the manifest."""
    path = Path(path)
    entries = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ConfigError(f"{path}:{lineno}: expected '<path> <project> <version>'")
        p = Path(parts[0])
        if not p.is_absolute():
            p = path.parent / p
        entries.append(ManifestEntry(p, parts[1], parts[2]))
    if not entries:
        raise ConfigError(f"{path}: manifest lists no datasets")
    return entries


def write_manifest(entries: Iterable[ManifestEntry], path) -> None:
    lines = ["# path project version"]
    lines += [f"{e.path} {e.project} {e.version}" for e in entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_manifest(path, schema: MetricSchema = DEFAULT_SCHEMA, log_scale: bool = True
                  ) -> list[DefectDataset]:
    """Load every dataset listed in a manifest, log-transformed unless told otherwise."""
    out = []
    for e in read_manifest(path):
        d = load_csv(e.path, schema, project=e.project, version=e.version)
        out.append(log_transform(d) if log_scale else d)
    names = [d.name for d in out]
    if len(set(names)) != len(names):
        raise ConfigError(f"{path}: duplicate project/version entries")
    return out


def summarize_datasets(datasets: Sequence[DefectDataset]) -> list[tuple[str, int, int, float]]:
    """(name, examples, defective, defect rate) rows plus a Total row."""
    rows = [(d.name, d.n, d.n_defective, round(d.defect_rate, 2)) for d in datasets]
    n = sum(d.n for d in datasets)
    k = sum(d.n_defective for d in datasets)
    rows.append(("Total", n, k, round(k / n, 2) if n else 0.0))
    return rows
