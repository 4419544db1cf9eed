"""Synthetic project corpora in the metric-CSV layout, for demos, tests and timing."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from ._rng import rng_for
from .data import METRICS, DefectDataset, ManifestEntry, write_csv, write_manifest


def make_dataset(project: str, version: str, n: int, seed: int = 0, shift: float = 0.0,
                 defect_rate: float = 0.2) -> DefectDataset:
    """Count-like metrics with a project-level scale shift; defect odds grow with
    size and coupling metrics."""
    rng = rng_for(seed, "synthetic", project, version)
    m = len(METRICS)
    scale = np.exp(rng.normal(1.5 + shift, 0.8, size=m))
    latent = rng.normal(size=(n, 1))
    X = rng.poisson(scale * np.exp(0.6 * latent + rng.normal(0, 0.5, size=(n, m))))
    risk = latent[:, 0] + 0.5 * rng.normal(size=n)
    cut = np.quantile(risk, 1 - defect_rate)
    bugs = np.where(risk > cut, rng.integers(1, 4, size=n), 0)
    if bugs.max() == 0:
        bugs[np.argmax(risk)] = 1
    if bugs.min() > 0:
        bugs[np.argmin(risk)] = 0
    return DefectDataset(project, version, X.astype(float), bugs)


def make_corpus(directory, projects: Sequence[str] = ("alpha", "beta", "gamma"),
                versions: int = 2, rows: int | Sequence[int] = 120, seed: int = 0) -> Path:
    """Write CSVs plus a manifest into ``directory``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = rng_for(seed, "corpus")
    entries = []
    i = 0
    for p_idx, project in enumerate(projects):
        shift = float(rng.normal(0, 0.4))
        for v in range(versions):
            n = rows if isinstance(rows, int) else int(rows[i % len(rows)])
            version = f"{v + 1}.0"
            d = make_dataset(project, version, n, seed, shift,
                             defect_rate=float(rng.uniform(0.1, 0.45)))
            path = directory / f"{project}-{version}.csv"
            write_csv(d, path)
            entries.append(ManifestEntry(path.name, project, version))
            i += 1
    manifest = directory / "manifest.txt"
    write_manifest(entries, manifest)
    return manifest
