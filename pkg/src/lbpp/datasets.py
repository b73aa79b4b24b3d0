"""Bundled example point patterns.

These CSVs are synthetic stand-ins generated once with a fixed seed to match
the point counts and domains of three classic datasets (coal-mining accident
times on [1851, 1962], redwood tree locations on the unit square, caveolae
locations on the unit square). The original coordinate files are not
redistributed here; exact coordinates therefore differ from other copies.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .domain import BoxDomain, PointPattern, load_point_pattern

__all__ = ["DATASETS", "dataset_domain", "load_dataset"]

DATASETS = {
    "coal": {"lower": [1851.0], "upper": [1962.0], "count": 190},
    "redwood": {"lower": [0.0, 0.0], "upper": [1.0, 1.0], "count": 195},
    "cav": {"lower": [0.0, 0.0], "upper": [1.0, 1.0], "count": 138},
}


def dataset_domain(name: str) -> BoxDomain:
    info = DATASETS[name]
    return BoxDomain(np.asarray(info["lower"]), np.asarray(info["upper"]))


def load_dataset(name: str) -> PointPattern:
    """Load a bundled dataset by name ('coal', 'redwood', 'cav')."""
    if name not in DATASETS:
        raise KeyError(f"unknown dataset {name!r}; available: {sorted(DATASETS)}")
    ref = resources.files("lbpp.data").joinpath(f"{name}.csv")
    with resources.as_file(ref) as path:
        return load_point_pattern(path, dataset_domain(name))
