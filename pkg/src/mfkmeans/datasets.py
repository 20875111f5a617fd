"""Berkeley Growth Study heights (93 children, 31 ages from 1 to 18 years).

The data are distributed with the R package ``fda`` as ``growth$hgtm``
(39 boys) and ``growth$hgtf`` (54 girls), each a 31 x n table of heights in
cm with ages as row names. :func:`import_growth_tables` converts CSV exports
of those two tables, e.g. from ``write.csv(growth$hgtm, "hgtm.csv")``, into the
long format read by :func:`load_growth`.

Ages are irregular (quarterly, then yearly, then half-yearly). Curves are
placed on the equispaced nominal grid of 31 points over ``[1, 18]``, and the
original ages are kept in ``GROWTH_AGES`` for reference.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path
from typing import Optional

import numpy as np

from .core import FunctionalSample, Grid
from .exceptions import IngestionError
from .io import read_grid, read_sample, write_grid, write_labels, write_sample

GROWTH_AGES = tuple(
    [1.0, 1.25, 1.5, 1.75, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
    + [8.5 + 0.5 * i for i in range(20)]
)
GROWTH_GRID = Grid.uniform(1.0, 18.0, len(GROWTH_AGES))
DATA_DIR = Path(__file__).parent / "data"
ENV_VAR = "MFKMEANS_GROWTH_DIR"

_FILES = ("growth.csv", "growth_labels.csv", "growth_grid.json")


def growth_dir(path: Optional[os.PathLike] = None) -> Path:
    if path is not None:
        return Path(path)
    return Path(os.environ.get(ENV_VAR, DATA_DIR))


def growth_available(path: Optional[os.PathLike] = None) -> bool:
    d = growth_dir(path)
    return all((d / f).is_file() for f in _FILES)


def load_growth(path: Optional[os.PathLike] = None) -> FunctionalSample:
    """The 93 growth curves with labels ``"boy"``/``"girl"``."""
    d = growth_dir(path)
    if not growth_available(d):
        raise FileNotFoundError(
            f"growth data not found in {d}. Export growth$hgtm and growth$hgtf from the R "
            f"package fda with write.csv and run `mfkmeans import-growth hgtm.csv hgtf.csv`."
        )
    return read_sample(d / "growth.csv", read_grid(d / "growth_grid.json"), d / "growth_labels.csv")


def _read_r_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise IngestionError("empty table", path)
    header = rows[0]
    ids = [h.strip() for h in header[1:]]
    body = rows[1:]
    if len(body) != len(GROWTH_AGES):
        raise IngestionError(f"expected {len(GROWTH_AGES)} age rows, found {len(body)}", path)
    values = np.empty((len(body), len(ids)))
    for r, row in enumerate(body):
        if len(row) != len(ids) + 1:
            raise IngestionError(f"expected {len(ids) + 1} fields, got {len(row)}", path, r + 2)
        try:
            age = float(row[0].strip().strip('"'))
            values[r] = [float(x) for x in row[1:]]
        except ValueError as exc:
            raise IngestionError(f"unparsable field: {exc}", path, r + 2) from None
        if not np.isclose(age, GROWTH_AGES[r]):
            raise IngestionError(f"row age {age} does not match expected {GROWTH_AGES[r]}", path, r + 2)
    return ids, values.T


def import_growth_tables(boys_csv, girls_csv, out_dir: Optional[os.PathLike] = None) -> FunctionalSample:
    """Convert R exports of ``hgtm`` and ``hgtf`` and write them to ``out_dir``."""
    boy_ids, boys = _read_r_table(boys_csv)
    girl_ids, girls = _read_r_table(girls_csv)
    ids = tuple(boy_ids + girl_ids)
    if len(set(ids)) != len(ids):
        raise IngestionError("child ids are not unique across the two tables")
    labels = ("boy",) * len(boy_ids) + ("girl",) * len(girl_ids)
    values = np.concatenate([boys, girls])[:, np.newaxis, :]
    sample = FunctionalSample(values, GROWTH_GRID, labels, ids)
    d = growth_dir(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    write_sample(sample, d / "growth.csv")
    write_labels(sample.ids, sample.labels, d / "growth_labels.csv")
    write_grid(GROWTH_GRID, d / "growth_grid.json")
    return sample
