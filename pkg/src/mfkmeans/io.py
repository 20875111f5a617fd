"""File formats.

Curves are stored in long CSV format with header
``curve_id,component,t_index,value`` (components ``1..J``, ``t_index``
``0..T-1``). Labels use ``curve_id,label`` and a grid is the JSON object
``{"t_min": .., "t_max": .., "T": ..}``. Floats are written with ``repr`` so
that a write/read round trip is exact.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import FunctionalSample, Grid
from .exceptions import IngestionError

CURVE_HEADER = ["curve_id", "component", "t_index", "value"]
LABEL_HEADER = ["curve_id", "label"]


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def read_grid(path) -> Grid:
    try:
        with open(path) as fh:
            d = json.load(fh)
        return Grid.from_dict(d)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise IngestionError(f"invalid grid file: {exc}", path) from None


def write_grid(grid: Grid, path) -> None:
    with open(path, "w") as fh:
        json.dump(grid.to_dict(), fh, indent=2)
        fh.write("\n")


def write_sample(sample: FunctionalSample, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_HEADER)
        for cid, curve in zip(sample.ids, sample.values):
            for l, comp in enumerate(curve, start=1):
                for j, v in enumerate(comp):
                    w.writerow([cid, l, j, repr(float(v))])


def write_labels(ids: Sequence, labels: Sequence, path, header=LABEL_HEADER) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for cid, lab in zip(ids, labels):
            w.writerow([cid, lab.item() if isinstance(lab, np.generic) else lab])


def _open_csv(path):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IngestionError(f"cannot open: {exc.strerror}", path) from None
    return fh


def read_labels(path) -> dict:
    """Map ``curve_id -> label`` (both as strings)."""
    out = {}
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != LABEL_HEADER:
            raise IngestionError(f"expected header {','.join(LABEL_HEADER)}", path, 1)
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise IngestionError(f"expected 2 fields, got {len(row)}", path, row_no)
            cid, lab = row[0].strip(), row[1].strip()
            if cid in out:
                raise IngestionError(f"duplicate curve_id {cid!r}", path, row_no)
            out[cid] = lab
    return out


def read_sample(path, grid: Optional[Grid] = None, labels_path=None) -> FunctionalSample:
    """Read a long-format curve CSV.

    Curves keep the order in which their ids first appear. Without ``grid``
    the curves are placed on an equispaced grid over ``[0, 1]``.
    """
    cells = {}
    order = []
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CURVE_HEADER:
            raise IngestionError(f"expected header {','.join(CURVE_HEADER)}", path, 1)
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise IngestionError(f"expected 4 fields, got {len(row)}", path, row_no)
            cid = row[0].strip()
            try:
                comp = int(row[1])
                t_idx = int(row[2])
                val = float(row[3])
            except ValueError as exc:
                raise IngestionError(f"unparsable field: {exc}", path, row_no) from None
            if comp < 1 or t_idx < 0:
                raise IngestionError("component must be >= 1 and t_index >= 0", path, row_no)
            if not math.isfinite(val):
                raise IngestionError("non-finite value", path, row_no)
            if cid not in cells:
                cells[cid] = {}
                order.append(cid)
            key = (comp, t_idx)
            if key in cells[cid]:
                raise IngestionError(
                    f"duplicate entry for curve {cid!r}, component {comp}, t_index {t_idx}", path, row_no
                )
            cells[cid][key] = val
    if len(order) < 2:
        raise IngestionError(f"need at least 2 curves, found {len(order)}", path)

    J = max(c for cid in order for c, _ in cells[cid])
    T = max(t for cid in order for _, t in cells[cid]) + 1
    values = np.empty((len(order), J, T))
    for i, cid in enumerate(order):
        if len(cells[cid]) != J * T:
            raise IngestionError(
                f"curve {cid!r} has {len(cells[cid])} values, expected {J} x {T} = {J * T}", path
            )
        for (c, t), v in cells[cid].items():
            values[i, c - 1, t] = v
    if grid is None:
        grid = Grid.uniform(0.0, 1.0, T)
    elif grid.size != T:
        raise IngestionError(f"data have {T} grid points but the grid file declares {grid.size}", path)

    labels = None
    if labels_path is not None:
        lab = read_labels(labels_path)
        missing = [cid for cid in order if cid not in lab]
        if missing:
            raise IngestionError(f"no label for curve(s) {', '.join(missing[:5])}", labels_path)
        labels = tuple(lab[cid] for cid in order)
    return FunctionalSample(values, grid, labels, tuple(order))


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
