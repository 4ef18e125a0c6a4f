"""Load externally measured hover trajectories and summarize them."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .sde import Ensemble, empirical_cdf

__all__ = ["IngestError", "IngestedTrajectory", "ingest_trajectory", "ecdf_csv"]


class IngestError(ValueError):
    pass


@dataclass
class IngestedTrajectory:
    """Positions relative to the target, plus derived summaries."""

    positions: np.ndarray           # (n, 3)
    target: tuple

    @property
    def radial(self):
        return np.sqrt(np.sum(self.positions ** 2, axis=1))

    @property
    def xy_distance(self):
        return np.hypot(self.positions[:, 0], self.positions[:, 1])

    def axis(self, name):
        return self.positions[:, "xyz".index(name)]

    def ecdf(self, quantity, grid):
        data = self.radial if quantity == "r" else self.axis(quantity)
        return empirical_cdf(data, grid=grid)

    def xy_z_correlation(self):
        """Pearson correlation of horizontal distance with the signed z offset."""
        a, b = self.xy_distance, self.positions[:, 2]
        if a.size < 2 or np.std(a) == 0 or np.std(b) == 0:
            return float("nan")
        return float(np.corrcoef(a, b)[0, 1])

    def to_ensemble(self):
        samples = np.zeros((self.positions.shape[0], 6))
        samples[:, :3] = self.positions
        return Ensemble(samples=samples, times=np.arange(self.positions.shape[0], dtype=float))


def _open(source):
    if hasattr(source, "read"):
        return source, False
    return open(source, encoding="utf-8", newline=""), True


def ingest_trajectory(source, target=(0.0, 0.0, 0.0)) -> IngestedTrajectory:
    """Read a CSV with ``x``, ``y``, ``z`` header columns (other columns ignored).

    Errors name the offending data row (1-based, header excluded) and column.
    """
    target = tuple(float(t) for t in target)
    if len(target) != 3 or not all(np.isfinite(target)):
        raise IngestError("target must be three finite coordinates")
    fh, close = _open(source)
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestError("file is empty")
        names = [h.strip().lower() for h in header]
        missing = [c for c in "xyz" if c not in names]
        if missing:
            raise IngestError(f"missing column(s): {', '.join(missing)}")
        idx = [names.index(c) for c in "xyz"]
        rows = []
        for n, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            vals = []
            for c, i in zip("xyz", idx):
                if i >= len(row):
                    raise IngestError(f"row {n}: missing value for {c}")
                try:
                    v = float(row[i])
                except ValueError:
                    raise IngestError(f"row {n}: non-numeric {c} value {row[i]!r}") from None
                if not np.isfinite(v):
                    raise IngestError(f"row {n}: non-finite {c} value {row[i]!r}")
                vals.append(v)
            rows.append(vals)
    finally:
        if close:
            fh.close()
    if not rows:
        raise IngestError("no data rows")
    pos = np.asarray(rows, dtype=float) - np.asarray(target)
    return IngestedTrajectory(positions=pos, target=target)


def ecdf_csv(traj: IngestedTrajectory, grid) -> str:
    """``value,cdf_x,cdf_y,cdf_z,cdf_r`` on a common grid."""
    grid = np.asarray(grid, dtype=float)
    cols = [traj.ecdf(q, grid) for q in ("x", "y", "z", "r")]
    buf = io.StringIO()
    buf.write("value,cdf_x,cdf_y,cdf_z,cdf_r\n")
    for row in zip(grid.tolist(), *(c.tolist() for c in cols)):
        buf.write(",".join(map(repr, row)) + "\n")
    return buf.getvalue()
