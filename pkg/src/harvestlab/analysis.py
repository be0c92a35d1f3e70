"""Entanglement regions per c3 slice and cross-strategy comparison."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .physics import sp_entangled
from .sweep import KEY_DECIMALS, SweepRecord, grid_key

# Guards the relative-difference denominator when both values vanish.
TINY = 1e-300

REGION_COLUMNS = ("c1", "c2", "c3", "signed_N", "numeric", "sp", "boundary_uncertain")


class AnalysisError(ValueError):
    pass


class IncompleteSlice(AnalysisError):
    pass


class DimensionMismatch(AnalysisError):
    pass


class KeyMismatch(AnalysisError):
    pass


def _k(v: float) -> str:
    return f"{v:.{KEY_DECIMALS}f}"


@dataclass(frozen=True)
class RegionGrid:
    """Entanglement masks on a (c1, c2) slice; arrays are indexed ``[i_c1, j_c2]``."""

    c3: float
    c1_axis: np.ndarray
    c2_axis: np.ndarray
    c1_step: float
    c2_step: float
    numeric_mask: np.ndarray
    sp_mask: np.ndarray
    signed_N: np.ndarray
    boundary_uncertain: np.ndarray

    def __post_init__(self):
        shape = (len(self.c1_axis), len(self.c2_axis))
        for name in ("numeric_mask", "sp_mask", "signed_N", "boundary_uncertain"):
            if getattr(self, name).shape != shape:
                raise DimensionMismatch(f"{name} has shape {getattr(self, name).shape}, expected {shape}")


def _step(axis: Sequence[float], given: float | None) -> float:
    if given is not None:
        return float(given)
    if len(axis) < 2:
        raise AnalysisError("cannot infer the step of a single-valued axis; pass it explicitly")
    return float(np.round(np.min(np.diff(axis)), 12))


def slice_records(records: Iterable[SweepRecord], c3: float) -> list[SweepRecord]:
    key = _k(c3)
    return [r for r in records if _k(r.c3) == key]


def extract_region(records: Iterable[SweepRecord], c3: float,
                   c1_axis: Sequence[float] | None = None,
                   c2_axis: Sequence[float] | None = None,
                   c1_step: float | None = None,
                   c2_step: float | None = None) -> RegionGrid:
    """Build the numeric and stationary-phase masks for one c3 slice.

    When the axes are not given they are taken from the records themselves.
    Every (c1, c2) combination of the axes must have a record.

    Raises:
        IncompleteSlice: a grid point of the slice has no record.
    """
    recs = slice_records(records, c3)
    if c1_axis is None:
        c1_axis = sorted({r.c1 for r in recs})
    if c2_axis is None:
        c2_axis = sorted({r.c2 for r in recs})
    if not recs or not len(c1_axis) or not len(c2_axis):
        raise IncompleteSlice(f"no records for c3 = {c3}")
    by_key = {r.key: r for r in recs}
    shape = (len(c1_axis), len(c2_axis))
    signed = np.empty(shape)
    uncertain = np.zeros(shape, dtype=bool)
    sp = np.zeros(shape, dtype=bool)
    missing = []
    for i, c1 in enumerate(c1_axis):
        for j, c2 in enumerate(c2_axis):
            sp[i, j] = sp_entangled(c1, c2)
            rec = by_key.get(grid_key(c1, c2, c3))
            if rec is None:
                missing.append((c1, c2))
                continue
            signed[i, j] = rec.signed_N
            uncertain[i, j] = abs(rec.signed_N) <= rec.err_E + rec.err_X
    if missing:
        raise IncompleteSlice(f"c3 = {c3}: {len(missing)} points missing, first at (c1, c2) = {missing[0]}")
    return RegionGrid(
        c3=float(c3),
        c1_axis=np.asarray(c1_axis, dtype=float),
        c2_axis=np.asarray(c2_axis, dtype=float),
        c1_step=_step(c1_axis, c1_step),
        c2_step=_step(c2_axis, c2_step),
        numeric_mask=signed > 0,
        sp_mask=sp,
        signed_N=signed,
        boundary_uncertain=uncertain,
    )


def region_area(r: RegionGrid, mask: str = "numeric") -> float:
    """Area covered by ``mask`` (``"numeric"`` or ``"sp"``) in (c1, c2) units."""
    m = {"numeric": r.numeric_mask, "sp": r.sp_mask}[mask]
    return int(m.sum()) * r.c1_step * r.c2_step


def region_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Jaccard index of two boolean masks; 1 when both are empty."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


@dataclass(frozen=True)
class StrategyDiff:
    """Largest relative differences between two sweeps of the same grid.

    For X: ``| |X_g| - |X_l| | / max(|X_g|, |X_l|, TINY)``. For the
    negativity the signed values ``s = |X| - E`` are compared the same way:
    ``|s_g - s_l| / max(|s_g|, |s_l|, TINY)``.
    """

    max_rel_diff_X: float
    max_rel_diff_N: float
    worst_point: tuple[float, float, float]
    worst_point_N: tuple[float, float, float]
    n_compared: int


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), TINY)


def compare_strategies(global_records: Iterable[SweepRecord],
                       local_records: Iterable[SweepRecord]) -> StrategyDiff:
    """Compare two record sets point by point.

    Raises:
        KeyMismatch: the two sets do not cover the same grid points.
    """
    g = {r.key: r for r in global_records}
    loc = {r.key: r for r in local_records}
    if g.keys() != loc.keys():
        only_g = len(g.keys() - loc.keys())
        only_l = len(loc.keys() - g.keys())
        raise KeyMismatch(f"grids differ: {only_g} points only in the first set, {only_l} only in the second")
    if not g:
        raise KeyMismatch("no records to compare")
    best_x, best_n = (-1.0, None), (-1.0, None)
    for key in sorted(g):
        a, b = g[key], loc[key]
        dx = _rel(abs(a.X), abs(b.X))
        dn = _rel(a.signed_N, b.signed_N)
        if dx > best_x[0]:
            best_x = (dx, a)
        if dn > best_n[0]:
            best_n = (dn, a)
    return StrategyDiff(
        max_rel_diff_X=best_x[0],
        max_rel_diff_N=best_n[0],
        worst_point=(best_x[1].c1, best_x[1].c2, best_x[1].c3),
        worst_point_N=(best_n[1].c1, best_n[1].c2, best_n[1].c3),
        n_compared=len(g),
    )


def write_region_csv(r: RegionGrid, path: str | os.PathLike) -> None:
    """Region export, one row per cell, c1 varying fastest."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REGION_COLUMNS)
        for j, c2 in enumerate(r.c2_axis):
            for i, c1 in enumerate(r.c1_axis):
                w.writerow([
                    format(float(c1), ".17g"),
                    format(float(c2), ".17g"),
                    format(r.c3, ".17g"),
                    format(float(r.signed_N[i, j]), ".17g"),
                    int(r.numeric_mask[i, j]),
                    int(r.sp_mask[i, j]),
                    int(r.boundary_uncertain[i, j]),
                ])

