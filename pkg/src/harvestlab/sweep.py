"""Grid sweeps over (c1, c2, c3) with append-only CSV output and resume."""

from __future__ import annotations

import csv
import io
import logging
import math
import multiprocessing
import os
import time
import warnings
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Iterator

from .physics import HarvestParams, eval_E, eval_X, negativity
from .quadrature import NotConverged, QuadConfig, Strategy

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "c1", "c2", "c3", "E", "X_re", "X_im", "N", "err_E", "err_X",
    "strategy", "converged", "n_evals", "wall_ns",
)
KEY_DECIMALS = 6
# Budget multiplier for the single retry of a non-converged point.
RETRY_FACTOR = 4


class SweepError(Exception):
    pass


class EmptyGrid(SweepError, ValueError):
    pass


class SpecMismatch(SweepError):
    """Existing records do not belong to the requested grid or configuration."""


class SinkWriteFailure(SweepError, OSError):
    pass


def grid_key(c1: float, c2: float, c3: float) -> tuple[str, str, str]:
    return tuple(f"{v:.{KEY_DECIMALS}f}" for v in (c1, c2, c3))


def axis_values(start: float, stop: float, step: float) -> list[float]:
    """Inclusive progression ``start + k*step``, computed per index.

    The last value may overshoot ``stop`` by less than half a step, which
    absorbs floating-point slack in ``(stop - start) / step``.
    """
    n = math.floor((stop - start) / step + 0.5) + 1
    return [round(start + k * step, 12) for k in range(n)]


@dataclass(frozen=True)
class GridSpec:
    c1_start: float
    c1_stop: float
    c1_step: float
    c2_start: float
    c2_stop: float
    c2_step: float
    c3_start: float
    c3_stop: float
    c3_step: float

    def __post_init__(self):
        for axis in ("c1", "c2", "c3"):
            start, stop, step = (getattr(self, f"{axis}_{k}") for k in ("start", "stop", "step"))
            if not all(math.isfinite(v) for v in (start, stop, step)):
                raise ValueError(f"{axis} range must be finite")
            if step <= 0:
                raise ValueError(f"{axis}_step must be > 0, got {step}")
            if start > stop:
                raise ValueError(f"{axis}_start must be <= {axis}_stop, got {start} > {stop}")
            if start <= 0:
                raise ValueError(f"{axis}_start must be > 0, got {start}")

    @classmethod
    def full(cls) -> GridSpec:
        """The full 240 x 120 x 40 grid."""
        return cls(0.025, 6.0, 0.025, 0.025, 3.0, 0.025, 0.125, 5.0, 0.125)

    @classmethod
    def single(cls, c1: float, c2: float, c3: float) -> GridSpec:
        return cls(c1, c1, 1.0, c2, c2, 1.0, c3, c3, 1.0)

    def coarsen(self, factor: int) -> GridSpec:
        """Keep every ``factor``-th value of each axis, ending at the stop value.

        For a grid that starts at one step (like the full grid) the result
        starts at ``factor`` steps and has ``count // factor`` values per axis.
        """
        if factor < 1:
            raise ValueError(f"coarsening factor must be >= 1, got {factor}")
        kw = {}
        for axis in ("c1", "c2", "c3"):
            start, stop, step = (getattr(self, f"{axis}_{k}") for k in ("start", "stop", "step"))
            new_start = round(start + (factor - 1) * step, 12)
            if new_start > stop + 0.5 * step:
                raise EmptyGrid(f"coarsening by {factor} leaves no {axis} values")
            kw.update({f"{axis}_start": min(new_start, stop), f"{axis}_stop": stop,
                       f"{axis}_step": factor * step})
        return GridSpec(**kw)

    def with_c3(self, c3: float) -> GridSpec:
        return replace(self, c3_start=c3, c3_stop=c3)

    def axes(self) -> tuple[list[float], list[float], list[float]]:
        return (
            axis_values(self.c1_start, self.c1_stop, self.c1_step),
            axis_values(self.c2_start, self.c2_stop, self.c2_step),
            axis_values(self.c3_start, self.c3_stop, self.c3_step),
        )


def build_grid(spec: GridSpec) -> list[tuple[float, float, float]]:
    """All grid points, ordered by (c3, c2, c1) with c1 varying fastest."""
    c1s, c2s, c3s = spec.axes()
    points = [(c1, c2, c3) for c3 in c3s for c2 in c2s for c1 in c1s]
    if not points:
        raise EmptyGrid("grid has no points")
    return points


@dataclass(frozen=True)
class SweepRecord:
    c1: float
    c2: float
    c3: float
    E: float
    X_re: float
    X_im: float
    N: float
    err_E: float
    err_X: float
    strategy: Strategy
    converged: bool
    n_evals: int
    wall_ns: int

    @property
    def key(self) -> tuple[str, str, str]:
        return grid_key(self.c1, self.c2, self.c3)

    @property
    def X(self) -> complex:
        return complex(self.X_re, self.X_im)

    @property
    def signed_N(self) -> float:
        return math.hypot(self.X_re, self.X_im) - self.E

    def to_row(self) -> list[str]:
        row = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Strategy):
                row.append(v.value)
            elif isinstance(v, bool):
                row.append("1" if v else "0")
            elif isinstance(v, int):
                row.append(str(v))
            else:
                row.append(format(v, ".17g"))
        return row

    @classmethod
    def from_row(cls, row: dict[str, str]) -> SweepRecord:
        floats = {k: float(row[k]) for k in CSV_COLUMNS[:9]}
        return cls(
            **floats,
            strategy=Strategy(row["strategy"]),
            converged=row["converged"] == "1",
            n_evals=int(row["n_evals"]),
            wall_ns=int(row["wall_ns"]),
        )


@dataclass(frozen=True)
class SweepSummary:
    points_done: int
    points_failed: int
    skipped: int
    elapsed: float


def evaluate_point(c1: float, c2: float, c3: float, cfg: QuadConfig,
                   retry: bool = False, timing: bool = True) -> SweepRecord:
    """Compute one sweep record; optionally retry once with a larger budget."""
    p = HarvestParams(c1, c2, c3)
    t0 = time.perf_counter_ns()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConverged)
        E = eval_E(p, cfg)
        X = eval_X(p, cfg)
        n_evals = E.meta.n_evals + X.meta.n_evals
        if retry and not (E.meta.converged and X.meta.converged):
            big = replace(cfg, max_regions=RETRY_FACTOR * cfg.max_regions)
            if not E.meta.converged:
                E = eval_E(p, big)
                n_evals += E.meta.n_evals
            if not X.meta.converged:
                X = eval_X(p, big)
                n_evals += X.meta.n_evals
    wall = time.perf_counter_ns() - t0 if timing else 0
    return SweepRecord(
        c1=c1, c2=c2, c3=c3,
        E=E.value, X_re=X.value.real, X_im=X.value.imag,
        N=negativity(E.value, X.value),
        err_E=E.err, err_X=X.err,
        strategy=cfg.strategy,
        converged=E.meta.converged and X.meta.converged,
        n_evals=n_evals,
        wall_ns=wall,
    )


def _task(args) -> SweepRecord:
    return evaluate_point(*args)


def format_record(rec: SweepRecord) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(rec.to_row())
    return buf.getvalue()


def header_line() -> str:
    return ",".join(CSV_COLUMNS) + "\n"


def read_records(path: str | os.PathLike) -> list[SweepRecord]:
    """Load complete records from a sweep CSV, ignoring a torn final line."""
    text = Path(path).read_text(encoding="utf-8")
    if not text:
        return []
    if not text.endswith("\n"):
        text = text[: text.rfind("\n") + 1]
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is not None and tuple(reader.fieldnames) != CSV_COLUMNS:
        raise SweepError(f"{path}: unexpected header {reader.fieldnames}")
    return [SweepRecord.from_row(row) for row in reader]


class _Sink:
    """Single writer appending one complete line per record."""

    def __init__(self, path: Path, fresh: bool):
        self.path = path
        try:
            if fresh or not path.exists() or path.stat().st_size == 0:
                self._fh = open(path, "w", encoding="utf-8", newline="")
                self._fh.write(header_line())
                self._fh.flush()
            else:
                self._drop_torn_tail(path)
                self._fh = open(path, "a", encoding="utf-8", newline="")
        except OSError as exc:
            raise SinkWriteFailure(f"cannot open {path}: {exc}") from exc

    @staticmethod
    def _drop_torn_tail(path: Path) -> None:
        data = path.read_bytes()
        if data and not data.endswith(b"\n"):
            with open(path, "r+b") as fh:
                fh.truncate(data.rfind(b"\n") + 1)

    def write(self, rec: SweepRecord) -> None:
        try:
            self._fh.write(format_record(rec))
            self._fh.flush()
        except OSError as exc:
            raise SinkWriteFailure(f"write to {self.path} failed: {exc}") from exc

    def close(self) -> None:
        self._fh.close()


def _compute(tasks: list, workers: int) -> Iterator[SweepRecord]:
    if workers == 1 or len(tasks) <= 1:
        for t in tasks:
            yield _task(t)
        return
    # Points differ wildly in cost, so hand them out one at a time.
    with multiprocessing.get_context("spawn").Pool(workers) as pool:
        yield from pool.imap_unordered(_task, tasks, chunksize=1)


def _check_existing(existing: Iterable[SweepRecord], grid_keys: set, cfg: QuadConfig) -> set:
    done = set()
    for rec in existing:
        if rec.key not in grid_keys:
            raise SpecMismatch(f"record at {rec.key} is not on the current grid")
        if rec.strategy is not cfg.strategy:
            raise SpecMismatch(f"record at {rec.key} used {rec.strategy.value}, not {cfg.strategy.value}")
        if rec.key in done:
            raise SpecMismatch(f"duplicate record at {rec.key}")
        done.add(rec.key)
    return done


def run_sweep(spec: GridSpec, cfg: QuadConfig, workers: int, out: str | os.PathLike,
              *, resume: bool = False, retry: bool = False, timing: bool = True) -> SweepSummary:
    """Evaluate every grid point and append one CSV record per point to ``out``.

    With ``resume`` the points already present in ``out`` are skipped; the
    existing records must come from the same grid and strategy. Records are
    written as they complete, so their file order depends on scheduling;
    their values do not.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    out = Path(out)
    points = build_grid(spec)
    for c in points:
        HarvestParams(*c)  # reject invalid points before any work starts
    done: set = set()
    if resume and out.exists():
        done = _check_existing(read_records(out), {grid_key(*c) for c in points}, cfg)
    todo = [c for c in points if grid_key(*c) not in done]

    t0 = time.perf_counter()
    sink = _Sink(out, fresh=not resume)
    n_done = n_failed = 0
    try:
        tasks = [(c1, c2, c3, cfg, retry, timing) for c1, c2, c3 in todo]
        for rec in _compute(tasks, workers):
            sink.write(rec)
            n_done += 1
            n_failed += not rec.converged
            if n_done % 100 == 0:
                logger.info("%d/%d points", n_done, len(todo))
    finally:
        sink.close()
    return SweepSummary(n_done, n_failed, len(points) - len(todo), time.perf_counter() - t0)


def resume_sweep(spec: GridSpec, cfg: QuadConfig, workers: int, out: str | os.PathLike,
                 **kwargs) -> SweepSummary:
    return run_sweep(spec, cfg, workers, out, resume=True, **kwargs)
