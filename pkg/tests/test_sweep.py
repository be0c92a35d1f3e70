import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from harvestlab.quadrature import QuadConfig, Strategy
from harvestlab.sweep import (
    CSV_COLUMNS,
    GridSpec,
    SinkWriteFailure,
    SpecMismatch,
    SweepRecord,
    axis_values,
    build_grid,
    evaluate_point,
    format_record,
    grid_key,
    header_line,
    read_records,
    resume_sweep,
    run_sweep,
)

SMALL = GridSpec(1.0, 2.0, 0.5, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0)


def _sorted_body(path):
    lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
    return lines[0], sorted(lines[1:])


def test_full_grid_size():
    c1s, c2s, c3s = GridSpec.full().axes()
    assert (len(c1s), len(c2s), len(c3s)) == (240, 120, 40)
    assert (c1s[0], c1s[-1], c2s[-1], c3s[0], c3s[-1]) == (0.025, 6.0, 3.0, 0.125, 5.0)
    assert len(build_grid(GridSpec.full())) == 1_152_000


def test_single_point_grid():
    assert build_grid(GridSpec(1, 1, 1, 1, 1, 1, 1, 1, 1)) == [(1, 1, 1)]


def test_three_point_grid_and_order():
    assert build_grid(SMALL) == [(1.0, 1.0, 2.0), (1.5, 1.0, 2.0), (2.0, 1.0, 2.0)]
    spec = GridSpec(1, 2, 1, 1, 2, 1, 1, 2, 1)
    pts = build_grid(spec)
    assert pts == sorted(pts, key=lambda c: (c[2], c[1], c[0]))
    assert len(pts) == 8


def test_coarsen_full_grid():
    spec = GridSpec.full().coarsen(10)
    c1s, c2s, c3s = spec.axes()
    assert (len(c1s), len(c2s), len(c3s)) == (24, 12, 4)
    assert c1s[:2] == [0.25, 0.5] and c1s[-1] == 6.0
    assert c3s == [1.25, 2.5, 3.75, 5.0]
    full = {grid_key(*c) for c in build_grid(GridSpec.full().with_c3(5.0))}
    assert {grid_key(*c) for c in build_grid(spec.with_c3(5.0))} <= full


def test_coarsen_by_five_with_fixed_slice():
    spec = GridSpec.full().coarsen(5).with_c3(4.5)
    assert len(build_grid(spec)) == 48 * 24


def test_axis_values_are_indexed_not_accumulated():
    vals = axis_values(0.025, 6.0, 0.025)
    assert vals[2] == 0.075 and vals[119] == 3.0
    # Half-step slack at the stop value.
    assert axis_values(0.1, 0.3 - 1e-12, 0.1) == [0.1, 0.2, 0.3]
    assert axis_values(1.0, 1.2, 0.5) == [1.0]


@pytest.mark.parametrize("kw", [dict(c1_step=0), dict(c2_start=2.0), dict(c3_start=0.0, c3_stop=1.0)])
def test_gridspec_validation(kw):
    base = dict(c1_start=1, c1_stop=2, c1_step=0.5, c2_start=1, c2_stop=1, c2_step=1,
                c3_start=1, c3_stop=1, c3_step=1)
    base.update(kw)
    with pytest.raises(ValueError):
        GridSpec(**base)


finite = st.floats(allow_nan=False, allow_infinity=False)


@given(e=finite, xr=finite, xi=finite, err=st.floats(0, 1e10), n=st.integers(0, 10**12),
       conv=st.booleans(), strat=st.sampled_from(list(Strategy)))
def test_record_round_trip(e, xr, xi, err, n, conv, strat):
    rec = SweepRecord(0.025, 3.0, 0.125, e, xr, xi, 0.5, err, err, strat, conv, n, n)
    line = format_record(rec)
    assert line.endswith("\n") and line.count("\n") == 1
    values = dict(zip(CSV_COLUMNS, line.rstrip("\n").split(",")))
    assert SweepRecord.from_row(values) == rec


def test_header_line():
    assert header_line() == "c1,c2,c3,E,X_re,X_im,N,err_E,err_X,strategy,converged,n_evals,wall_ns\n"


def test_evaluate_point_fields():
    rec = evaluate_point(1.0, 1.0, 2.0, QuadConfig())
    assert rec.N == max(math.hypot(rec.X_re, rec.X_im) - rec.E, 0.0)
    assert rec.converged and rec.n_evals > 0 and rec.wall_ns > 0
    assert evaluate_point(1.0, 1.0, 2.0, QuadConfig(), timing=False).wall_ns == 0


def test_non_converged_points_are_kept(tmp_path):
    out = tmp_path / "r.csv"
    cfg = QuadConfig(rel_tol=1e-14, abs_tol=0.0, max_regions=2)
    summary = run_sweep(SMALL, cfg, 1, out)
    recs = read_records(out)
    assert len(recs) == 3 and summary.points_failed == 3
    assert not any(r.converged for r in recs)


def test_retry_uses_larger_budget():
    cfg = QuadConfig(rel_tol=1e-14, abs_tol=0.0, max_regions=2)
    plain = evaluate_point(1.0, 1.0, 2.0, cfg)
    retried = evaluate_point(1.0, 1.0, 2.0, cfg, retry=True)
    assert retried.n_evals > plain.n_evals


def test_worker_count_invariance(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    spec = GridSpec(0.5, 2.0, 0.5, 1.0, 1.5, 0.5, 2.0, 2.0, 1.0)
    run_sweep(spec, QuadConfig(), 1, a, timing=False)
    run_sweep(spec, QuadConfig(), 3, b, timing=False)
    assert _sorted_body(a) == _sorted_body(b)
    assert len(read_records(a)) == 8


def test_fresh_run_writes_every_point_once(tmp_path):
    out = tmp_path / "r.csv"
    summary = run_sweep(SMALL, QuadConfig(), 1, out)
    keys = [r.key for r in read_records(out)]
    assert summary.points_done == 3 and summary.skipped == 0
    assert sorted(keys) == sorted(grid_key(*c) for c in build_grid(SMALL))


def test_resume_computes_only_missing(tmp_path):
    out = tmp_path / "r.csv"
    run_sweep(SMALL, QuadConfig(), 1, out, timing=False)
    full = _sorted_body(out)
    lines = out.read_text().splitlines(keepends=True)
    out.write_text("".join(lines[:3]))
    summary = resume_sweep(SMALL, QuadConfig(), 1, out, timing=False)
    assert summary.points_done == 1 and summary.skipped == 2
    assert _sorted_body(out) == full


def test_resume_with_everything_done(tmp_path):
    out = tmp_path / "r.csv"
    run_sweep(SMALL, QuadConfig(), 1, out)
    before = out.read_bytes()
    summary = resume_sweep(SMALL, QuadConfig(), 1, out)
    assert summary.points_done == 0 and summary.skipped == 3
    assert out.read_bytes() == before


def test_resume_drops_torn_line(tmp_path):
    out = tmp_path / "r.csv"
    run_sweep(SMALL, QuadConfig(), 1, out, timing=False)
    full = _sorted_body(out)
    text = out.read_text()
    out.write_text(text[: len(text) - 20])
    assert len(read_records(out)) == 2
    resume_sweep(SMALL, QuadConfig(), 1, out, timing=False)
    assert _sorted_body(out) == full


def test_resume_from_other_grid_is_rejected(tmp_path):
    out = tmp_path / "r.csv"
    finer = GridSpec(1.0, 2.0, 0.25, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0)
    run_sweep(finer, QuadConfig(), 1, out)
    with pytest.raises(SpecMismatch):
        resume_sweep(SMALL, QuadConfig(), 1, out)
    shifted = GridSpec(1.1, 2.1, 0.5, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0)
    with pytest.raises(SpecMismatch):
        resume_sweep(shifted, QuadConfig(), 1, out)
    with pytest.raises(SpecMismatch):
        resume_sweep(finer, QuadConfig(strategy=Strategy.LOCAL), 1, out)


def test_finer_grid_accepts_coarser_records(tmp_path):
    # Records of a coarser step are still a subset of the finer grid.
    out = tmp_path / "r.csv"
    run_sweep(SMALL, QuadConfig(), 1, out)
    finer = GridSpec(1.0, 2.0, 0.25, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0)
    assert resume_sweep(finer, QuadConfig(), 1, out).points_done == 2


def test_unwritable_sink(tmp_path):
    with pytest.raises(SinkWriteFailure):
        run_sweep(SMALL, QuadConfig(), 1, tmp_path / "missing" / "r.csv")


def test_invalid_grid_point_fails_before_work(tmp_path):
    from harvestlab.physics import InvalidParams

    spec = GridSpec(1, 1, 1, math.pi, math.pi, 1, 1, 1, 1)
    with pytest.raises(InvalidParams):
        run_sweep(spec, QuadConfig(), 1, tmp_path / "r.csv")
    assert not (tmp_path / "r.csv").exists()
