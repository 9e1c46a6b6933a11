"""Result files: daily trace tables, per-year results, benchmark outputs.

All CSVs are UTF-8, comma-delimited, one header row, "\n" line endings.
Every format written here has a matching reader so downstream analyses
(and the test suite) never re-parse by hand. Trace tables mirror the
daily report layout: day, the nine state columns, the applied amount,
then one probability column per candidate amount.
"""

from __future__ import annotations

import os
from typing import Optional, Sequence

from .core import ActionSet, DomainError, EpisodeTrace, ParseError
from .learner import TRAINLOG_HEADER, TrainLog, TrainLogRow


def trace_header(actions: ActionSet) -> str:
    probs = ",".join(f"p{int(a) if float(a).is_integer() else a}" for a in actions.amounts)
    return f"Day,Stage,LAI,ESW1,ESW2,ESW3,ESW4,ESW5,CuIrrig,CuRain,Action,{probs}"


def format_trace_csv(trace: EpisodeTrace, actions: ActionSet, paper_format: bool = False) -> str:
    """Render one episode as a daily table.

    paper_format rounds state columns to survey precision (stage one
    decimal, LAI two, water columns whole mm); probabilities are always
    four decimals.
    """
    lines = [trace_header(actions)]
    for rec in trace.steps:
        s = rec.state
        amount = actions[rec.action_index]
        if paper_format:
            cells = [
                str(rec.day_of_year),
                f"{s.stage:.1f}",
                f"{s.lai:.2f}",
                *(str(round(v)) for v in s.esw),
                str(round(s.cu_irrig)),
                str(round(s.cu_rain)),
                str(round(amount)),
            ]
        else:
            cells = [
                str(rec.day_of_year),
                repr(s.stage),
                repr(s.lai),
                *(repr(v) for v in s.esw),
                repr(s.cu_irrig),
                repr(s.cu_rain),
                repr(float(amount)),
            ]
        cells.extend(f"{p:.4f}" for p in rec.action_probs)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_trace_csv(
    trace: EpisodeTrace, actions: ActionSet, path, paper_format: bool = False
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_trace_csv(trace, actions, paper_format))


def read_trace_csv(path) -> tuple[list[str], list[list[float]]]:
    """Return (header columns, numeric rows) of a trace table."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty trace file", line=1)
    header = lines[0].split(",")
    rows = []
    for line_no, raw in enumerate(lines[1:], start=2):
        parts = raw.split(",")
        if len(parts) != len(header):
            raise ParseError(
                f"{path}: expected {len(header)} fields, got {len(parts)}", line=line_no
            )
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}", line=line_no) from exc
    return header, rows


RESULTS_HEADER = "year,benchmark,test_profit_mean,test_profit_sd,performance_pct"


def format_results_csv(rows: Sequence[dict]) -> str:
    """Per-year evaluation summary; benchmark and ratio blank when absent."""
    lines = [RESULTS_HEADER]
    for row in rows:
        benchmark = row.get("benchmark")
        pct = ""
        bench_text = ""
        if benchmark is not None:
            bench_text = repr(float(benchmark))
            pct = str(round(100.0 * row["test_profit_mean"] / float(benchmark)))
        lines.append(
            f"{row['year']},{bench_text},{float(row['test_profit_mean'])!r},"
            f"{float(row['test_profit_sd'])!r},{pct}"
        )
    return "\n".join(lines) + "\n"


def write_results_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_results_csv(rows))


def read_results_csv(path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != RESULTS_HEADER:
        raise ParseError(f"{path}: bad results header", line=1)
    out = []
    for line_no, raw in enumerate(lines[1:], start=2):
        parts = raw.split(",")
        if len(parts) != 5:
            raise ParseError(f"{path}: expected 5 fields", line=line_no)
        out.append(
            {
                "year": int(parts[0]),
                "benchmark": float(parts[1]) if parts[1] else None,
                "test_profit_mean": float(parts[2]),
                "test_profit_sd": float(parts[3]),
                "performance_pct": int(parts[4]) if parts[4] else None,
            }
        )
    return out


BENCHMARKS_HEADER = "year,benchmark_profit,episodes_used"


def write_benchmarks_csv(rows: Sequence[dict], path) -> None:
    lines = [BENCHMARKS_HEADER]
    for row in rows:
        lines.append(f"{row['year']},{row['benchmark_profit']!r},{row['episodes_used']}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_benchmarks_csv(path) -> dict[int, float]:
    """year -> benchmark profit, as consumed by evaluate's results table."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != BENCHMARKS_HEADER:
        raise ParseError(f"{path}: bad benchmarks header", line=1)
    out: dict[int, float] = {}
    for line_no, raw in enumerate(lines[1:], start=2):
        parts = raw.split(",")
        if len(parts) != 3:
            raise ParseError(f"{path}: expected 3 fields", line=line_no)
        out[int(parts[0])] = float(parts[1])
    return out


SCHEDULE_HEADER = "day_of_year,action_mm"


def write_schedule_csv(schedule: Sequence[tuple[int, float]], path) -> None:
    lines = [SCHEDULE_HEADER]
    for day, mm in schedule:
        lines.append(f"{day},{mm!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_schedule_csv(path, actions: ActionSet) -> list[int]:
    """Schedule back to action indices, validating amounts are candidates."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != SCHEDULE_HEADER:
        raise ParseError(f"{path}: bad schedule header", line=1)
    index_of = {float(a): i for i, a in enumerate(actions.amounts)}
    out = []
    for line_no, raw in enumerate(lines[1:], start=2):
        parts = raw.split(",")
        if len(parts) != 2:
            raise ParseError(f"{path}: expected 2 fields", line=line_no)
        mm = float(parts[1])
        if mm not in index_of:
            raise DomainError(f"{path}: {mm} mm is not a candidate amount")
        out.append(index_of[mm])
    return out


def write_trainlog_csv(log: TrainLog, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(TRAINLOG_HEADER + "\n")
        for row in log.rows:
            fh.write(row.to_csv() + "\n")


def read_trainlog_csv(path) -> list[TrainLogRow]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != TRAINLOG_HEADER:
        raise ParseError(f"{path}: bad train log header", line=1)
    rows = []
    for line_no, raw in enumerate(lines[1:], start=2):
        parts = raw.split(",")
        if len(parts) != 6:
            raise ParseError(f"{path}: expected 6 fields", line=line_no)
        rows.append(
            TrainLogRow(
                episode=int(parts[0]),
                year_id=int(parts[1]),
                profit=float(parts[2]),
                ma=float(parts[3]),
                length=int(parts[4]),
                cuirrig=float(parts[5]),
            )
        )
    return rows
