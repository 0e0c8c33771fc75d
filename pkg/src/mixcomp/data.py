"""Synthetic drifting-cluster streams and windowed CSV ingestion."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import DataFormatError, InvalidInputError
from .mixture import WeightedDataset

TRANSACTION = (51, 100)


@dataclass(frozen=True)
class StreamSpec:
    t_count: int = 150
    n_per_t: int = 1000
    dimension: int = 3
    rng_seed: int = 0
    reversed: bool = False

    def __post_init__(self):
        if self.t_count < 1:
            raise InvalidInputError("t_count must be >= 1")
        if self.n_per_t < 1:
            raise InvalidInputError("n_per_t must be >= 1")
        if self.dimension < 1:
            raise InvalidInputError("dimension must be >= 1")


class TimedStream(NamedTuple):
    times: List[int]
    windows: List[WeightedDataset]


def move_alpha(t: int) -> float:
    """Offset of the moving cluster at time t (1-based)."""
    if t <= 50:
        return 0.0
    if t <= 100:
        return 0.12 * (t - 50)
    return 6.0


def imbalance_alpha(t: int) -> int:
    """Number of points shifted from the edge cluster to its neighbour."""
    if t <= 50:
        return 0
    if t <= 100:
        return 5 * (t - 51)
    return 250


def _window_rng(seed: int, t: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed & (2**64 - 1), spawn_key=(t,)))


def _axis_mean(offset: float, d: int) -> np.ndarray:
    mean = np.zeros(d)
    mean[0] = offset
    return mean


def _blocks(rng, centers, counts, d) -> np.ndarray:
    parts = [rng.standard_normal((c, d)) + _axis_mean(mu, d) for mu, c in zip(centers, counts)]
    return np.concatenate(parts)


def move_counts(n: int):
    third = n // 3
    return (third, third, n - 2 * third)


def imbalance_counts(t: int, n: int):
    """Per-component counts; the 250-point schedule is rescaled for n != 1000."""
    base = n // 4
    shift = int(round(imbalance_alpha(t) * n / 1000))
    last = n - 3 * base
    shift = min(shift, last)
    return (base, base, base + shift, last - shift)


def move_window(t: int, spec: StreamSpec) -> WeightedDataset:
    rng = _window_rng(spec.rng_seed, t)
    centers = (0.0, 10.0, 10.0 + move_alpha(t))
    return WeightedDataset(_blocks(rng, centers, move_counts(spec.n_per_t), spec.dimension))


def imbalance_window(t: int, spec: StreamSpec) -> WeightedDataset:
    rng = _window_rng(spec.rng_seed, t)
    counts = imbalance_counts(t, spec.n_per_t)
    return WeightedDataset(_blocks(rng, (0.0, 10.0, 20.0, 30.0), counts, spec.dimension))


def _generate(window_fn, spec: StreamSpec) -> List[WeightedDataset]:
    stream = [window_fn(t, spec) for t in range(1, spec.t_count + 1)]
    if spec.reversed:
        stream.reverse()
    return stream


def gen_move_gaussian(spec: StreamSpec = StreamSpec()) -> List[WeightedDataset]:
    """Three unit-variance clusters; the third drifts away from the second."""
    return _generate(move_window, spec)


def gen_imbalance_gaussian(spec: StreamSpec = StreamSpec()) -> List[WeightedDataset]:
    """Four unit-variance clusters; the last one drains into the third."""
    return _generate(imbalance_window, spec)


GENERATORS = {"move": gen_move_gaussian, "imbalance": gen_imbalance_gaussian}


# ---------------------------------------------------------------------------
# CSV


def _parse_number(value: str, line: int, column: str, kind=float):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise DataFormatError(f"line {line}: column {column!r} has non-numeric value {value!r}", line=line)
    if kind is float and not np.isfinite(out):
        raise DataFormatError(f"line {line}: column {column!r} is not finite", line=line)
    return out


def ingest_csv(
    path,
    window_length: int,
    time_column: str = "time",
    feature_columns: Optional[Sequence[str]] = None,
    entity_column: str = "entity",
) -> TimedStream:
    """Aggregate a long ``entity,time,features...`` table into sliding windows.

    For every emitted time t, each entity contributes one point: its
    features summed over times t - window_length + 1 .. t (missing rows
    count as zero).  Every entity seen anywhere in the file appears in every
    window.  Times are integers; emission starts at min_time + window_length - 1.
    """
    if window_length < 1:
        raise InvalidInputError("window_length must be >= 1")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return TimedStream([], [])
        header = [h.strip() for h in header]
        if feature_columns is None:
            feature_columns = [h for h in header if h not in (entity_column, time_column)]
        missing = [c for c in (entity_column, time_column, *feature_columns) if c not in header]
        if missing:
            raise DataFormatError(f"missing columns: {', '.join(missing)}", line=1)
        if not feature_columns:
            raise DataFormatError("no feature columns", line=1)
        e_idx = header.index(entity_column)
        t_idx = header.index(time_column)
        f_idx = [header.index(c) for c in feature_columns]

        totals = defaultdict(lambda: np.zeros(len(f_idx)))
        entities = {}
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"line {line}: expected {len(header)} fields, got {len(row)}", line=line
                )
            entity = row[e_idx].strip()
            t = _parse_number(row[t_idx].strip(), line, time_column, int)
            values = [_parse_number(row[i], line, header[i]) for i in f_idx]
            entities.setdefault(entity, len(entities))
            totals[(entities[entity], t)] += values

    if not totals:
        return TimedStream([], [])
    n_entities = len(entities)
    t_min = min(t for _, t in totals)
    t_max = max(t for _, t in totals)
    span = t_max - t_min + 1
    cube = np.zeros((span, n_entities, len(f_idx)))
    for (e, t), v in totals.items():
        cube[t - t_min, e] = v
    times, windows = [], []
    for t in range(t_min + window_length - 1, t_max + 1):
        hi = t - t_min + 1
        # direct sums (not cumulative differences) keep the totals exact
        windows.append(WeightedDataset(cube[hi - window_length : hi].sum(axis=0)))
        times.append(t)
    return TimedStream(times, windows)


def write_stream_csv(path, stream: Sequence[WeightedDataset], times: Optional[Sequence[int]] = None) -> None:
    """Single-file stream serialization with a leading ``t`` column."""
    times = list(range(1, len(stream) + 1)) if times is None else list(times)
    if len(times) != len(stream):
        raise InvalidInputError("one time label per window is required")
    d = stream[0].dim if stream else 0
    weighted = any(w.weights is not None for w in stream)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *(f"x{i + 1}" for i in range(d)), *(["weight"] if weighted else [])])
        for t, window in zip(times, stream):
            w = window.weights if window.weights is not None else np.ones(len(window))
            for x, wi in zip(window.points, w):
                row = [t, *(repr(float(v)) for v in x)]
                if weighted:
                    row.append(repr(float(wi)))
                writer.writerow(row)


def read_stream_csv(path) -> TimedStream:
    """Inverse of :func:`write_stream_csv`."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return TimedStream([], [])
        header = [h.strip() for h in header]
        if not header or header[0] != "t":
            raise DataFormatError("stream file must start with a 't' column", line=1)
        weighted = header[-1] == "weight"
        d = len(header) - 1 - int(weighted)
        if d < 1:
            raise DataFormatError("stream file has no feature columns", line=1)
        groups = {}
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"line {line}: expected {len(header)} fields, got {len(row)}", line=line
                )
            t = _parse_number(row[0], line, "t", int)
            vals = [_parse_number(v, line, header[i + 1]) for i, v in enumerate(row[1:])]
            groups.setdefault(t, []).append(vals)
    times = list(groups)
    windows = []
    for t in times:
        arr = np.asarray(groups[t], dtype=float)
        if weighted:
            windows.append(WeightedDataset(arr[:, :d], arr[:, d]))
        else:
            windows.append(WeightedDataset(arr))
    return TimedStream(times, windows)
