"""Apply a tapping to recorded data (batch) or a live stream (incremental).

One training row is emitted per valid anchor time t: every tapped cell
(channel, t + lag) must fall inside the episode, so an episode of length T
yields max(0, T - W + 1) rows for a tapping of span W. Anchors themselves may
lie outside [0, T-1] when no tap sits at lag 0; only tapped cells are bounded.
Windows never span episode boundaries.

Randomized operations (dropout augmentation, blocking taps) draw from NumPy's
PCG64 generator; independent substreams are derived with
``SeedSequence(seed).spawn(...)`` in documented order (one child per copy, or
one per episode), so results are reproducible across platforms.
"""

from __future__ import annotations

import csv
import os
import re
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import TapkitError
from .smcore import ChannelRef, SensorimotorMatrix, _fmt
from .tapdsl import ROLE_INPUT, ROLE_TARGET, Tapping, tap_channels

SCOPES = ("inputs", "targets", "both")


class Column(NamedTuple):
    """Provenance of one dataset column: which cell of the matrix it reads."""

    ref: ChannelRef
    lag: int
    role: str


class _TapSpan(NamedTuple):
    role: str
    start: int  # column range within X or Y, depending on role
    stop: int


@dataclass(eq=False)
class Dataset:
    """Aligned supervised arrays with activity masks and anchor provenance.

    Masks are True where a cell is active; dropout/blocking set masked cells
    to an inactive fill value and flip the mask to False.
    """

    X: np.ndarray
    Y: np.ndarray
    x_mask: np.ndarray
    y_mask: np.ndarray
    anchors: list[tuple[int, int]]
    x_layout: tuple[Column, ...]
    y_layout: tuple[Column, ...]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d_in(self) -> int:
        return self.X.shape[1]

    @property
    def d_out(self) -> int:
        return self.Y.shape[1]

    @property
    def layout(self) -> tuple[Column, ...]:
        """All columns, X block then Y block."""
        return self.x_layout + self.y_layout

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            np.array_equal(self.X, other.X)
            and np.array_equal(self.Y, other.Y)
            and np.array_equal(self.x_mask, other.x_mask)
            and np.array_equal(self.y_mask, other.y_mask)
            and self.anchors == other.anchors
            and self.x_layout == other.x_layout
            and self.y_layout == other.y_layout
        )


@dataclass(frozen=True)
class DropoutConfig:
    """Augmentation settings: append ``copies`` noisy copies of the dataset,
    each with a fixed proportion of scope cells forced inactive."""

    copies: int
    proportion: float
    scope: str = "inputs"
    inactive_value: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.copies < 0:
            raise TapkitError(f"copies must be >= 0, got {self.copies}")
        if not 0.0 <= self.proportion <= 1.0:
            raise TapkitError(f"proportion must be in [0, 1], got {self.proportion}")
        if self.scope not in SCOPES:
            raise TapkitError(f"scope must be one of {SCOPES}, got {self.scope!r}")


def _layouts(tapping: Tapping) -> tuple[list[Column], list[Column], list[_TapSpan]]:
    """Column layouts per role plus each tap's column range (for blocking)."""
    x_cols: list[Column] = []
    y_cols: list[Column] = []
    spans: list[_TapSpan] = []
    for tap in tapping.taps:
        cols = x_cols if tap.role == ROLE_INPUT else y_cols
        start = len(cols)
        for ch in tap_channels(tapping.space, tap):
            cols.append(Column(ChannelRef(tap.group, ch), tap.lag, tap.role))
        spans.append(_TapSpan(tap.role, start, len(cols)))
    return x_cols, y_cols, spans


def _episode_rows(tapping: Tapping, episode) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All rows for one episode: (X, Y, anchor times)."""
    space = tapping.space
    T = episode.data.shape[1]
    n = max(0, T - tapping.span + 1)
    x_cols, y_cols, _ = _layouts(tapping)
    anchors = np.arange(-tapping.min_lag, -tapping.min_lag + n)
    X = np.empty((n, len(x_cols)))
    Y = np.empty((n, len(y_cols)))
    for j, col in enumerate(x_cols):
        X[:, j] = episode.data[space.resolve(col.ref.group, col.ref.index), anchors + col.lag]
    for j, col in enumerate(y_cols):
        Y[:, j] = episode.data[space.resolve(col.ref.group, col.ref.index), anchors + col.lag]
    return X, Y, anchors


def _check_space(matrix: SensorimotorMatrix, tapping: Tapping) -> None:
    if not tapping.space.compatible(matrix.space):
        raise TapkitError(
            f"tapping {tapping.name!r} and matrix use different spaces "
            f"({tapping.space.name!r} vs {matrix.space.name!r})"
        )


def apply(matrix: SensorimotorMatrix, tapping: Tapping) -> Dataset:
    """Slide the tapping over every episode and collect one row per anchor.

    Cell (c, lag) of the row anchored at time t reads matrix value
    (row(c), t + lag). Episodes too short for the tapping's span contribute
    nothing; an all-short matrix yields an empty dataset, not an error.
    """
    _check_space(matrix, tapping)
    x_cols, y_cols, _ = _layouts(tapping)
    xs, ys, anchors = [], [], []
    for ep in matrix.episodes:
        X, Y, ts = _episode_rows(tapping, ep)
        xs.append(X)
        ys.append(Y)
        anchors += [(ep.id, int(t)) for t in ts]
    X = np.vstack(xs) if xs else np.zeros((0, len(x_cols)))
    Y = np.vstack(ys) if ys else np.zeros((0, len(y_cols)))
    return Dataset(
        X=X,
        Y=Y,
        x_mask=np.ones(X.shape, dtype=bool),
        y_mask=np.ones(Y.shape, dtype=bool),
        anchors=anchors,
        x_layout=tuple(x_cols),
        y_layout=tuple(y_cols),
    )


class StreamState:
    """Incremental counterpart of :func:`apply` for a single episode stream.

    Holds the last ``span`` measurements; single-threaded use only.
    """

    def __init__(self, tapping: Tapping, episode_id: int = 0):
        self.tapping = tapping
        self.episode_id = episode_id
        self.x_cols, self.y_cols, _ = _layouts(tapping)
        self._rows = [
            tapping.space.resolve(c.ref.group, c.ref.index)
            for c in self.x_cols + self.y_cols
        ]
        self.buffer: deque[np.ndarray] = deque(maxlen=tapping.span)
        self.t = 0  # time index of the next push


def stream_open(tapping: Tapping, episode_id: int = 0) -> StreamState:
    return StreamState(tapping, episode_id)


def stream_push(state: StreamState, sm_vector) -> list[tuple[np.ndarray, np.ndarray, tuple[int, int]]]:
    """Feed one measurement; return the rows it completes (0 or 1).

    The row anchored at t is emitted by the push that supplies time
    t + max_lag, so future-target tappings emit with the matching delay.
    Concatenated emissions over a full episode equal :func:`apply` on it.
    """
    tapping = state.tapping
    vec = np.asarray(sm_vector, dtype=float).reshape(-1)
    if vec.shape[0] != tapping.space.n_sm:
        raise TapkitError(
            f"measurement has {vec.shape[0]} values, space needs {tapping.space.n_sm}"
        )
    state.buffer.append(vec.copy())
    s = state.t
    state.t += 1
    anchor = s - tapping.max_lag
    if anchor + tapping.min_lag < 0:
        return []
    # buffer[-1] holds time s; time u sits at offset u - s - 1 from the end.
    d_in = len(state.x_cols)
    row = np.empty(d_in + len(state.y_cols))
    for j, col in enumerate(state.x_cols + state.y_cols):
        row[j] = state.buffer[anchor + col.lag - s - 1][state._rows[j]]
    return [(row[:d_in], row[d_in:], (state.episode_id, anchor))]


def dropout_augment(dataset: Dataset, config: DropoutConfig) -> Dataset:
    """Append ``copies`` copies, each with floor(proportion * cells) scope
    cells forced inactive; rows 0..N-1 stay bit-identical to the original.

    Copy i draws from ``default_rng(SeedSequence(seed).spawn(copies)[i])``.
    At high proportions a copy may lose every input of some row; no rejection
    is applied.
    """
    n, d_in, d_out = dataset.n, dataset.d_in, dataset.d_out
    reps = config.copies + 1
    X = np.tile(dataset.X, (reps, 1))
    Y = np.tile(dataset.Y, (reps, 1))
    x_mask = np.tile(dataset.x_mask, (reps, 1))
    y_mask = np.tile(dataset.y_mask, (reps, 1))
    anchors = list(dataset.anchors) * reps
    children = np.random.SeedSequence(config.seed).spawn(config.copies)
    x_cells = n * d_in
    y_cells = n * d_out
    if config.scope == "inputs":
        total = x_cells
    elif config.scope == "targets":
        total = y_cells
    else:
        total = x_cells + y_cells
    k = int(np.floor(config.proportion * total))
    for i in range(config.copies):
        rng = np.random.default_rng(children[i])
        chosen = rng.choice(total, size=k, replace=False)
        base = (i + 1) * n
        for cell in chosen:
            # scope="both" cells index the X block first, then the Y block.
            if config.scope == "targets":
                cell += x_cells
            if cell < x_cells:
                r, c = divmod(int(cell), d_in)
                X[base + r, c] = config.inactive_value
                x_mask[base + r, c] = False
            else:
                r, c = divmod(int(cell) - x_cells, d_out)
                Y[base + r, c] = config.inactive_value
                y_mask[base + r, c] = False
    return Dataset(X, Y, x_mask, y_mask, anchors, dataset.x_layout, dataset.y_layout)


def apply_blocking(matrix: SensorimotorMatrix, tapping: Tapping,
                   proportion: float, seed: int = 0) -> Dataset:
    """Like :func:`apply`, but per episode a random floor(proportion * #taps)
    subset of taps is blocked: every cell of a blocked tap is inactive
    (fill 0) for that whole episode. Episode i uses
    ``default_rng(SeedSequence(seed).spawn(n_episodes)[i])``.
    """
    if not 0.0 <= proportion <= 1.0:
        raise TapkitError(f"proportion must be in [0, 1], got {proportion}")
    _check_space(matrix, tapping)
    x_cols, y_cols, spans = _layouts(tapping)
    k = int(np.floor(proportion * len(tapping.taps)))
    children = np.random.SeedSequence(seed).spawn(len(matrix.episodes))
    xs, ys, xms, yms, anchors = [], [], [], [], []
    for i, ep in enumerate(matrix.episodes):
        X, Y, ts = _episode_rows(tapping, ep)
        xm = np.ones(X.shape, dtype=bool)
        ym = np.ones(Y.shape, dtype=bool)
        rng = np.random.default_rng(children[i])
        blocked = rng.choice(len(tapping.taps), size=k, replace=False)
        for tap_idx in blocked:
            span = spans[int(tap_idx)]
            if span.role == ROLE_INPUT:
                X[:, span.start:span.stop] = 0.0
                xm[:, span.start:span.stop] = False
            else:
                Y[:, span.start:span.stop] = 0.0
                ym[:, span.start:span.stop] = False
        xs.append(X)
        ys.append(Y)
        xms.append(xm)
        yms.append(ym)
        anchors += [(ep.id, int(t)) for t in ts]
    X = np.vstack(xs) if xs else np.zeros((0, len(x_cols)))
    Y = np.vstack(ys) if ys else np.zeros((0, len(y_cols)))
    xm = np.vstack(xms) if xms else np.ones(X.shape, dtype=bool)
    ym = np.vstack(yms) if yms else np.ones(Y.shape, dtype=bool)
    return Dataset(X, Y, xm, ym, anchors, tuple(x_cols), tuple(y_cols))


# ---------------------------------------------------------------------------
# Dataset CSV serialization
# ---------------------------------------------------------------------------

def _column_header(prefix: str, col: Column) -> str:
    return f"{prefix}:{col.ref.group}[{col.ref.index}]@{col.lag}"


def mask_path_for(path) -> str:
    """DS.csv -> DS.mask.csv (appends .mask.csv when there is no .csv suffix)."""
    p = str(path)
    return p[:-4] + ".mask.csv" if p.endswith(".csv") else p + ".mask.csv"


def save_dataset_csv(dataset: Dataset, path) -> None:
    """Write values to ``path`` and the 0/1 activity mask to the parallel
    mask file. Masked cells hold their fill value in the main file."""
    header = (
        ["episode", "t"]
        + [_column_header("x", c) for c in dataset.x_layout]
        + [_column_header("y", c) for c in dataset.y_layout]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, (eid, t) in enumerate(dataset.anchors):
            writer.writerow(
                [eid, t]
                + [_fmt(v) for v in dataset.X[i]]
                + [_fmt(v) for v in dataset.Y[i]]
            )
    with open(mask_path_for(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, (eid, t) in enumerate(dataset.anchors):
            writer.writerow(
                [eid, t]
                + ["1" if b else "0" for b in dataset.x_mask[i]]
                + ["1" if b else "0" for b in dataset.y_mask[i]]
            )


_HEADER_COL_RE = re.compile(r"([xy]):(\w+)\[(\d+)\]@(-?\d+)\Z")


def load_dataset_csv(path) -> Dataset:
    """Read a dataset written by :func:`save_dataset_csv`. The mask file is
    optional; without it every cell counts as active."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["episode", "t"]:
            raise TapkitError(f"{path}: expected dataset header starting episode,t")
        x_layout: list[Column] = []
        y_layout: list[Column] = []
        for col in header[2:]:
            m = _HEADER_COL_RE.match(col.strip())
            if m is None:
                raise TapkitError(f"{path}: malformed dataset column {col!r}")
            role = ROLE_INPUT if m.group(1) == "x" else ROLE_TARGET
            if role == ROLE_INPUT and y_layout:
                raise TapkitError(f"{path}: x column {col!r} after the y block")
            entry = Column(ChannelRef(m.group(2), int(m.group(3))), int(m.group(4)), role)
            (x_layout if role == ROLE_INPUT else y_layout).append(entry)
        d_in, d_out = len(x_layout), len(y_layout)
        rows = []
        anchors = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 + d_in + d_out:
                raise TapkitError(f"{path}: line {lineno}: wrong field count")
            try:
                anchors.append((int(row[0]), int(row[1])))
                rows.append([float(v) for v in row[2:]])
            except ValueError:
                raise TapkitError(f"{path}: line {lineno}: non-numeric value") from None
    data = np.array(rows) if rows else np.zeros((0, d_in + d_out))
    X, Y = data[:, :d_in], data[:, d_in:]
    x_mask = np.ones(X.shape, dtype=bool)
    y_mask = np.ones(Y.shape, dtype=bool)
    mpath = mask_path_for(path)
    if os.path.exists(mpath):
        with open(mpath, newline="") as fh:
            reader = csv.reader(fh)
            next(reader, None)
            bits = [[v == "1" for v in row[2:]] for row in reader if row]
        if len(bits) != len(rows):
            raise TapkitError(f"{mpath}: mask row count does not match {path}")
        try:
            mask = np.array(bits, dtype=bool) if bits else np.ones((0, d_in + d_out), bool)
        except ValueError:
            raise TapkitError(f"{mpath}: ragged mask rows") from None
        if mask.shape[1] != d_in + d_out:
            raise TapkitError(f"{mpath}: mask column count does not match {path}")
        x_mask, y_mask = mask[:, :d_in], mask[:, d_in:]
    return Dataset(X, Y, x_mask, y_mask, anchors, tuple(x_layout), tuple(y_layout))
