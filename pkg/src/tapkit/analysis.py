"""Histogram mutual information between lagged channels, and extraction of
the tapping a dataset itself suggests.

Estimator: plug-in MI over an equal-width bins x bins joint histogram spanning
the observed ranges, in bits, clamped at 0. Entropies are summed over sorted
probability terms, which makes MI(x, y) == MI(y, x) exact and MI(x, x) equal
to the plug-in entropy of x. Estimator bias is bounded empirically in the
test suite with shuffled surrogates rather than corrected here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TapkitError
from .smcore import ChannelRef, SensorimotorMatrix
from .tapdsl import ROLE_INPUT, ROLE_TARGET, Tap, Tapping


@dataclass(frozen=True)
class MIResult:
    """Shared information between source at ``lag`` and target at 0."""

    source: ChannelRef
    lag: int
    target: ChannelRef
    mi_bits: float
    bins: int
    samples: int


def default_bins(n_samples: int) -> int:
    """Rule of thumb: fourth root of the sample count, clamped to [4, 32]."""
    return int(np.clip(math.ceil(n_samples ** 0.25), 4, 32))


def _entropy_bits(p: np.ndarray) -> float:
    """Plug-in entropy; terms are sorted before summation so any two
    arrangements of the same cell masses give bit-identical results."""
    q = p[p > 0]
    terms = q * np.log2(q)
    terms.sort()
    return float(-terms.sum())


def mutual_information(x, y, bins: int) -> float:
    """Plug-in MI of two equally long sample series, in bits (>= 0).

    A constant series carries no information, so zero-range input gives 0.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise TapkitError(f"sample counts differ: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 2:
        raise TapkitError(f"need at least 2 samples, got {x.shape[0]}")
    if bins < 2:
        raise TapkitError(f"need at least 2 bins, got {bins}")
    if x.min() == x.max() or y.min() == y.max():
        return 0.0
    counts, _, _ = np.histogram2d(x, y, bins=bins)
    p = counts / counts.sum()
    h_x = _entropy_bits(p.sum(axis=1))
    h_y = _entropy_bits(p.sum(axis=0))
    h_xy = _entropy_bits(p.ravel())
    return max(0.0, h_x + h_y - h_xy)


def _pooled_pairs(matrix: SensorimotorMatrix, src_row: int, tgt_row: int,
                  lag: int) -> tuple[np.ndarray, np.ndarray]:
    """(source[t + lag], target[t]) pairs pooled across episodes, lag <= 0."""
    xs, ys = [], []
    for ep in matrix.episodes:
        T = ep.data.shape[1]
        if T - (-lag) < 1:
            continue
        ts = np.arange(-lag, T)
        xs.append(ep.data[src_row, ts + lag])
        ys.append(ep.data[tgt_row, ts])
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ys)


def lag_scan(matrix: SensorimotorMatrix, source: ChannelRef, target: ChannelRef,
             max_lag: int, bins: int | None = None) -> list[MIResult]:
    """MI between source and target for every lag 0, -1, ..., -max_lag.

    The bin count (when not given) is fixed from the deepest lag's sample
    count so the scan is comparable across lags.
    """
    if max_lag < 0:
        raise TapkitError(f"max_lag must be >= 0, got {max_lag}")
    src_row = matrix.space.resolve(source.group, source.index)
    tgt_row = matrix.space.resolve(target.group, target.index)
    deepest = sum(max(0, ep.data.shape[1] - max_lag) for ep in matrix.episodes)
    if deepest < 2:
        raise TapkitError(
            f"insufficient data: {deepest} sample(s) at lag {-max_lag}, need >= 2"
        )
    if bins is None:
        bins = default_bins(deepest)
    results = []
    for lag in range(0, -max_lag - 1, -1):
        xs, ys = _pooled_pairs(matrix, src_row, tgt_row, lag)
        results.append(MIResult(
            source=source,
            lag=lag,
            target=target,
            mi_bits=mutual_information(xs, ys, bins),
            bins=bins,
            samples=int(xs.shape[0]),
        ))
    return results


def effective_tapping(matrix: SensorimotorMatrix, target: ChannelRef,
                      max_lag: int, bins: int | None = None,
                      threshold_frac: float = 0.5,
                      name: str = "effective") -> Tapping:
    """Build the tapping the data itself supports.

    Scans every channel at every lag 0..-max_lag against the target (skipping
    the target's own lag-0 cell), keeps the cells whose MI reaches
    ``threshold_frac`` of the maximum found, and emits them as input taps
    feeding target@0. The result is always causal.
    """
    if not 0.0 < threshold_frac <= 1.0:
        raise TapkitError(f"threshold_frac must be in (0, 1], got {threshold_frac}")
    # Validates the target reference before any scanning.
    matrix.space.resolve(target.group, target.index)
    scans: list[MIResult] = []
    for ref in matrix.space.channel_refs():
        for res in lag_scan(matrix, ref, target, max_lag, bins):
            if res.source == target and res.lag == 0:
                continue
            scans.append(res)
    if not scans:
        raise TapkitError(
            "nothing to scan: the target's own lag-0 cell is the only candidate"
        )
    max_mi = max(res.mi_bits for res in scans)
    if max_mi == 0.0:
        raise TapkitError("no dependency detected: all scanned MI estimates are 0")
    taps = [
        Tap(res.source.group, res.lag, ROLE_INPUT, channels=(res.source.index,))
        for res in scans
        if res.mi_bits >= threshold_frac * max_mi
    ]
    taps.append(Tap(target.group, 0, ROLE_TARGET, channels=(target.index,)))
    return Tapping(name, matrix.space, tuple(taps))
