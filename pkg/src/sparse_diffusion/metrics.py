"""Learning curves, steady-state summaries and differential MSD.

MSD values are kept in linear scale; decibels are computed only for
reporting, with ``-inf`` standing in for an exact zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def to_db(x):
    """``10 log10(x)`` with ``-inf`` for zero instead of a warning."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LearningCurve:
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError(f"a learning curve is one-dimensional, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class SteadyStateStats:
    window_start: int
    window_len: int
    mean_msd_linear: float

    @property
    def mean_msd_db(self) -> float:
        return to_db(self.mean_msd_linear)


def network_msd_instant(w, w_o) -> float:
    """``(1/N) sum_k ||w^o - w_k||^2`` for stacked estimates ``w`` of shape ``(N, M)``."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    w_o = np.asarray(w_o, dtype=float)
    if w.shape[-1] != w_o.shape[-1]:
        raise ValueError(f"estimate length {w.shape[-1]} does not match truth length {w_o.shape[-1]}")
    return float(np.mean(np.sum((w_o - w) ** 2, axis=-1)))


def _as_values(curve):
    return curve.values if isinstance(curve, LearningCurve) else np.asarray(curve, dtype=float)


def steady_state(curve, window_len: int, end: int | None = None) -> SteadyStateStats:
    """Mean over the ``window_len`` samples ending at ``end`` (default: the curve's end)."""
    v = _as_values(curve)
    end = len(v) if end is None else end
    if window_len < 1:
        raise ValueError(f"window_len must be positive, got {window_len}")
    if not 0 < end <= len(v):
        raise ValueError(f"window end {end} outside curve of length {len(v)}")
    if window_len > end:
        raise ValueError(f"window of {window_len} samples does not fit before index {end}")
    start = end - window_len
    seg = v[start:end]
    # offset by the first sample so a constant window returns that constant exactly
    return SteadyStateStats(start, window_len, float(seg[0] + np.mean(seg - seg[0])))


def differential_msd(curve_a, curve_b, window_len: int, end: int | None = None) -> float:
    """Steady-state dB of ``a`` minus that of ``b``; negative when ``a`` is better."""
    a, b = _as_values(curve_a), _as_values(curve_b)
    if len(a) != len(b):
        raise ValueError(f"curve lengths differ: {len(a)} vs {len(b)}")
    return steady_state(a, window_len, end).mean_msd_db - steady_state(b, window_len, end).mean_msd_db


def phase_steady_states(curve, phase_bounds, window_len: int) -> list[SteadyStateStats]:
    """Steady state at the end of every ``(start, stop)`` phase."""
    return [steady_state(curve, min(window_len, stop - start), stop) for start, stop in phase_bounds]


def gamma_trace_summary(trace, phase_bounds, window_len: int) -> list[float]:
    """Mean of a gamma trace over the final ``window_len`` iterations of each phase."""
    t = np.asarray(trace, dtype=float)
    return [float(t[max(start, stop - window_len):stop].mean()) for start, stop in phase_bounds]
