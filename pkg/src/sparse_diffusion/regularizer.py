"""Sparsity penalties and their subgradients.

Two penalties are supported besides ``none``:

* ``l1``: ``f(w) = sum |w_m|`` with subgradient ``sign(w)`` (zero attractor).
* ``reweighted_l1``: ``f(w) = sum |w_m| / (eps + |w_m|)`` with subgradient
  ``sign(w_m) / (eps + |w_m|)`` (reweighted zero attractor).

All functions act on the last axis, so a stacked ``(N, M)`` array of node
estimates is handled in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("none", "l1", "reweighted_l1")
_ALIASES = {"none": "none", "za": "l1", "l1": "l1", "rza": "reweighted_l1", "reweighted_l1": "reweighted_l1"}


@dataclass(frozen=True)
class RegularizerSpec:
    """Penalty kind and, for the reweighted form, its ``epsilon``."""

    kind: str = "none"
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown regularizer kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "reweighted_l1":
            if self.epsilon is None or not self.epsilon > 0:
                raise ValueError(f"reweighted_l1 needs epsilon > 0, got {self.epsilon}")

    @classmethod
    def from_name(cls, name: str, epsilon: float | None = None) -> "RegularizerSpec":
        """Accept config names ``none`` / ``za`` / ``rza`` as well as the kind names."""
        try:
            kind = _ALIASES[name.lower()]
        except KeyError:
            raise ValueError(f"unknown regularizer {name!r}; expected none, za or rza") from None
        return cls(kind, epsilon if kind == "reweighted_l1" else None)

    @property
    def short_name(self) -> str:
        return {"none": "none", "l1": "za", "reweighted_l1": "rza"}[self.kind]


def eval_f(spec: RegularizerSpec, w) -> np.ndarray | float:
    """Penalty value; reduces over the last axis."""
    w = np.asarray(w, dtype=float)
    a = np.abs(w)
    if spec.kind == "none":
        out = np.zeros(w.shape[:-1]) if w.ndim else 0.0
    elif spec.kind == "l1":
        out = a.sum(axis=-1)
    else:
        out = (a / (spec.epsilon + a)).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def subgradient(spec: RegularizerSpec, w) -> np.ndarray:
    """Subgradient with ``sign(0) = 0``, applied elementwise."""
    w = np.asarray(w, dtype=float)
    if spec.kind == "none":
        return np.zeros_like(w)
    s = np.sign(w)
    if spec.kind == "l1":
        return s
    return s / (spec.epsilon + np.abs(w))


def subgradient_max_norm(spec: RegularizerSpec, M: int) -> float:
    """Upper bound on ``||subgradient(spec, w)||`` over all ``w`` of length ``M``."""
    if spec.kind == "none":
        return 0.0
    if spec.kind == "l1":
        return float(np.sqrt(M))
    return float(np.sqrt(M) / spec.epsilon)
