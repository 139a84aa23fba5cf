"""Streaming data ``d_k(i) = u_{k,i} w^o(i) + v_k(i)`` with white Gaussian regressors.

Random numbers are counter-based. Every ``(run, node)`` pair owns a Philox
key derived from the master seed, and iteration ``i`` reads a fixed block of
counters starting at ``i * blocks_per_iteration``. Normals come from the
inverse CDF, so each draw consumes exactly one 64-bit word. A single sample
can therefore be regenerated in isolation, and bulk generation of a whole run
gives bit-identical values whatever the order or parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

_WORDS_PER_COUNTER = 4
_STREAM_DATA = 0
_STREAM_TRUTH = 1
_STREAM_TOPOLOGY = 2
_STREAM_PROFILES = 3


@dataclass(frozen=True)
class NodeProfile:
    """Per-node statistics: ``R_{u,k} = regressor_variance * I_M``, noise power and step size."""

    regressor_variance: float
    noise_variance: float
    step_size: float

    def __post_init__(self):
        if not self.regressor_variance > 0:
            raise ValueError(f"regressor_variance must be positive, got {self.regressor_variance}")
        if not self.noise_variance >= 0:
            raise ValueError(f"noise_variance must be nonnegative, got {self.noise_variance}")
        if not self.step_size > 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")


def profile_arrays(profiles) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(regressor_variances, noise_variances, step_sizes)`` as float arrays."""
    su = np.array([p.regressor_variance for p in profiles], dtype=float)
    sv = np.array([p.noise_variance for p in profiles], dtype=float)
    mu = np.array([p.step_size for p in profiles], dtype=float)
    return su, sv, mu


def sample_profiles(num_nodes: int, step_size: float, rng,
                    regressor_range=(0.5, 2.0), noise_range=(0.05, 0.25)) -> list[NodeProfile]:
    """Draw heterogeneous node statistics uniformly from the given ranges."""
    su = rng.uniform(*regressor_range, size=num_nodes)
    sv = rng.uniform(*noise_range, size=num_nodes)
    return [NodeProfile(float(a), float(b), float(step_size)) for a, b in zip(su, sv)]


@dataclass(frozen=True)
class GroundTruthSchedule:
    """Piecewise-constant true vector; segment ``j`` is active from ``starts[j]`` onward."""

    dimension: int
    segments: tuple = field(default=())

    def __post_init__(self):
        segs = tuple((int(s), np.array(w, dtype=float)) for s, w in self.segments)
        if not segs:
            raise ValueError("a schedule needs at least one segment")
        starts = [s for s, _ in segs]
        if starts[0] != 0:
            raise ValueError(f"first segment must start at 0, got {starts[0]}")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError(f"segment starts must be strictly increasing, got {starts}")
        for s, w in segs:
            if w.shape != (self.dimension,):
                raise ValueError(f"segment at {s} has shape {w.shape}, expected ({self.dimension},)")
            w.setflags(write=False)
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, w_o) -> "GroundTruthSchedule":
        w_o = np.asarray(w_o, dtype=float)
        return cls(w_o.size, ((0, w_o),))

    @property
    def starts(self) -> list[int]:
        return [s for s, _ in self.segments]

    def phase_bounds(self, horizon: int) -> list[tuple[int, int]]:
        """``[start, stop)`` iteration ranges of the segments, clipped to ``horizon``."""
        starts = [s for s in self.starts if s < horizon]
        return list(zip(starts, starts[1:] + [horizon]))

    def as_array(self, horizon: int) -> np.ndarray:
        """Active truth for every iteration, shape ``(horizon, M)``."""
        out = np.empty((horizon, self.dimension))
        for start, stop in self.phase_bounds(horizon):
            out[start:stop] = self.segments[self.starts.index(start)][1]
        return out


def active_truth(truth: GroundTruthSchedule, iteration: int) -> np.ndarray:
    """The last segment whose start is ``<= iteration``."""
    current = truth.segments[0][1]
    for start, w in truth.segments:
        if start > iteration:
            break
        current = w
    return current


def make_sparse_truth(M: int, support_size: int, value: float = 1.0, rng=None) -> np.ndarray:
    """Vector with ``support_size`` entries equal to ``value`` at uniformly random positions."""
    if not 0 <= support_size <= M:
        raise ValueError(f"support_size must lie in [0, {M}], got {support_size}")
    w = np.zeros(M)
    if support_size:
        rng = np.random.default_rng() if rng is None else rng
        w[rng.choice(M, size=support_size, replace=False)] = value
    return w


def nested_sparse_schedule(M: int, phases, rng, value: float = 1.0) -> GroundTruthSchedule:
    """Schedule whose supports grow by adding random positions to the previous support.

    ``phases`` is a sequence of ``(start_iteration, support_size)`` with
    nondecreasing sizes, e.g. ``[(0, 1), (1000, 25), (2000, 50)]``.
    """
    order = rng.permutation(M)
    segs = []
    prev = 0
    for start, size in phases:
        if not prev <= size <= M:
            raise ValueError(f"support sizes must be nondecreasing within [0, {M}], got {size} after {prev}")
        w = np.zeros(M)
        w[order[:size]] = value
        segs.append((start, w))
        prev = size
    return GroundTruthSchedule(M, tuple(segs))


@dataclass(frozen=True)
class DataSample:
    u: np.ndarray
    d: float


def substream_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for auxiliary draws (truth supports, topology, profiles), keyed by ``path``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=tuple(path))))


def _node_key(master_seed: int, run: int, node: int) -> np.ndarray:
    ss = np.random.SeedSequence(master_seed, spawn_key=(_STREAM_DATA, run, node))
    return ss.generate_state(2, dtype=np.uint64)


def _blocks_per_iteration(M: int) -> int:
    return -(-(M + 1) // _WORDS_PER_COUNTER)


def _standard_normals(raw: np.ndarray) -> np.ndarray:
    # midpoint of the 53-bit grid keeps the uniform strictly inside (0, 1)
    unif = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(unif)


def node_normals(master_seed: int, run: int, node: int, M: int, start: int, count: int) -> np.ndarray:
    """Standard normals for iterations ``start .. start+count-1`` of one node.

    Row ``j`` holds ``M`` regressor entries followed by one noise entry.
    """
    blocks = _blocks_per_iteration(M)
    width = blocks * _WORDS_PER_COUNTER
    bitgen = np.random.Philox(key=_node_key(master_seed, run, node), counter=[start * blocks, 0, 0, 0])
    raw = bitgen.random_raw(count * width).reshape(count, width)[:, : M + 1]
    return _standard_normals(raw)


def sample(node: NodeProfile, truth: GroundTruthSchedule, iteration: int, master_seed: int,
           node_index: int, run: int = 0) -> DataSample:
    """One measurement pair for ``(run, node_index, iteration)``.

    Matches the corresponding row of :func:`generate_run_data` bit for bit.
    """
    if iteration < 0:
        raise ValueError(f"iteration must be nonnegative, got {iteration}")
    z = node_normals(master_seed, run, node_index, truth.dimension, iteration, 1)[0]
    u = np.sqrt(node.regressor_variance) * z[:-1]
    v = np.sqrt(node.noise_variance) * z[-1]
    return DataSample(u, float(np.sum(u * active_truth(truth, iteration), axis=-1) + v))


@dataclass
class RunData:
    """All samples of one realization: ``U`` has shape ``(T, N, M)``, ``d`` has shape ``(T, N)``."""

    U: np.ndarray
    d: np.ndarray

    @property
    def horizon(self) -> int:
        return self.d.shape[0]

    def permuted(self, perm) -> "RunData":
        perm = np.asarray(perm)
        return RunData(self.U[:, perm], self.d[:, perm])


def generate_run_data(profiles, truth: GroundTruthSchedule, horizon: int, master_seed: int, run: int = 0) -> RunData:
    """Bulk-generate a realization from the per-node counter-based streams."""
    M = truth.dimension
    N = len(profiles)
    su, sv, _ = profile_arrays(profiles)
    U = np.empty((horizon, N, M))
    v = np.empty((horizon, N))
    for k in range(N):
        z = node_normals(master_seed, run, k, M, 0, horizon)
        U[:, k, :] = np.sqrt(su[k]) * z[:, :M]
        v[:, k] = np.sqrt(sv[k]) * z[:, M]
    W = truth.as_array(horizon)
    # same reduction as sample() so each d_k(i) matches it bit for bit
    d = np.sum(U * W[:, None, :], axis=-1) + v
    return RunData(U, d)
