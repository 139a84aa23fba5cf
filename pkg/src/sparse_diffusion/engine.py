"""ATC and CTA sparse diffusion LMS, plus Monte-Carlo orchestration.

Each iteration is a two-phase synchronous update. In ATC every node first
adapts from the previous estimates and then averages its neighbors'
intermediate estimates:

    psi_k = w_k + mu_k sum_l c_lk u_l^T (d_l - u_l w_k) - mu_k gamma_k df(w_k)
    w_k   = sum_l a_lk psi_l

CTA averages first and adapts from the averaged estimate. State arrays are
stacked as ``(N, M)`` with one row per node.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .regularizer import RegularizerSpec, eval_f, subgradient
from .signal_model import GroundTruthSchedule, RunData, generate_run_data, profile_arrays
from .topology import CombinationMatrices, Topology

DIVERGENCE_THRESHOLD = 1e8
GAMMA_DENOMINATOR_TOL = 1e-15

MODES = ("ATC", "CTA")
COOPERATION = ("full", "no_measurement_exchange", "non_cooperative")
GAMMA_SCOPES = ("local", "network")


@dataclass(frozen=True)
class FixedGamma:
    value: float = 0.0

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.value}")


@dataclass(frozen=True)
class AdaptiveGamma:
    """Data-driven regularization weight with trigger ``eta``.

    ``eta=None`` tracks ``eta_scale * ||w^o(i)||_1`` of the active truth
    segment; a number fixes the trigger for the whole run. ``scope`` selects
    the neighborhood sums (``local``) or sums over the whole network.
    """

    eta: float | None = None
    eta_scale: float = 1.0
    scope: str = "local"

    def __post_init__(self):
        if self.eta is not None and not self.eta >= 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")
        if not self.eta_scale >= 0:
            raise ValueError(f"eta_scale must be nonnegative, got {self.eta_scale}")
        if self.scope not in GAMMA_SCOPES:
            raise ValueError(f"scope must be one of {GAMMA_SCOPES}, got {self.scope!r}")

    def trigger(self, w_o) -> float:
        if self.eta is not None:
            return float(self.eta) * self.eta_scale
        return float(np.abs(w_o).sum()) * self.eta_scale


@dataclass(frozen=True)
class EngineConfig:
    mode: str = "ATC"
    cooperation: str = "full"
    regularizer: RegularizerSpec = field(default_factory=RegularizerSpec)
    gamma: FixedGamma | AdaptiveGamma = field(default_factory=FixedGamma)
    horizon: int = 1000
    label: str = ""

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.cooperation not in COOPERATION:
            raise ValueError(f"cooperation must be one of {COOPERATION}, got {self.cooperation!r}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not self.label:
            object.__setattr__(self, "label", default_label(self))

    @property
    def adaptive(self) -> bool:
        return isinstance(self.gamma, AdaptiveGamma)


def default_label(cfg: EngineConfig) -> str:
    prefix = {"none": "", "l1": "ZA-", "reweighted_l1": "RZA-"}[cfg.regularizer.kind]
    if cfg.cooperation == "non_cooperative":
        return f"{prefix}LMS"
    return f"{prefix}{cfg.mode}"


@dataclass
class NetworkState:
    """Stacked estimates ``w`` and intermediates ``psi`` (shape ``(N, M)``) at iteration ``i``."""

    w: np.ndarray
    psi: np.ndarray
    iteration: int = 0
    gamma_current: np.ndarray | None = None

    @classmethod
    def zeros(cls, N: int, M: int) -> "NetworkState":
        return cls(np.zeros((N, M)), np.zeros((N, M)), 0, np.zeros(N))


@dataclass(frozen=True)
class DivergenceEvent:
    iteration: int
    node: int


class DivergenceError(RuntimeError):
    def __init__(self, event: DivergenceEvent, state: NetworkState):
        super().__init__(f"divergence at iteration {event.iteration}, node {event.node}")
        self.event = event
        self.state = state


@dataclass
class RunResult:
    """Traces of one realization.

    ``msd`` is the network MSD per iteration, ``node_msd`` the per-node
    squared deviation, ``gamma`` the node-averaged regularization weight in
    use. If the run diverged the traces stop at the offending iteration.
    ``weights`` holds estimates for the requested record window, if any.
    """

    label: str
    msd: np.ndarray
    node_msd: np.ndarray
    gamma: np.ndarray
    divergence: DivergenceEvent | None = None
    weights: np.ndarray | None = None
    weights_start: int = 0

    @property
    def diverged(self) -> bool:
        return self.divergence is not None


def effective_matrices(cfg: EngineConfig, mats: CombinationMatrices) -> CombinationMatrices:
    """Matrices actually used under the configured cooperation level."""
    if cfg.cooperation == "full":
        return mats
    if cfg.cooperation == "no_measurement_exchange":
        return CombinationMatrices(mats.A, np.eye(mats.num_nodes))
    return CombinationMatrices.identity(mats.num_nodes)


def neighborhood_mask(mats: CombinationMatrices) -> np.ndarray:
    """``mask[l, k]`` is True when node ``l`` is visible to node ``k``."""
    return (mats.A != 0) | (mats.C != 0) | np.eye(mats.num_nodes, dtype=bool)


def adaptive_gamma_local(k: int, neighbor_estimates, neighbor_steps, spec: RegularizerSpec, eta: float) -> float:
    """Regularization weight of node ``k`` from its neighborhood's previous estimates.

    Parameters
    ----------
    k : int
        Node index, kept for symmetry with the network-level call; the
        estimates passed in already define the neighborhood.
    neighbor_estimates : array_like, shape (L, M)
        ``w_{l,i-1}`` for every ``l`` in the neighborhood of ``k``.
    neighbor_steps : array_like, shape (L,)
        Step sizes ``mu_l`` of the same nodes.
    spec : RegularizerSpec
    eta : float
        Trigger; the weight is zero unless the penalties exceed it on average.

    Returns
    -------
    float
        ``max(0, sum mu_l (f(w_l) - eta) / sum mu_l^2 ||df(w_l)||^2)``, or 0
        when the denominator is below ``GAMMA_DENOMINATOR_TOL``.
    """
    W = np.atleast_2d(np.asarray(neighbor_estimates, dtype=float))
    mu = np.atleast_1d(np.asarray(neighbor_steps, dtype=float))
    num = np.sum(mu * (eval_f(spec, W) - eta))
    den = np.sum(mu**2 * np.sum(subgradient(spec, W) ** 2, axis=-1))
    if den < GAMMA_DENOMINATOR_TOL:
        return 0.0
    return float(max(0.0, num / den))


def adaptive_gamma_all(W, mu, spec: RegularizerSpec, eta: float, mask=None) -> np.ndarray:
    """Vectorized rule for every node; ``mask=None`` uses network-wide sums."""
    num_terms = mu * (eval_f(spec, W) - eta)
    den_terms = mu**2 * np.sum(subgradient(spec, W) ** 2, axis=-1)
    if mask is None:
        num = np.full(len(mu), num_terms.sum())
        den = np.full(len(mu), den_terms.sum())
    else:
        num = mask.T.astype(float) @ num_terms
        den = mask.T.astype(float) @ den_terms
    ok = den >= GAMMA_DENOMINATOR_TOL
    out = np.zeros(len(mu))
    out[ok] = np.maximum(0.0, num[ok] / den[ok])
    return out


def _adapt(Wb, U, d, C, C_is_identity, mu_col, mu_gamma, sub):
    # LMS correction from (possibly shared) data around base estimates Wb, then the zero attractor
    if C_is_identity:
        err = d - np.add.reduce(U * Wb, axis=1)
        grad = U * err[:, None]
    else:
        err = d[:, None] - U @ Wb.T  # err[l, k] = d_l - u_l w_k
        grad = (C * err).T @ U
    out = Wb + mu_col * grad
    if sub is not None:
        out -= mu_gamma[:, None] * sub
    return out


class _Kernel:
    """Precomputed per-configuration quantities shared by the step functions."""

    def __init__(self, cfg: EngineConfig, mats: CombinationMatrices, profiles):
        eff = effective_matrices(cfg, mats)
        self.cfg = cfg
        self.A_T = np.ascontiguousarray(eff.A.T)
        self.A_is_identity = bool(np.array_equal(eff.A, np.eye(eff.num_nodes)))
        self.C = eff.C
        self.C_is_identity = bool(np.array_equal(eff.C, np.eye(eff.num_nodes)))
        self.mask = neighborhood_mask(eff)
        _, _, self.mu = profile_arrays(profiles)
        if len(self.mu) != eff.num_nodes:
            raise ValueError(f"{len(self.mu)} profiles for {eff.num_nodes} nodes")
        self.mu_col = self.mu[:, None]
        self.spec = cfg.regularizer
        self.fixed_gamma = None if cfg.adaptive else np.full(eff.num_nodes, float(cfg.gamma.value))
        # no zero-attractor term at all: unregularized, or a fixed weight of zero
        self.inactive = self.spec.kind == "none" or (self.fixed_gamma is not None and not self.fixed_gamma.any())

    def gamma(self, W_prev, w_o) -> np.ndarray:
        if self.fixed_gamma is not None:
            return self.fixed_gamma
        g = self.cfg.gamma
        mask = self.mask if g.scope == "local" else None
        return adaptive_gamma_all(W_prev, self.mu, self.spec, g.trigger(w_o), mask)

    def step(self, W, U, d, w_o):
        gam = self.gamma(W, w_o)
        mu_gamma = self.mu * gam
        if self.cfg.mode == "ATC":
            sub = None if self.inactive else subgradient(self.spec, W)
            psi = _adapt(W, U, d, self.C, self.C_is_identity, self.mu_col, mu_gamma, sub)
            W_new = psi if self.A_is_identity else self.A_T @ psi
        else:
            psi = W if self.A_is_identity else self.A_T @ W
            sub = None if self.inactive else subgradient(self.spec, psi)
            W_new = _adapt(psi, U, d, self.C, self.C_is_identity, self.mu_col, mu_gamma, sub)
        return W_new, psi, gam


_CHUNK = 64


def _check_divergence(W, iteration) -> DivergenceEvent | None:
    bad = ~np.isfinite(W) | (np.abs(W) > DIVERGENCE_THRESHOLD)
    if bad.any():
        return DivergenceEvent(iteration, int(np.argwhere(bad)[0, 0]))
    return None


def _step(state, U, d, config, mats, profiles, w_o, mode):
    kern = _Kernel(replace(config, mode=mode), mats, profiles)
    W, psi, gam = kern.step(state.w, np.asarray(U, float), np.asarray(d, float), w_o)
    new = NetworkState(W, psi, state.iteration + 1, gam)
    event = _check_divergence(W, state.iteration)
    if event is not None:
        raise DivergenceError(event, new)
    return new


def atc_step(state: NetworkState, U, d, config: EngineConfig, mats: CombinationMatrices, profiles, w_o=None) -> NetworkState:
    """One adapt-then-combine iteration.

    ``U`` is ``(N, M)`` (row ``k`` is ``u_{k,i}``) and ``d`` is ``(N,)``.
    ``w_o`` is only needed when the adaptive trigger tracks the truth.
    Raises :class:`DivergenceError` carrying the event and the offending state.
    """
    return _step(state, U, d, config, mats, profiles, w_o, "ATC")


def cta_step(state: NetworkState, U, d, config: EngineConfig, mats: CombinationMatrices, profiles, w_o=None) -> NetworkState:
    """One combine-then-adapt iteration; see :func:`atc_step`."""
    return _step(state, U, d, config, mats, profiles, w_o, "CTA")


def run_realization(config: EngineConfig, topology: Topology | None, mats: CombinationMatrices, profiles,
                    truth: GroundTruthSchedule, seed: int, run: int = 0, data: RunData | None = None,
                    record_window: tuple[int, int] | None = None) -> RunResult:
    """Iterate ``config.horizon`` steps from ``w = 0``.

    Data come from the counter-based streams of ``(seed, run)`` unless
    ``data`` is given. ``record_window=(start, stop)`` stores the estimates
    ``w_{k,i}`` for ``start <= i < stop``.
    """
    T = config.horizon
    if topology is not None and topology.num_nodes != mats.num_nodes:
        raise ValueError(f"topology has {topology.num_nodes} nodes, matrices have {mats.num_nodes}")
    if data is None:
        data = generate_run_data(profiles, truth, T, seed, run)
    if data.horizon < T:
        raise ValueError(f"data cover {data.horizon} iterations, horizon is {T}")
    kern = _Kernel(config, mats, profiles)
    N, M = mats.num_nodes, truth.dimension
    W_o = truth.as_array(T)
    W = np.zeros((N, M))
    hist = np.empty((T, N, M))
    gamma = np.empty(T)
    fixed_mean = None if kern.fixed_gamma is None else float(kern.fixed_gamma.mean())
    event = None
    # divergence is screened per chunk, then located exactly within the offending chunk
    with np.errstate(over="ignore", invalid="ignore"):
        for c0 in range(0, T, _CHUNK):
            c1 = min(T, c0 + _CHUNK)
            for i in range(c0, c1):
                W, _, gam = kern.step(W, data.U[i], data.d[i], W_o[i])
                gamma[i] = fixed_mean if fixed_mean is not None else np.add.reduce(gam) / N
                hist[i] = W
            if not np.abs(hist[c0:c1]).max() <= DIVERGENCE_THRESHOLD:
                for i in range(c0, c1):
                    event = _check_divergence(hist[i], i)
                    if event is not None:
                        break
                break
    stop = T if event is None else event.iteration
    hist = hist[:stop]
    node_msd = np.add.reduce((W_o[:stop, None, :] - hist) ** 2, axis=2)
    rec = None
    if record_window is not None:
        r0, r1 = max(0, record_window[0]), min(T, record_window[1])
        rec = hist[r0:max(r0, min(stop, r1))].copy()
    return RunResult(config.label, node_msd.mean(axis=1), node_msd, gamma[:stop], event, rec,
                     r0 if rec is not None else 0)


@dataclass
class MonteCarloResult:
    """Run-averaged traces over the non-diverged realizations."""

    label: str
    msd: np.ndarray
    node_msd: np.ndarray
    gamma: np.ndarray
    num_runs: int
    diverged_runs: list[int]
    runs: list[RunResult] | None = None

    @property
    def num_diverged(self) -> int:
        return len(self.diverged_runs)

    @property
    def num_converged(self) -> int:
        return self.num_runs - self.num_diverged


def _run_job(args):
    configs, mats, profiles, truth, seed, run, record_window = args
    horizon = max(c.horizon for c in configs)
    data = generate_run_data(profiles, truth, horizon, seed, run)
    return [run_realization(c, None, mats, profiles, truth, seed, run, data, record_window) for c in configs]


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def run_monte_carlo_many(configs: Sequence[EngineConfig], topology: Topology | None, mats: CombinationMatrices,
                         profiles, truth: GroundTruthSchedule, num_runs: int, master_seed: int,
                         workers: int = 1, keep_runs: bool = False, record_window=None,
                         run_indices: Sequence[int] | None = None) -> list[MonteCarloResult]:
    """Monte-Carlo average of several algorithms on common random data.

    Every run generates its data once and feeds it to all ``configs``, so the
    algorithms are compared on identical realizations. Runs are averaged in
    run order, hence the result does not depend on ``workers``.
    ``run_indices`` overrides the substream index of each run.
    """
    if num_runs < 1:
        raise ValueError(f"num_runs must be >= 1, got {num_runs}")
    if topology is not None and topology.num_nodes != mats.num_nodes:
        raise ValueError(f"topology has {topology.num_nodes} nodes, matrices have {mats.num_nodes}")
    runs = list(range(num_runs)) if run_indices is None else list(run_indices)
    if len(runs) != num_runs:
        raise ValueError(f"{len(runs)} run indices for {num_runs} runs")
    configs = list(configs)
    jobs = [(configs, mats, profiles, truth, master_seed, r, record_window) for r in runs]
    if workers > 1 and num_runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_run = list(pool.map(_run_job, jobs, chunksize=max(1, num_runs // (4 * workers))))
    else:
        per_run = [_run_job(j) for j in jobs]
    out = []
    for c_idx, cfg in enumerate(configs):
        results = [pr[c_idx] for pr in per_run]
        out.append(_average(cfg, results, keep_runs))
    return out


def run_monte_carlo(config: EngineConfig, topology: Topology | None, mats: CombinationMatrices, profiles,
                    truth: GroundTruthSchedule, num_runs: int, master_seed: int, workers: int = 1,
                    keep_runs: bool = True, record_window=None, run_indices=None) -> MonteCarloResult:
    """Single-algorithm form of :func:`run_monte_carlo_many`."""
    return run_monte_carlo_many([config], topology, mats, profiles, truth, num_runs, master_seed,
                                workers, keep_runs, record_window, run_indices)[0]


def _average(cfg: EngineConfig, results: list[RunResult], keep_runs: bool) -> MonteCarloResult:
    T = cfg.horizon
    ok = [r for r in results if not r.diverged]
    diverged = [i for i, r in enumerate(results) if r.diverged]
    N = results[0].node_msd.shape[1]
    if ok:
        node_msd = np.zeros((T, N))
        gamma = np.zeros(T)
        for r in ok:
            node_msd += r.node_msd
            gamma += r.gamma
        node_msd /= len(ok)
        gamma /= len(ok)
    else:
        node_msd = np.full((T, N), np.nan)
        gamma = np.full(T, np.nan)
    return MonteCarloResult(cfg.label, node_msd.mean(axis=1), node_msd, gamma, len(results), diverged,
                            results if keep_runs else None)
