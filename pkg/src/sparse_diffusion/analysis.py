"""Mean and mean-square performance theory of sparse diffusion LMS.

Notation follows the stacked network model: ``D`` is the block-diagonal
matrix of combined regressor covariances, ``G`` the noise-gradient
covariance, ``stepM`` the block step-size matrix, and ``B = A_ext^T (I - stepM D)``
the mean error propagation matrix. With column-major ``vec``, the small-step
weighting operator is

    F = B^T (x) B^T,   F vec(S) = vec(B^T S B).

Steady-state MSD weights are obtained from ``(I - F) sigma = t``. Dense
Kronecker matrices are only formed for ``N * M <= DENSE_CAP``; above that the
fixed point ``sigma <- t + F sigma`` is iterated on the ``NM x NM`` matrix
form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .regularizer import RegularizerSpec, subgradient
from .signal_model import profile_arrays
from .topology import CombinationMatrices, Topology, block_extend

DENSE_CAP = 64
FIXED_POINT_RTOL = 1e-10


class StabilityError(ValueError):
    """A closed-form quantity requires a stable recursion and the configuration is not."""


class DenseSizeError(MemoryError):
    """Dense Kronecker form requested above the configured size cap."""


@dataclass(frozen=True)
class MomentSet:
    """Second-order statistics of the stacked network model.

    Attributes
    ----------
    D : ndarray, shape (NM, NM)
        Block diagonal, block ``k`` is ``sum_l c_lk R_{u,l}``.
    G : ndarray, shape (NM, NM)
        ``C_ext^T blockdiag{sigma_v,k^2 R_{u,k}} C_ext``.
    stepM : ndarray, shape (NM, NM)
        ``diag{mu_k I_M}``.
    """

    D: np.ndarray
    G: np.ndarray
    stepM: np.ndarray
    num_nodes: int
    dim: int

    def block(self, X, k: int) -> np.ndarray:
        M = self.dim
        return X[k * M:(k + 1) * M, k * M:(k + 1) * M]

    @property
    def step_sizes(self) -> np.ndarray:
        return np.diag(self.stepM)[:: self.dim].copy()


def build_moments(topology: Topology | None, mats: CombinationMatrices, profiles, M: int) -> MomentSet:
    """Moment matrices for white regressors ``R_{u,k} = sigma_u,k^2 I_M``."""
    N = mats.num_nodes
    if topology is not None and topology.num_nodes != N:
        raise ValueError(f"topology has {topology.num_nodes} nodes, matrices have {N}")
    su, sv, mu = profile_arrays(profiles)
    if len(su) != N:
        raise ValueError(f"{len(su)} profiles for {N} nodes")
    # D block k = sum_l c_lk sigma_u,l^2 I_M
    d_scal = mats.C.T @ su
    D = np.kron(np.diag(d_scal), np.eye(M))
    C_ext = block_extend(mats.C, M)
    G = C_ext.T @ np.kron(np.diag(sv * su), np.eye(M)) @ C_ext
    stepM = np.kron(np.diag(mu), np.eye(M))
    return MomentSet(D, G, stepM, N, M)


def step_size_bounds(moments: MomentSet) -> np.ndarray:
    """Per-node mean-stability limits ``2 / lambda_max(D_k)``."""
    return np.array([2.0 / np.linalg.eigvalsh(moments.block(moments.D, k))[-1] for k in range(moments.num_nodes)])


class MeanStability(NamedTuple):
    delta: float
    stable: bool


def check_mean_stability(moments: MomentSet) -> MeanStability:
    """Spectral radius ``delta`` of ``I - stepM D`` and whether it is below one."""
    rho = 0.0
    for k in range(moments.num_nodes):
        mu_k = moments.stepM[k * moments.dim, k * moments.dim]
        lam = np.linalg.eigvalsh(moments.block(moments.D, k))
        rho = max(rho, float(np.max(np.abs(1.0 - mu_k * lam))))
    return MeanStability(rho, rho < 1.0)


def mean_propagation(moments: MomentSet, mats: CombinationMatrices) -> np.ndarray:
    """``B = A_ext^T (I - stepM D)``."""
    A_ext = block_extend(mats.A, moments.dim)
    NM = moments.D.shape[0]
    return A_ext.T @ (np.eye(NM) - moments.stepM @ moments.D)


def _require_stable(moments: MomentSet) -> float:
    delta, stable = check_mean_stability(moments)
    if not stable:
        raise StabilityError(f"I - stepM D is not stable (spectral radius {delta:.6g} >= 1)")
    return delta


def oracle_subgradient(spec: RegularizerSpec, w_o, num_nodes: int) -> np.ndarray:
    """``df(w^o)`` stacked for every node."""
    return np.tile(subgradient(spec, w_o), num_nodes)


def empirical_subgradient(spec: RegularizerSpec, weights) -> np.ndarray:
    """Average of ``df(w_{k,i-1})`` over all leading axes of ``weights`` (..., N, M), stacked."""
    W = np.asarray(weights, dtype=float)
    if W.size == 0:
        raise ValueError("empty steady-state window")
    return subgradient(spec, W).reshape(-1, W.shape[-2] * W.shape[-1]).mean(axis=0)


def bias_predict(moments: MomentSet, mats: CombinationMatrices, gamma: float, steady_subgradient) -> np.ndarray:
    """Steady-state mean error ``E(w^o - w)`` caused by the regularizer.

    ``gamma [I - B]^{-1} A_ext^T stepM s`` where ``s`` is the stacked limit of
    the expected subgradient (see :func:`oracle_subgradient` and
    :func:`empirical_subgradient`).
    """
    _require_stable(moments)
    NM = moments.D.shape[0]
    s = np.asarray(steady_subgradient, dtype=float).reshape(NM)
    if gamma == 0:
        return np.zeros(NM)
    B = mean_propagation(moments, mats)
    A_ext = block_extend(mats.A, moments.dim)
    return gamma * np.linalg.solve(np.eye(NM) - B, A_ext.T @ (moments.stepM @ s))


def bias_bound(gamma: float, mu_max: float, df_max: float, delta: float) -> float:
    """Block-maximum-norm bound ``gamma mu_max df_max / (1 - delta)`` on the bias."""
    if not delta < 1:
        raise StabilityError(f"bias bound needs delta < 1, got {delta}")
    return float(gamma * mu_max * df_max / (1.0 - delta))


def block_max_norm_vector(z, block_dim: int) -> float:
    """``max_k ||z_k||`` over consecutive blocks of length ``block_dim``."""
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        return 0.0
    if z.size % block_dim:
        raise ValueError(f"length {z.size} is not a multiple of block size {block_dim}")
    return float(np.max(np.linalg.norm(z.reshape(-1, block_dim), axis=1)))


def block_max_norm_blockdiag(blocks) -> float:
    """Norm of a block-diagonal matrix with symmetric blocks: the largest block spectral radius.

    ``blocks`` is a sequence of ``M x M`` arrays (or an ``(N, M, M)`` array).
    """
    rho = 0.0
    for k, X in enumerate(blocks):
        X = np.asarray(X, dtype=float)
        if not np.allclose(X, X.T, rtol=0, atol=1e-12 * max(1.0, np.abs(X).max())):
            raise ValueError(f"block {k} is not symmetric")
        rho = max(rho, float(np.max(np.abs(np.linalg.eigvalsh(X)))))
    return rho


def diagonal_blocks(X, block_dim: int) -> list[np.ndarray]:
    n = X.shape[0] // block_dim
    return [X[k * block_dim:(k + 1) * block_dim, k * block_dim:(k + 1) * block_dim] for k in range(n)]


def block_max_norm_matrix(X, block_dim: int) -> float:
    """Induced block-maximum norm bound ``max_k sum_l ||X_kl||_2``.

    Exact when every block is a multiple of the identity, in particular for
    ``X (x) I_M`` where it reduces to the max absolute row sum of ``X``.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0] // block_dim
    tiles = X.reshape(n, block_dim, n, block_dim).transpose(0, 2, 1, 3)
    norms = np.linalg.norm(tiles, ord=2, axis=(2, 3))
    return float(norms.sum(axis=1).max())


class KroneckerOperator:
    """Matrix-free ``F = B^T (x) B^T`` acting on column-major ``vec`` of ``NM x NM`` matrices."""

    def __init__(self, B: np.ndarray):
        self.B = B
        self.n = B.shape[0]
        self.shape = (self.n**2, self.n**2)

    def matmat(self, S: np.ndarray) -> np.ndarray:
        return self.B.T @ S @ self.B

    def rmatmat(self, S: np.ndarray) -> np.ndarray:
        """Adjoint action ``F^T vec(S) = vec(B S B^T)``."""
        return self.B @ S @ self.B.T

    def matvec(self, sigma: np.ndarray) -> np.ndarray:
        S = vec_inv(sigma, self.n)
        return vec(self.matmat(S))

    def todense(self) -> np.ndarray:
        return np.kron(self.B.T, self.B.T)


def vec(X) -> np.ndarray:
    """Column-major vectorization."""
    return np.asarray(X).reshape(-1, order="F")


def vec_inv(x, n: int) -> np.ndarray:
    return np.asarray(x).reshape(n, n, order="F")


def build_F_approx(moments: MomentSet, mats: CombinationMatrices, dense: bool | None = None, cap: int = DENSE_CAP):
    """Small-step weighting operator ``B^T (x) B^T``.

    ``dense=None`` picks the dense matrix when ``N * M <= cap`` and a
    :class:`KroneckerOperator` otherwise; ``dense=True`` above the cap raises
    :class:`DenseSizeError`.
    """
    NM = moments.D.shape[0]
    B = mean_propagation(moments, mats)
    if dense is None:
        dense = NM <= cap
    if dense:
        if NM > cap:
            raise DenseSizeError(f"dense F would be {NM**2}x{NM**2}; cap is N*M <= {cap}")
        return np.kron(B.T, B.T)
    return KroneckerOperator(B)


def spectral_radius(X) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(X))))


def solve_fixed_point(apply_F: Callable[[np.ndarray], np.ndarray], t: np.ndarray, rtol: float = FIXED_POINT_RTOL,
                      max_iter: int = 1_000_000) -> np.ndarray:
    """Solve ``(I - F) x = t`` by ``x <- t + F x`` from ``x = t``.

    Stops when ``||x_{j+1} - x_j|| <= rtol ||x_{j+1}||``. Convergent whenever
    the spectral radius of ``F`` is below one. Works for vectors or for the
    matrix form (``apply_F`` then maps matrices to matrices).
    """
    x = np.array(t, dtype=float)
    for _ in range(max_iter):
        x_new = t + apply_F(x)
        delta = np.linalg.norm(x_new - x)
        x = x_new
        if delta <= rtol * np.linalg.norm(x):
            return x
    raise RuntimeError(f"fixed-point iteration did not reach rtol={rtol} in {max_iter} steps")


def node_selector(k: int, N: int, M: int) -> np.ndarray:
    """``vec(diag(e_k) (x) I_M)``."""
    e = np.zeros(N)
    e[k] = 1.0
    return vec(np.kron(np.diag(e), np.eye(M)))


def network_selector(N: int, M: int) -> np.ndarray:
    """``vec(I_{NM}) / N``."""
    return vec(np.eye(N * M)) / N


def noise_weighting(moments: MomentSet, mats: CombinationMatrices) -> np.ndarray:
    """``A_ext^T stepM G^T stepM A_ext``; its ``vec`` is the driving term ``r``."""
    A_ext = block_extend(mats.A, moments.dim)
    return A_ext.T @ moments.stepM @ moments.G.T @ moments.stepM @ A_ext


def steady_weighting(moments: MomentSet, mats: CombinationMatrices, selector, dense: bool | None = None) -> np.ndarray:
    """``unvec((I - F)^{-1} selector)`` as an ``NM x NM`` matrix."""
    NM = moments.D.shape[0]
    F = build_F_approx(moments, mats, dense)
    t = np.asarray(selector, dtype=float)
    if isinstance(F, np.ndarray):
        return vec_inv(np.linalg.solve(np.eye(NM * NM) - F, t), NM)
    return solve_fixed_point(F.matmat, vec_inv(t, NM))


@dataclass(frozen=True)
class GammaTerms:
    """Estimated regularization terms: per node (``Sigma_k``) and for the network selector."""

    alpha_node: np.ndarray
    beta_node: np.ndarray
    alpha_network: float
    beta_network: float


@dataclass
class PerformancePrediction:
    """Closed-form steady-state predictions.

    ``msd_node`` and ``msd_network`` always contain the exact unregularized
    term. When ``gamma_terms`` were supplied, ``gamma^2 beta - gamma alpha``
    built from the estimated terms is added and ``includes_gamma_term`` is
    True; otherwise the prediction is the ``gamma = 0`` value.
    """

    msd_node: np.ndarray
    msd_network: float
    msd_node_base: np.ndarray
    msd_network_base: float
    delta: float
    rho_F: float
    gamma: float
    includes_gamma_term: bool
    gamma_terms: GammaTerms | None = None
    bias: np.ndarray | None = None
    bias_bound: float | None = None


def msd_predict(moments: MomentSet, mats: CombinationMatrices, gamma: float = 0.0,
                gamma_terms: GammaTerms | None = None, dense: bool | None = None) -> PerformancePrediction:
    """Node and network steady-state MSD.

    The unregularized part ``r^T (I - F)^{-1} t_k`` is linear in the
    selector, so a single adjoint solve ``(I - F)^T y = r`` serves every node
    and the network selector at once: the network value equals the mean of
    the node values.
    """
    N, M = moments.num_nodes, moments.dim
    NM = N * M
    delta = _require_stable(moments)
    B = mean_propagation(moments, mats)
    rho_B = spectral_radius(B)
    rho_F = rho_B**2
    if rho_F >= 1:
        raise StabilityError(f"F is not stable (spectral radius {rho_F:.6g} >= 1)")
    R = noise_weighting(moments, mats)
    F = build_F_approx(moments, mats, dense)
    if isinstance(F, np.ndarray):
        Y = vec_inv(np.linalg.solve((np.eye(NM * NM) - F).T, vec(R)), NM)
    else:
        Y = solve_fixed_point(F.rmatmat, R)
    base_node = np.array([np.trace(Y[k * M:(k + 1) * M, k * M:(k + 1) * M]) for k in range(N)])
    base_net = float(np.trace(Y) / N)
    node, net = base_node.copy(), base_net
    with_gamma = gamma_terms is not None and gamma != 0
    if with_gamma:
        node = node + gamma**2 * gamma_terms.beta_node - gamma * gamma_terms.alpha_node
        net = net + gamma**2 * gamma_terms.beta_network - gamma * gamma_terms.alpha_network
    return PerformancePrediction(node, float(net), base_node, base_net, delta, rho_F, float(gamma),
                                 with_gamma, gamma_terms)


def _quadratic_terms(dfs, errs, moments, mats, Sigma):
    # alpha = -2 df^T stepM A Sigma A^T (I - stepM D) w~,  beta = df^T stepM A Sigma A^T stepM df
    A_ext = block_extend(mats.A, moments.dim)
    NM = moments.D.shape[0]
    K = moments.stepM @ A_ext @ Sigma @ A_ext.T
    Kb = K @ moments.stepM
    Ka = K @ (np.eye(NM) - moments.stepM @ moments.D)
    alpha = -2.0 * np.einsum("si,ij,sj->s", dfs, Ka, errs).mean()
    beta = np.einsum("si,ij,sj->s", dfs, Kb, dfs).mean()
    return float(alpha), float(max(beta, 0.0))


def estimate_gamma_terms(weights_prev, w_o, moments: MomentSet, mats: CombinationMatrices, spec: RegularizerSpec,
                         selector="network", dense: bool | None = None):
    """Sample averages of the two quadratic forms over a steady-state window.

    Parameters
    ----------
    weights_prev : array_like, shape (..., N, M)
        Estimates ``w_{k,i-1}`` from runs and iterations in the window.
    w_o : array_like, shape (M,) or broadcastable to ``weights_prev``
        True vector at the matching iterations.
    selector : ``"network"``, ``"nodes"`` or int
        ``"network"`` weights with ``unvec((I - F)^{-1} q / N)``, an int ``k``
        with the node-``k`` selector, ``"nodes"`` returns a :class:`GammaTerms`
        with every node plus the network.

    Returns
    -------
    tuple of float or GammaTerms
        ``(alpha, beta)`` for a single selector.
    """
    W = np.asarray(weights_prev, dtype=float)
    if W.size == 0:
        raise ValueError("empty steady-state window")
    N, M = moments.num_nodes, moments.dim
    errs = (np.asarray(w_o, dtype=float) - W).reshape(-1, N * M)
    dfs = subgradient(spec, W).reshape(-1, N * M)

    def terms(sel):
        return _quadratic_terms(dfs, errs, moments, mats, steady_weighting(moments, mats, sel, dense))

    if selector == "network":
        return terms(network_selector(N, M))
    if selector == "nodes":
        per = [terms(node_selector(k, N, M)) for k in range(N)]
        a_net, b_net = terms(network_selector(N, M))
        return GammaTerms(np.array([p[0] for p in per]), np.array([p[1] for p in per]), a_net, b_net)
    return terms(node_selector(int(selector), N, M))


class DominanceInterval(NamedTuple):
    lower: float
    upper: float
    gamma_opt: float

    @property
    def empty(self) -> bool:
        return not self.upper > self.lower


def dominance_interval(alpha: float, beta: float) -> DominanceInterval:
    """Range ``(0, alpha/beta)`` of weights that beat the unregularized filter, and its midpoint optimum."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if alpha <= 0 or beta == 0:
        return DominanceInterval(0.0, 0.0, 0.0)
    return DominanceInterval(0.0, alpha / beta, alpha / (2.0 * beta))


def estimate_F_exact(moments: MomentSet, mats: CombinationMatrices, profiles, num_draws: int, rng) -> np.ndarray:
    """Monte-Carlo estimate of the full weighting matrix, fourth-order moment included.

    ``F = (I - I (x) D stepM - D stepM (x) I + E[D_i stepM (x) D_i stepM]) (A_ext (x) A_ext)``
    with ``D_i = blockdiag{sum_l c_lk u_l^T u_l}`` sampled from Gaussian
    regressors. Dense, so only meant for small ``N * M``.
    """
    N, M = moments.num_nodes, moments.dim
    NM = N * M
    su, _, _ = profile_arrays(profiles)
    stepM = moments.stepM
    acc = np.zeros((NM * NM, NM * NM))
    for _ in range(num_draws):
        U = rng.standard_normal((N, M)) * np.sqrt(su)[:, None]
        outer = U[:, :, None] * U[:, None, :]  # u_l^T u_l
        blocks = np.einsum("lk,lab->kab", mats.C, outer)
        Di = np.zeros((NM, NM))
        for k in range(N):
            Di[k * M:(k + 1) * M, k * M:(k + 1) * M] = blocks[k]
        X = Di @ stepM
        acc += np.kron(X, X)
    acc /= num_draws
    I = np.eye(NM)
    DM = moments.D @ stepM
    A_ext = block_extend(mats.A, M)
    return (np.eye(NM * NM) - np.kron(I, DM) - np.kron(DM, I) + acc) @ np.kron(A_ext, A_ext)


def msd_from_F(moments: MomentSet, mats: CombinationMatrices, F: np.ndarray) -> tuple[np.ndarray, float]:
    """Node and network MSD for an arbitrary dense weighting matrix ``F``."""
    N, M = moments.num_nodes, moments.dim
    NM = N * M
    r = vec(noise_weighting(moments, mats))
    y = np.linalg.solve((np.eye(NM * NM) - F).T, r)
    node = np.array([y @ node_selector(k, N, M) for k in range(N)])
    return node, float(y @ network_selector(N, M))
