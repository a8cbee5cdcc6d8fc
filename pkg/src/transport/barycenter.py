"""
Fixed-support entropic Wasserstein barycenter of shard posteriors, solved by
iterative Bregman projections.
"""
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from src.core.config import MetricType, SupportKind, SupportStrategyConfig
from src.core.exceptions import (ConvergenceError, DegenerateKernelError,
                                 InvalidArgumentError)
from src.partitions.partition import Partition
from src.partitions.posterior import EmpiricalPartitionPosterior, equal_mixture
from src.transport.entropic_ot import TransportPlan, cost_matrix
from src.utils.validators import validate_positive, validate_simplex
from src.weights.consensus_weights import WeightScheme, compute_lambda

PRUNE_BELOW = 1e-12


@dataclass
class BarycenterProblem:
    """Consensus support, shard measures with their cost matrices, lambda and eps."""
    support: Sequence[Partition]
    shard_measures: List[np.ndarray]
    cost_matrices: List[np.ndarray]
    lam: np.ndarray
    epsilons: List[float]
    max_iter: int = 10000
    tol: float = 1e-9

    def __post_init__(self):
        k = len(self.shard_measures)
        if k == 0:
            raise InvalidArgumentError("barycenter needs at least one shard measure")
        if len(self.cost_matrices) != k or len(self.epsilons) != k:
            raise InvalidArgumentError("shard measures, cost matrices and epsilons must align")
        self.lam = validate_simplex(self.lam, name="lambda")
        if self.lam.size != k:
            raise InvalidArgumentError(f"{self.lam.size} lambda entries for {k} shards")
        self.epsilons = [validate_positive(e, f"epsilon[{i}]") for i, e in enumerate(self.epsilons)]
        m0 = len(self.support)
        measures, costs = [], []
        for i, (b, M) in enumerate(zip(self.shard_measures, self.cost_matrices)):
            b = validate_simplex(b, name=f"shard {i} weights")
            M = np.asarray(M, dtype=float)
            if M.shape != (m0, b.size):
                raise InvalidArgumentError(f"shard {i} cost shape {M.shape} != ({m0}, {b.size})")
            if np.any(np.isnan(M)) or np.any(M < 0):
                raise InvalidArgumentError(f"shard {i} cost matrix must be nonnegative")
            measures.append(b)
            costs.append(M)
        self.shard_measures, self.cost_matrices = measures, costs

    @property
    def n_shards(self) -> int:
        return len(self.shard_measures)


@dataclass
class BarycenterResult:
    """Barycenter weights over the support plus solver record."""
    alpha: np.ndarray
    iterations: int
    residual: float
    converged: bool
    per_shard_plans: List[TransportPlan]
    wall_time: float = 0.0

    def diagnostics(self) -> Dict:
        return {
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "converged": bool(self.converged),
            "plan_mass": [p.mass for p in self.per_shard_plans],
            "wall_time": float(self.wall_time),
        }


def _kernels(problem: BarycenterProblem) -> List[np.ndarray]:
    gammas = []
    for k, (M, eps) in enumerate(zip(problem.cost_matrices, problem.epsilons)):
        xi = np.exp(-M / eps)
        if not np.all(xi.sum(axis=1) > 0) or not np.all(xi.sum(axis=0) > 0):
            raise DegenerateKernelError(
                f"kernel of shard {k} has an all-zero row or column; "
                f"epsilon={eps:g} is too small for the cost scale", shard=k)
        gammas.append(xi / xi.sum())
    return gammas


def project_columns(gammas: List[np.ndarray], measures: List[np.ndarray]) -> None:
    """Step (1): rescale columns so that gamma_k^T 1 = alpha^(k). In place."""
    for gamma, b in zip(gammas, measures):
        colsum = gamma.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(colsum > 0, b / colsum, 0.0)
        gamma *= scale[None, :]


def geometric_mean_rows(gammas: List[np.ndarray], lam: np.ndarray) -> np.ndarray:
    """alpha = prod_k (gamma_k 1)^lambda_k, normalized; lambda_k = 0 shards are skipped."""
    log_alpha = np.zeros(gammas[0].shape[0])
    for gamma, lk in zip(gammas, lam):
        if lk == 0:
            continue
        with np.errstate(divide="ignore"):
            log_alpha = log_alpha + lk * np.log(gamma.sum(axis=1))
    with np.errstate(invalid="ignore"):
        alpha = np.exp(log_alpha - np.max(log_alpha))
    alpha = np.nan_to_num(alpha, nan=0.0)
    total = alpha.sum()
    if total <= 0:
        raise DegenerateKernelError("barycenter weights vanished on the whole support")
    return alpha / total


def project_rows(gammas: List[np.ndarray], lam: np.ndarray) -> np.ndarray:
    """Step (2): rescale rows of every gamma_k to the common alpha. In place; returns alpha."""
    alpha = geometric_mean_rows(gammas, lam)
    for gamma in gammas:
        rowsum = gamma.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(rowsum > 0, alpha / rowsum, 0.0)
        gamma *= scale[:, None]
    return alpha


def ibp_barycenter(problem: BarycenterProblem) -> BarycenterResult:
    """
    Iterative Bregman projections for the fixed-support barycenter.

    Alternates the closed-form column scaling (shard marginals) and row
    scaling (common barycenter marginal) until the L1 change of alpha drops
    below ``problem.tol`` or the iteration budget runs out.
    """
    start = time.perf_counter()
    gammas = _kernels(problem)
    alpha = np.full(len(problem.support), 1.0 / len(problem.support))
    residual = np.inf
    iterations = 0
    for iterations in range(1, problem.max_iter + 1):
        project_columns(gammas, problem.shard_measures)
        new_alpha = project_rows(gammas, problem.lam)
        residual = float(np.abs(new_alpha - alpha).sum())
        alpha = new_alpha
        if iterations % 500 == 0:
            logger.debug(f"IBP iteration {iterations}: residual {residual:.3e}")
        if residual < problem.tol:
            break
    converged = residual < problem.tol
    if not converged:
        logger.warning(f"IBP barycenter stopped after {iterations} iterations (residual {residual:.3e})")

    plans = []
    for gamma, b, M, eps in zip(gammas, problem.shard_measures, problem.cost_matrices, problem.epsilons):
        mass = gamma.sum()
        values = gamma / mass if mass > 0 else gamma
        positive = values[values > 0]
        ent = float(-np.sum(positive * np.log(positive)))
        plans.append(TransportPlan(values=values, row_marginal=alpha, col_marginal=b,
                                   transport_cost=float(np.sum(values * M)), entropy=ent,
                                   epsilon=eps, iterations=iterations, residual=residual))
    return BarycenterResult(alpha=alpha, iterations=iterations, residual=residual,
                            converged=converged, per_shard_plans=plans,
                            wall_time=time.perf_counter() - start)


def build_support(posts: Sequence[EmpiricalPartitionPosterior],
                  strategy: Optional[SupportStrategyConfig] = None) -> List[Partition]:
    """Union of shard atoms (first-seen order) or m draws from their equal-weight mixture."""
    posts = list(posts)
    if not posts:
        raise InvalidArgumentError("cannot build a support from no posteriors")
    n = posts[0].n
    if any(p.n != n for p in posts):
        raise InvalidArgumentError("shard posteriors cover different item counts")
    strategy = strategy or SupportStrategyConfig()
    if strategy.kind == SupportKind.SUBSAMPLE:
        return list(equal_mixture(posts).subsample_support(strategy.m, strategy.seed).atoms)
    seen: Dict[Partition, None] = {}
    for post in posts:
        for atom in post.atoms:
            seen.setdefault(atom, None)
    return list(seen)


@dataclass
class ConsensusDiagnostics:
    """Structured record of one consensus computation."""
    scheme: str
    lam: List[float]
    omega: List[float]
    support_size: int
    epsilons: List[float]
    solver: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return asdict(self)


def consensus(posts: Sequence[EmpiricalPartitionPosterior], scheme: WeightScheme,
              epsilons: Union[float, Sequence[float]] = 0.05,
              support_strategy: Optional[SupportStrategyConfig] = None,
              metric: Union[MetricType, str] = MetricType.VOI,
              max_iter: int = 10000, tol: float = 1e-9,
              lam: Optional[Sequence[float]] = None,
              require_convergence: bool = False
              ) -> Tuple[EmpiricalPartitionPosterior, np.ndarray, ConsensusDiagnostics]:
    """
    Consensus posterior: barycenter of the shard posteriors under weights from ``scheme``.

    Args:
        posts: Shard posteriors over the same items
        scheme: Weight scheme used to compute lambda
        epsilons: One eps for all shards, or one per shard
        support_strategy: Union (default) or subsample
        metric: Ground metric
        max_iter: IBP iteration budget
        tol: IBP stopping tolerance on the L1 change of alpha
        lam: Explicit lambda overriding the scheme
        require_convergence: Raise ConvergenceError instead of returning a flagged result

    Returns:
        (consensus posterior, lambda, diagnostics)
    """
    posts = list(posts)
    if not posts:
        raise InvalidArgumentError("consensus needs at least one shard posterior")
    k = len(posts)
    if lam is None:
        lam, omega = compute_lambda(posts, scheme)
    else:
        lam, omega = validate_simplex(lam, name="lambda"), np.full(k, np.nan)
    eps = [float(epsilons)] * k if np.isscalar(epsilons) else [float(e) for e in epsilons]

    support = build_support(posts, support_strategy)
    problem = BarycenterProblem(
        support=support,
        shard_measures=[p.weights for p in posts],
        cost_matrices=[cost_matrix(support, p.atoms, metric).values for p in posts],
        lam=lam, epsilons=eps, max_iter=max_iter, tol=tol)
    result = ibp_barycenter(problem)
    if require_convergence and not result.converged:
        raise ConvergenceError(
            f"barycenter did not converge in {result.iterations} iterations",
            residual=result.residual, iterations=result.iterations)

    keep = result.alpha > PRUNE_BELOW
    post = EmpiricalPartitionPosterior(
        [a for a, kept in zip(support, keep) if kept],
        result.alpha[keep] / result.alpha[keep].sum())
    logger.info(f"Consensus ({scheme.label}): {len(post)} atoms from support of "
                f"{len(support)} after {result.iterations} iterations")
    diagnostics = ConsensusDiagnostics(
        scheme=scheme.label, lam=[float(v) for v in lam],
        omega=[float(v) for v in omega], support_size=len(support), epsilons=eps,
        solver=result.diagnostics())
    return post, lam, diagnostics
