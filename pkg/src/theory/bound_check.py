"""
Exact computations for the hierarchical generalized-Bayes partition model on
tiny partition spaces, and the NELBO upper-bound check built on entropic
transport between a central marginal q0 and shard marginals q_k.

    p(z)            = prod_k C_k(z) / C
    p(z_k | z)      = exp(-zeta_k c(z_k, z)) / C_k(z)
    C_k(z)          = sum_{z'} exp(-zeta_k c(z', z))
    p(X_k | z_k)    = likelihood table of shard k
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger
from scipy.special import logsumexp

from src.core.config import MetricType, WeightKind, WeightSchemeConfig
from src.core.exceptions import InvalidArgumentError, SizeGuardError
from src.partitions.partition import Partition
from src.partitions.posterior import EmpiricalPartitionPosterior
from src.transport.barycenter import ConsensusDiagnostics, consensus
from src.transport.entropic_ot import TransportPlan, cost_matrix, sinkhorn
from src.utils.helpers import derive_seed
from src.utils.validators import validate_simplex

MAX_ENUMERATION_N = 8
MAX_JOINT_N = 4
MAX_JOINT_K = 3
BOUND_TOL = 1e-6
PLAN_TOL = 1e-10
PLAN_MAX_ITER = 1_000_000

LikelihoodTable = Union[Mapping[Partition, float], Sequence[float], np.ndarray]


@lru_cache(maxsize=None)
def _restricted_growth_strings(n: int) -> Tuple[Tuple[int, ...], ...]:
    out: List[Tuple[int, ...]] = []

    def extend(prefix: List[int], top: int) -> None:
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for label in range(top + 2):
            prefix.append(label)
            extend(prefix, max(top, label))
            prefix.pop()

    extend([0], 0)
    return tuple(out)


def enumerate_partitions(n: int) -> List[Partition]:
    """All set partitions of n items as canonical label vectors (Bell(n) of them)."""
    if n < 1:
        raise InvalidArgumentError("n must be at least 1")
    if n > MAX_ENUMERATION_N:
        raise SizeGuardError(f"enumeration is limited to n <= {MAX_ENUMERATION_N}, got {n}")
    return [Partition(labels) for labels in _restricted_growth_strings(n)]


@dataclass
class TinyModel:
    """Tiny hierarchical model: n items, K shards with temperatures zeta and likelihood tables."""
    n: int
    zeta: Sequence[float]
    likelihood_tables: List[LikelihoodTable]
    metric: MetricType = MetricType.VOI
    space: List[Partition] = field(init=False, repr=False)
    likelihoods: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.space = enumerate_partitions(self.n)
        self.metric = MetricType(self.metric)
        self.zeta = [float(v) for v in self.zeta]
        if not self.zeta:
            raise InvalidArgumentError("a tiny model needs at least one shard")
        if any(not np.isfinite(v) or v < 0 for v in self.zeta):
            raise InvalidArgumentError("zeta values must be finite and nonnegative")
        if len(self.likelihood_tables) != len(self.zeta):
            raise InvalidArgumentError(
                f"{len(self.likelihood_tables)} likelihood tables for {len(self.zeta)} shards")
        rows = []
        for k, table in enumerate(self.likelihood_tables):
            if isinstance(table, Mapping):
                missing = [z for z in self.space if z not in table]
                if missing:
                    raise InvalidArgumentError(f"likelihood table {k} misses partition {missing[0]}")
                values = np.array([float(table[z]) for z in self.space])
            else:
                values = np.asarray(table, dtype=float)
                if values.shape != (len(self.space),):
                    raise InvalidArgumentError(
                        f"likelihood table {k} has {values.size} entries, expected {len(self.space)}")
            if not np.all(np.isfinite(values)) or np.any(values <= 0):
                raise InvalidArgumentError(f"likelihood table {k} must be strictly positive")
            rows.append(values)
        self.likelihoods = np.vstack(rows)

    @property
    def K(self) -> int:
        return len(self.zeta)

    @property
    def size(self) -> int:
        return len(self.space)

    def shard_posteriors(self) -> List[np.ndarray]:
        """Exact shard posteriors under a uniform prior: normalized likelihood tables."""
        return [row / row.sum() for row in self.likelihoods]


@dataclass
class HierModel:
    """Exact normalized tables of the hierarchical model over its partition space."""
    space: List[Partition]
    prior: np.ndarray
    log_prior: np.ndarray
    conditionals: List[np.ndarray]
    log_conditionals: List[np.ndarray]
    normalizers: np.ndarray
    constant: float
    log_constant: float


def hier_model(model: TinyModel) -> HierModel:
    """
    Prior p(z), conditionals p(z_k | z) (rows indexed by z) and the constants C_k, C.
    """
    costs = cost_matrix(model.space, model.space, model.metric).values
    log_ck = []
    log_cond = []
    for zeta in model.zeta:
        # costs is symmetric so column z of exp(-zeta c(z', z)) is row z
        logits = -zeta * costs
        norm = logsumexp(logits, axis=1)
        log_ck.append(norm)
        log_cond.append(logits - norm[:, None])
    log_ck = np.vstack(log_ck)
    log_unnorm = log_ck.sum(axis=0)
    log_c = float(logsumexp(log_unnorm))
    log_prior = log_unnorm - log_c
    return HierModel(space=model.space, prior=np.exp(log_prior), log_prior=log_prior,
                     conditionals=[np.exp(t) for t in log_cond], log_conditionals=log_cond,
                     normalizers=np.exp(log_ck), constant=float(np.exp(log_c)), log_constant=log_c)


def _guard_joint(model: TinyModel) -> None:
    if model.n > MAX_JOINT_N or model.K > MAX_JOINT_K:
        raise SizeGuardError(
            f"joint tables are limited to n <= {MAX_JOINT_N} and K <= {MAX_JOINT_K} "
            f"(got n={model.n}, K={model.K})")


def log_joint(model: TinyModel, tables: Optional[HierModel] = None) -> np.ndarray:
    """log p(z, z_1..z_K, X) as a tensor over the product space Z^(K+1)."""
    _guard_joint(model)
    tables = tables or hier_model(model)
    m, K = model.size, model.K
    out = tables.log_prior.reshape((m,) + (1,) * K)
    for k in range(K):
        shape = [1] * (K + 1)
        shape[0], shape[k + 1] = m, m
        term = tables.log_conditionals[k] + np.log(model.likelihoods[k])[None, :]
        out = out + term.reshape(shape)
    return out


def log_evidence(model: TinyModel, tables: Optional[HierModel] = None) -> float:
    tables = tables or hier_model(model)
    per_shard = [logsumexp(lc + np.log(lik)[None, :], axis=1)
                 for lc, lik in zip(tables.log_conditionals, model.likelihoods)]
    return float(logsumexp(tables.log_prior + np.sum(per_shard, axis=0)))


def exact_posterior(model: TinyModel) -> np.ndarray:
    """p(z, z_1..z_K | X) over the product space."""
    lj = log_joint(model)
    return np.exp(lj - logsumexp(lj))


def nelbo(q: np.ndarray, model: TinyModel) -> float:
    """L(q) = E_q[-log p(z, z_1..z_K, X)] - H(q), with 0 log 0 = 0."""
    _guard_joint(model)
    q = np.asarray(q, dtype=float)
    expected = (model.size,) * (model.K + 1)
    if q.shape != expected:
        raise InvalidArgumentError(f"joint table has shape {q.shape}, expected {expected}")
    validate_simplex(q.ravel(), name="joint table")
    lj = log_joint(model)
    mask = q > 0
    return float(np.sum(q[mask] * (np.log(q[mask]) - lj[mask])))


def star_coupling(q0: Sequence[float], plans: Sequence[np.ndarray], tol: float = 1e-9) -> np.ndarray:
    """q(z, z_1..z_K) = q0(z) prod_k gamma_k(z, z_k) / q0(z); rows with q0(z) = 0 are zero."""
    q0 = np.asarray(q0, dtype=float)
    if not plans:
        raise InvalidArgumentError("star coupling needs at least one plan")
    m = q0.size
    joint = q0.copy()
    for k, plan in enumerate(plans):
        plan = np.asarray(plan, dtype=float)
        if plan.ndim != 2 or plan.shape[0] != m:
            raise InvalidArgumentError(f"plan {k} has shape {plan.shape}, expected ({m}, *)")
        gap = float(np.abs(plan.sum(axis=1) - q0).sum())
        if gap > tol:
            raise InvalidArgumentError(f"plan {k} row marginal differs from q0 by {gap:.3e}")
        with np.errstate(divide="ignore", invalid="ignore"):
            cond = np.where(q0[:, None] > 0, plan / q0[:, None], 0.0)
        shape = (m,) + (1,) * k + (plan.shape[1],)
        joint = joint[..., None] * cond.reshape(shape)
    return joint


@dataclass
class JointVariational:
    """Marginals q0..qK with plans gamma_k coupling q0 and q_k."""
    marginals: List[np.ndarray]
    plans: List[np.ndarray]

    def __post_init__(self):
        if len(self.plans) != len(self.marginals) - 1:
            raise InvalidArgumentError("need one plan per shard marginal")
        self.marginals = [validate_simplex(q, name=f"q{k}") for k, q in enumerate(self.marginals)]
        q0 = self.marginals[0]
        for k, (plan, qk) in enumerate(zip(self.plans, self.marginals[1:]), start=1):
            plan = np.asarray(plan, dtype=float)
            if (np.abs(plan.sum(axis=1) - q0).sum() > 1e-9
                    or np.abs(plan.sum(axis=0) - qk).sum() > 1e-9):
                raise InvalidArgumentError(f"plan {k} does not couple q0 with q{k}")

    def joint(self) -> np.ndarray:
        return star_coupling(self.marginals[0], self.plans)


@dataclass
class BoundCheck:
    """Star-coupling NELBO against the transport upper bound."""
    lhs_star: float
    rhs: float
    rhs_log_c: float
    holds: bool
    transport: List[float] = field(default_factory=list)
    plans: List[TransportPlan] = field(default_factory=list, repr=False)

    def as_tuple(self) -> Tuple[float, float, bool]:
        return self.lhs_star, self.rhs, self.holds


def check_bound(model: TinyModel, q0: Sequence[float], qs: Sequence[Sequence[float]],
                tol: float = BOUND_TOL) -> BoundCheck:
    """
    Evaluate the NELBO of the star coupling built from entropic plans and the
    bound sum_k zeta_k W_{1/(K zeta_k)}(q0, q_k) - sum_k E_{q_k}[log p(X_k | z_k)] + C.

    ``rhs_log_c`` replaces C by log C, the exact log-normalizer of p(z).
    """
    _guard_joint(model)
    if len(qs) != model.K:
        raise InvalidArgumentError(f"{len(qs)} shard marginals for {model.K} shards")
    if any(z <= 0 for z in model.zeta):
        raise InvalidArgumentError("the bound needs strictly positive zeta")
    q0 = validate_simplex(q0, name="q0")
    qs = [validate_simplex(q, name=f"q{k + 1}") for k, q in enumerate(qs)]
    tables = hier_model(model)
    costs = cost_matrix(model.space, model.space, model.metric).values

    plans, transport = [], []
    for zeta, qk in zip(model.zeta, qs):
        plan, value = sinkhorn(q0, qk, costs, epsilon=1.0 / (model.K * zeta),
                               max_iter=PLAN_MAX_ITER, tol=PLAN_TOL)
        plans.append(plan)
        transport.append(float(value))
    joint = JointVariational([q0] + qs, [p.values for p in plans]).joint()
    lhs = nelbo(joint, model)

    fit = sum(float(np.dot(qk, np.log(lik))) for qk, lik in zip(qs, model.likelihoods))
    base = sum(z * w for z, w in zip(model.zeta, transport)) - fit
    rhs = base + tables.constant
    rhs_log_c = base + tables.log_constant
    holds = lhs <= rhs + tol
    if lhs > rhs_log_c + tol:
        logger.warning(f"Star-coupling NELBO {lhs:.6g} exceeds the log C bound {rhs_log_c:.6g}")
    return BoundCheck(lhs_star=lhs, rhs=rhs, rhs_log_c=rhs_log_c, holds=bool(holds),
                      transport=transport, plans=plans)


def consensus_from_model(model: TinyModel, max_iter: int = 10000, tol: float = 1e-9
                         ) -> Tuple[np.ndarray, np.ndarray, ConsensusDiagnostics]:
    """
    Barycenter of the exact shard posteriors with lambda_k = zeta_k / sum zeta and
    eps_k = 1 / (K zeta_k); returns the weights over the full partition space.
    """
    if any(z <= 0 for z in model.zeta):
        raise InvalidArgumentError("consensus needs strictly positive zeta")
    posts = [EmpiricalPartitionPosterior(model.space, q) for q in model.shard_posteriors()]
    zeta = np.asarray(model.zeta)
    post, lam, diagnostics = consensus(
        posts, WeightSchemeConfig(kind=WeightKind.UNIFORM),
        epsilons=[1.0 / (model.K * z) for z in zeta], metric=model.metric,
        max_iter=max_iter, tol=tol, lam=zeta / zeta.sum())
    alpha = np.array([post.weight_of(z) for z in model.space])
    return alpha / alpha.sum(), lam, diagnostics


def random_tiny_model(n: int, K: int, zetas: Sequence[float], rng: np.random.Generator,
                      metric: MetricType = MetricType.VOI) -> TinyModel:
    """Tiny model with log-normal likelihood tables and zeta drawn from ``zetas``."""
    m = len(enumerate_partitions(n))
    zeta = rng.choice(np.asarray(zetas, dtype=float), size=K)
    tables = [np.exp(rng.normal(0.0, 1.0, size=m)) for _ in range(K)]
    return TinyModel(n=n, zeta=zeta, likelihood_tables=tables, metric=metric)


def _suite_instance(index: int, n: int, K: int, zetas: Sequence[float], seed: int,
                    metric: MetricType, use_shard_posteriors: bool) -> Dict:
    rng = np.random.default_rng(derive_seed(seed, index))
    model = random_tiny_model(n, K, zetas, rng, metric)
    m = model.size
    if use_shard_posteriors:
        qs = model.shard_posteriors()
        q0, _, _ = consensus_from_model(model, max_iter=PLAN_MAX_ITER)
    else:
        qs = [rng.dirichlet(np.ones(m)) for _ in range(K)]
        q0 = rng.dirichlet(np.ones(m))
    result = check_bound(model, q0, qs)
    return {
        "instance": index, "n": n, "K": K,
        "zeta": ",".join(f"{z:g}" for z in model.zeta),
        "q": "shard_posteriors" if use_shard_posteriors else "random",
        "lhs_star": result.lhs_star, "rhs": result.rhs, "rhs_log_c": result.rhs_log_c,
        "gap": result.rhs - result.lhs_star, "holds": result.holds,
    }


def run_bound_suite(n: int = 3, K: int = 2, zetas: Sequence[float] = (0.5, 1.0, 2.0, 5.0),
                    instances: int = 20, seed: int = 0, metric: MetricType = MetricType.VOI,
                    use_shard_posteriors: bool = False, n_jobs: int = 1) -> pd.DataFrame:
    """
    Randomized bound checks, one row per instance.

    Args:
        n: Number of items
        K: Number of shards
        zetas: Values each shard's zeta is drawn from
        instances: Number of random instances
        seed: Suite seed; instance i uses an independent derived stream
        metric: Ground metric
        use_shard_posteriors: Take q_k as exact shard posteriors and q0 as their barycenter
        n_jobs: joblib worker count

    Returns:
        DataFrame with lhs_star, rhs, rhs_log_c, gap and holds per instance
    """
    if instances < 1:
        raise InvalidArgumentError("instances must be at least 1")
    if n > MAX_JOINT_N or K > MAX_JOINT_K:
        raise SizeGuardError(f"bound suite is limited to n <= {MAX_JOINT_N} and K <= {MAX_JOINT_K}")
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_suite_instance)(i, n, K, zetas, seed, MetricType(metric), use_shard_posteriors)
        for i in range(instances))
    frame = pd.DataFrame(rows)
    failed = int((~frame["holds"]).sum())
    if failed:
        logger.error(f"Bound violated on {failed}/{instances} instances")
    else:
        logger.info(f"Bound holds on all {instances} instances (n={n}, K={K})")
    return frame
