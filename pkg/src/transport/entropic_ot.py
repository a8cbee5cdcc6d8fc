"""
Entropic optimal transport between discrete measures over partition supports.

``sinkhorn`` minimizes <pi, M> - eps * H(pi) with H(pi) = -sum pi log pi.
The plain scaling iterations are used unless eps is small relative to the
cost scale, in which case a log-domain solver with eps-scaling warm starts
takes over.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.optimize import linear_sum_assignment
from scipy.special import entr, logsumexp

from src.core.config import MetricType
from src.core.exceptions import ConvergenceError, InvalidArgumentError
from src.partitions.partition import Partition
from src.partitions.posterior import EmpiricalPartitionPosterior
from src.utils.validators import validate_positive, validate_simplex

LOG_DOMAIN_FACTOR = 0.05
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10000


@dataclass(frozen=True)
class CostMatrix:
    """Ground-metric values between two partition supports."""
    values: np.ndarray
    metric: MetricType = MetricType.VOI

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise InvalidArgumentError("cost matrix must be 2-d")
        if np.any(np.isnan(values)) or np.any(values < 0):
            raise InvalidArgumentError("cost matrix entries must be nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @property
    def T(self) -> "CostMatrix":
        return CostMatrix(self.values.T.copy(), self.metric)


@dataclass(frozen=True)
class TransportPlan:
    """Coupling with its target marginals and solver record."""
    values: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray
    transport_cost: float = float("nan")
    entropy: float = float("nan")
    epsilon: float = float("nan")
    iterations: int = 0
    residual: float = 0.0
    log_domain: bool = False

    @property
    def objective(self) -> float:
        """<pi, M> - eps * H(pi); may be negative for large eps."""
        return self.transport_cost - self.epsilon * self.entropy

    @property
    def mass(self) -> float:
        return float(self.values.sum())

    def marginal_residual(self) -> float:
        return float(max(np.abs(self.values.sum(axis=1) - self.row_marginal).sum(),
                         np.abs(self.values.sum(axis=0) - self.col_marginal).sum()))


def _labels(support: Sequence[Partition]) -> np.ndarray:
    if not support:
        raise InvalidArgumentError("support must contain at least one partition")
    n = support[0].n
    if any(p.n != n for p in support):
        raise InvalidArgumentError("support partitions cover different item counts")
    return np.array([p.labels for p in support], dtype=np.int64)


def _row_statistics(labels: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-row entropy and co-clustered pair count of a label matrix."""
    k = labels.max(axis=1) + 1
    offsets = np.arange(labels.shape[0], dtype=np.int64)[:, None] * (n + 1)
    uniq, counts = np.unique((labels + offsets).ravel(), return_counts=True)
    rows = uniq // (n + 1)
    h = np.bincount(rows, weights=entr(counts / n), minlength=labels.shape[0])
    pairs = np.bincount(rows, weights=counts * (counts - 1) / 2.0, minlength=labels.shape[0])
    h[k == 1] = 0.0
    h[k == n] = np.log(n)
    return h, pairs


def _joint_statistics(a: np.ndarray, b_labels: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Joint entropy and jointly co-clustered pair counts of one partition against many."""
    width = int(b_labels.max()) + 1
    m = b_labels.shape[0]
    codes = a[None, :] * width + b_labels
    span = (int(a.max()) + 1) * width
    offsets = np.arange(m, dtype=np.int64)[:, None] * span
    uniq, counts = np.unique((codes + offsets).ravel(), return_counts=True)
    rows = uniq // span
    h12 = np.bincount(rows, weights=entr(counts / n), minlength=m)
    pairs = np.bincount(rows, weights=counts * (counts - 1) / 2.0, minlength=m)
    return h12, pairs


def cost_matrix(support_a: Sequence[Partition], support_b: Sequence[Partition],
                metric: Union[MetricType, str] = MetricType.VOI) -> CostMatrix:
    """values[i][j] = metric(A_i, B_j) for the VoI or normalized Binder metric."""
    metric = MetricType(metric)
    support_a, support_b = list(support_a), list(support_b)
    la, lb = _labels(support_a), _labels(support_b)
    if la.shape[1] != lb.shape[1]:
        raise InvalidArgumentError(
            f"supports cover different item counts ({la.shape[1]} vs {lb.shape[1]})")
    n = la.shape[1]
    ha, pa = _row_statistics(la, n)
    hb, pb = _row_statistics(lb, n)
    total_pairs = n * (n - 1) / 2.0
    values = np.empty((la.shape[0], lb.shape[0]))
    for i in range(la.shape[0]):
        h12, p12 = _joint_statistics(la[i], lb, n)
        if metric == MetricType.VOI:
            values[i] = 2.0 * h12 - (ha[i] + hb)
        else:
            values[i] = (pa[i] + pb - 2.0 * p12) / total_pairs if total_pairs else 0.0
    np.maximum(values, 0.0, out=values)

    index_b = {p: j for j, p in enumerate(support_b)}
    for i, p in enumerate(support_a):
        j = index_b.get(p)
        if j is not None:
            values[i, j] = 0.0
    if support_a == support_b:
        upper = np.triu(values, k=1)
        values = upper + upper.T
    return CostMatrix(values, metric)


def _as_cost(M: Union[CostMatrix, np.ndarray]) -> np.ndarray:
    return M.values if isinstance(M, CostMatrix) else CostMatrix(np.asarray(M, dtype=float)).values


def _residual(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float(max(np.abs(P.sum(axis=1) - a).sum(), np.abs(P.sum(axis=0) - b).sum()))


def _sinkhorn_plain(a, b, C, eps, max_iter, tol):
    K = np.exp(-C / eps)
    if not np.all(K.sum(axis=1) > 0) or not np.all(K.sum(axis=0) > 0):
        return None
    u = np.ones_like(a)
    v = np.ones_like(b)
    resid = np.inf
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        for it in range(1, max_iter + 1):
            u = a / (K @ v)
            v = b / (K.T @ u)
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                return None
            P = u[:, None] * K * v[None, :]
            resid = _residual(P, a, b)
            if resid <= tol:
                return P, it, resid
    return P, max_iter, resid


def _log_iterations(loga, logb, C, eps, f, g, max_iter, tol, a, b):
    resid = np.inf
    P = None
    for it in range(1, max_iter + 1):
        f = eps * loga - eps * logsumexp((g[None, :] - C) / eps, axis=1)
        g = eps * logb - eps * logsumexp((f[:, None] - C) / eps, axis=0)
        P = np.exp((f[:, None] + g[None, :] - C) / eps)
        resid = _residual(P, a, b)
        if resid <= tol:
            return f, g, P, it, resid
    return f, g, P, max_iter, resid


def _sinkhorn_log(a, b, C, eps, max_iter, tol):
    loga, logb = np.log(a), np.log(b)
    f = np.zeros_like(a)
    g = np.zeros_like(b)
    total = 0
    # eps-scaling: warm-start the potentials on a decreasing eps schedule
    stage_eps = float(C.max()) if C.size else eps
    while stage_eps > 2.0 * eps:
        f, g, _, used, _ = _log_iterations(loga, logb, C, stage_eps, f, g, 200, max(tol, 1e-4), a, b)
        total += used
        stage_eps /= 2.0
    f, g, P, used, resid = _log_iterations(loga, logb, C, eps, f, g, max_iter, tol, a, b)
    return P, total + used, resid


def sinkhorn(a: Sequence[float], b: Sequence[float], M: Union[CostMatrix, np.ndarray],
             epsilon: float, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL,
             log_domain: Optional[bool] = None) -> Tuple[TransportPlan, float]:
    """
    Entropic OT between weight vectors a and b under cost M.

    Args:
        a: Source weights (simplex)
        b: Target weights (simplex)
        M: Cost matrix, len(a) x len(b)
        epsilon: Regularization strength
        max_iter: Iteration budget of the final stage
        tol: L1 marginal residual at which iterations stop
        log_domain: Force (True) or forbid (False) log-domain iterations;
            None picks log domain when eps < 0.05 * median positive cost

    Returns:
        (plan, objective) where objective = <pi, M> - eps * H(pi)
    """
    a = validate_simplex(a, name="source weights")
    b = validate_simplex(b, name="target weights")
    C = _as_cost(M)
    eps = validate_positive(epsilon, "epsilon")
    if C.shape != (a.size, b.size):
        raise InvalidArgumentError(f"cost shape {C.shape} does not match marginals ({a.size}, {b.size})")

    rows, cols = np.flatnonzero(a > 0), np.flatnonzero(b > 0)
    a_s, b_s, C_s = a[rows], b[cols], C[np.ix_(rows, cols)]

    if log_domain is None:
        positive = C_s[C_s > 0]
        log_domain = bool(positive.size) and eps < LOG_DOMAIN_FACTOR * float(np.median(positive))

    result = None
    if not log_domain:
        result = _sinkhorn_plain(a_s, b_s, C_s, eps, max_iter, tol)
        if result is None:
            logger.warning(f"Sinkhorn kernel underflow at eps={eps:g}; switching to log domain")
            log_domain = True
    if log_domain:
        result = _sinkhorn_log(a_s, b_s, C_s, eps, max_iter, tol)
    P_s, iterations, resid = result

    if not resid <= tol:
        raise ConvergenceError(
            f"Sinkhorn did not converge in {iterations} iterations (residual {resid:.3e})",
            residual=float(resid), iterations=int(iterations))

    P = np.zeros_like(C)
    P[np.ix_(rows, cols)] = P_s
    transport = float(np.sum(P_s * C_s))
    ent = float(np.sum(entr(P_s)))
    plan = TransportPlan(values=P, row_marginal=a, col_marginal=b, transport_cost=transport,
                         entropy=ent, epsilon=eps, iterations=int(iterations),
                         residual=float(resid), log_domain=bool(log_domain))
    return plan, plan.objective


def exact_ot_assignment(support_a: Sequence[Partition], support_b: Sequence[Partition],
                        M: Optional[Union[CostMatrix, np.ndarray]] = None,
                        metric: Union[MetricType, str] = MetricType.VOI) -> Tuple[Tuple[int, ...], float]:
    """Exact OT between uniform measures of equal size, solved as an assignment problem."""
    if len(support_a) != len(support_b):
        raise InvalidArgumentError(
            f"assignment needs equal-size supports ({len(support_a)} vs {len(support_b)})")
    C = _as_cost(M) if M is not None else cost_matrix(support_a, support_b, metric).values
    m = len(support_a)
    if C.shape != (m, m):
        raise InvalidArgumentError(f"cost shape {C.shape} does not match support size {m}")
    rows, cols = linear_sum_assignment(C)
    perm = np.empty(m, dtype=np.int64)
    perm[rows] = cols
    return tuple(int(j) for j in perm), float(C[rows, cols].sum() / m)


def posterior_distance(post_a: EmpiricalPartitionPosterior, post_b: EmpiricalPartitionPosterior,
                       epsilon: float, metric: Union[MetricType, str] = MetricType.VOI,
                       max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> TransportPlan:
    """Entropic Wasserstein plan between two empirical partition posteriors."""
    if post_a.n != post_b.n:
        raise InvalidArgumentError(f"posteriors cover different item counts ({post_a.n} vs {post_b.n})")
    M = cost_matrix(post_a.atoms, post_b.atoms, metric)
    plan, _ = sinkhorn(post_a.weights, post_b.weights, M, epsilon, max_iter=max_iter, tol=tol)
    return plan
