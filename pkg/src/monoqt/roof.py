"""Convex-roof upper bounds by random search over ensemble decompositions.

Every size-``m`` decomposition of ``rho`` is ``psi_i = sum_j u_ij sqrt(l_j) v_j``
for an ``m x r`` isometry ``u`` and the eigen-ensemble ``(l_j, v_j)``.  The
search starts from random isometries and applies random complex two-row
rotations to ``u``, keeping a rotation only when the average cost drops.
A rotation of rows ``i, j`` of ``u`` rotates the same rows of the component
matrix, so each proposal only re-evaluates two components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ArgumentError, ContractError
from .linalg import herm_eig, herm_eig_batch
from .measures import binary_entropy, matrix_entropy
from .states import DensityMatrix, PartitionSpec, PureState

RANK_TOL = 1e-10
ISOMETRY_TOL = 1e-9
MAX_REJECTIONS = 500
MAX_PROPOSALS = 20_000
BATCH = 16
IMPROVEMENT_TOL = 1e-7
ACCEPT_TOL = 1e-10
_START_STEP = 0.5
_MIN_STEP = 1e-7

COSTS = ("EOF", "C", "C_sq")


@dataclass
class Decomposition:
    """Ensemble ``{p_i, |psi_i>}`` with ``sum_i p_i |psi_i><psi_i| = rho``."""

    weights: np.ndarray
    components: list[PureState]

    def density(self) -> np.ndarray:
        vecs = np.array([c.amplitudes for c in self.components])
        return (vecs.T * self.weights) @ vecs.conj()


@dataclass
class RoofResult:
    """Upper bound on a convex roof and the decomposition that attains it."""

    bound: float
    decomposition: Decomposition
    restarts_used: int
    converged: bool
    restart_bounds: list[float]
    proposals: int


def eigen_ensemble(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Support eigenvalues (> 1e-10) and matching eigenvector columns."""
    w, v = herm_eig(rho.matrix)
    keep = w > RANK_TOL
    return w[keep], v[:, keep]


def _decomposition_from_rows(rows: np.ndarray, dims) -> Decomposition:
    weights = np.sum(np.abs(rows) ** 2, axis=1)
    keep = weights > 0.0
    rows, weights = rows[keep], weights[keep]
    comps = [PureState(dims, r / math.sqrt(w)) for r, w in zip(rows, weights)]
    return Decomposition(weights / weights.sum(), comps)


def ensemble_from_isometry(rho: DensityMatrix, u) -> Decomposition:
    """Decomposition ``psi_i = sum_j u_ij sqrt(l_j) v_j`` for an ``m x r`` isometry ``u``.

    Raises
    ------
    ContractError
        If ``u`` does not have ``rank(rho)`` columns or ``u^dagger u`` is
        not the identity within 1e-9.
    """
    lam, vecs = eigen_ensemble(rho)
    u = np.asarray(u, dtype=np.complex128)
    r = lam.size
    if u.ndim != 2 or u.shape[1] != r or u.shape[0] < r:
        raise ContractError(f"isometry must be m x {r} with m >= {r}, got shape {u.shape}")
    err = float(np.max(np.abs(u.conj().T @ u - np.eye(r))))
    if err > ISOMETRY_TOL:
        raise ContractError(f"u is not an isometry (|u^dagger u - I| = {err:.3e})")
    return _decomposition_from_rows(u @ (vecs * np.sqrt(lam)).T, rho.dims)


def _entropy_rows(w: np.ndarray) -> np.ndarray:
    w = np.where(w > 0.0, w, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(w > 0.0, w * np.log2(np.where(w > 0.0, w, 1.0)), 0.0)
    return -t.sum(axis=-1)


class _MarginalCost:
    """Weighted pure-state cost ``|psi|^2 f(rho_A)`` evaluated on unnormalized rows."""

    def __init__(self, kind: str, dims, partition: PartitionSpec | None):
        n = len(dims)
        if partition is None:
            partition = PartitionSpec.bipartite([0], n)
        if len(partition.parties) != 2:
            raise ArgumentError(f"roof needs a bipartite partition, got {partition}")
        partition.check(n)
        if not partition.covers(n):
            raise ArgumentError(f"partition {partition} must cover all {n} subsystems")
        order = [i for p in partition.parties for i in p]
        da = math.prod(dims[i] for i in partition.parties[0])
        db = math.prod(dims[i] for i in partition.parties[1])
        self.kind = kind
        self.dims = tuple(dims)
        self.perm = None if order == list(range(n)) else [0] + [1 + i for i in order]
        self.da, self.db = da, db
        # the marginal on the smaller side has the same nonzero spectrum
        self.left = da <= db

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        k = rows.shape[0]
        if self.perm is not None:
            rows = np.transpose(rows.reshape((k,) + self.dims), self.perm)
        m = rows.reshape(k, self.da, self.db)
        if not self.left:
            m = m.transpose(0, 2, 1)
        if m.shape[1] == 2 and self.kind == "EOF":
            return _qubit_eof_rows(m)
        g = m @ m.conj().transpose(0, 2, 1)
        w = np.einsum("kii->k", g).real
        safe = np.where(w > 0.0, w, 1.0)
        if self.kind == "EOF":
            if g.shape[1] == 1:
                return np.zeros(k)
            spec = herm_eig_batch(g / safe[:, None, None]).eigenvalues
            return w * _entropy_rows(spec)
        # Tr(rho_A^2) from the unnormalized Gram matrix
        purity = np.einsum("kij,kij->k", g, g.conj()).real / safe**2
        c_sq = np.maximum(2.0 * (1.0 - purity), 0.0)
        return w * (c_sq if self.kind == "C_sq" else np.sqrt(c_sq))


def _qubit_eof_rows(m: np.ndarray) -> np.ndarray:
    # weight * S(rho_A) for rows reshaped to (K, 2, d); closed-form 2x2 spectrum
    r0, r1 = m[:, 0, :], m[:, 1, :]
    a = np.einsum("kj,kj->k", r0, r0.conj()).real
    d = np.einsum("kj,kj->k", r1, r1.conj()).real
    b = np.einsum("kj,kj->k", r0, r1.conj())
    w = a + d
    det = np.maximum(a * d - (b.real**2 + b.imag**2), 0.0)
    # eigenvalues of the unnormalized marginal: w (1 +- disc) / 2
    disc = np.sqrt(np.maximum(w * w - 4.0 * det, 0.0))
    hi = 0.5 * (w + disc)
    lo = det / np.maximum(hi, 1e-300)
    safe = np.maximum(w, 1e-300)
    # w S = -(hi log hi + lo log lo) + w log w
    return np.maximum(w * np.log2(safe) - hi * np.log2(np.maximum(hi, 1e-300)) - lo * np.log2(np.maximum(lo, 1e-300)), 0.0)


class _CallableCost:
    def __init__(self, fn: Callable[[np.ndarray], np.ndarray]):
        self.fn = fn

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        w = np.sum(np.abs(rows) ** 2, axis=1)
        safe = np.where(w > 0.0, w, 1.0)
        vals = np.asarray(self.fn(rows / np.sqrt(safe)[:, None]), dtype=float)
        return np.where(w > 0.0, w * vals, 0.0)


def make_cost(cost, dims, partition: PartitionSpec | None = None):
    """Row-wise weighted cost for a named measure or a callable on normalized vectors."""
    if callable(cost):
        return _CallableCost(cost)
    if cost not in COSTS:
        raise ArgumentError(f"cost must be one of {COSTS} or a callable, got {cost!r}")
    return _MarginalCost(cost, dims, partition)


def restart_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for restart ``index``; independent of execution order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def random_isometry(m: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``m x r`` isometry (Gram-Schmidt on a Ginibre matrix)."""
    z = rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))
    for k in range(r):
        for _ in range(2):
            z[:, k] -= z[:, :k] @ (z[:, :k].conj().T @ z[:, k])
        z[:, k] /= np.linalg.norm(z[:, k])
    return z


def search_rotations(base: np.ndarray, cost, m: int, rng: np.random.Generator, u0=None,
                     max_proposals: int = MAX_PROPOSALS):
    # base: (r, n) rows sqrt(l_j) v_j^T; returns (value, u, proposals)
    r = base.shape[0]
    u = random_isometry(m, r, rng) if u0 is None else np.array(u0, dtype=np.complex128)
    rows = u @ base
    each = cost(rows)
    value = float(each.sum())
    step = _START_STEP
    rejected = 0
    proposals = 0
    if m < 2:
        return value, u, proposals
    while rejected < MAX_REJECTIONS and proposals < max_proposals:
        x = rng.random((5, BATCH))
        i = (x[0] * m).astype(np.intp)
        j = (i + 1 + (x[1] * (m - 1)).astype(np.intp)) % m
        theta = step * (2.0 * x[2] - 1.0)
        p0 = np.exp(2j * np.pi * x[3])
        p1 = np.exp(2j * np.pi * x[4])
        c = np.cos(theta)
        s = np.sin(theta)
        g00, g01 = c * p0, s * p1
        g10, g11 = -s * p1.conj(), c * p0.conj()
        ri, rj = rows[i], rows[j]
        new_i = g00[:, None] * ri + g01[:, None] * rj
        new_j = g10[:, None] * ri + g11[:, None] * rj
        both = cost(np.concatenate([new_i, new_j]))
        ci, cj = both[:BATCH], both[BATCH:]
        delta = ci + cj - each[i] - each[j]
        proposals += BATCH
        best = int(np.argmin(delta))
        if delta[best] < -ACCEPT_TOL:
            a, b = int(i[best]), int(j[best])
            rows[a], rows[b] = new_i[best], new_j[best]
            ua, ub = u[a].copy(), u[b].copy()
            u[a] = g00[best] * ua + g01[best] * ub
            u[b] = g10[best] * ua + g11[best] * ub
            each[a], each[b] = ci[best], cj[best]
            value = float(each.sum())
            rejected = 0
            step = min(1.5, step * 1.5)
        else:
            rejected += BATCH
            step = max(_MIN_STEP, step * 0.7)
    # resum from scratch so the bound matches the reported ensemble exactly
    return float(cost(u @ base).sum()), u, proposals


def default_components(rank: int) -> int:
    return min(rank * rank, rank + 4)


def roof_minimize(
    rho: DensityMatrix,
    cost="EOF",
    partition: PartitionSpec | None = None,
    m: int | None = None,
    restarts: int = 16,
    seed: int = 0,
    init=None,
) -> RoofResult:
    """Upper bound on the convex roof of ``cost`` for ``rho``.

    Parameters
    ----------
    rho : DensityMatrix
    cost : {"EOF", "C", "C_sq"} or callable
        Named costs use the marginal of the first party of ``partition``
        (default: first subsystem against the rest).  A callable receives a
        ``(K, dim)`` array of normalized component vectors and returns ``K``
        costs.
    m : int, optional
        Number of components; defaults to ``min(r**2, r + 4)`` for rank ``r``.
    restarts : int
        Independent random isometry starts, seeded by ``(seed, index)``.
    init : array_like, optional
        ``m x r`` isometry used in place of the random start of restart 0.

    Returns
    -------
    RoofResult
        ``converged`` is False when the final restart still lowered the best
        bound by more than 1e-7, i.e. more restarts might help.
    """
    if restarts < 1:
        raise ArgumentError(f"restarts must be >= 1, got {restarts}")
    lam, vecs = eigen_ensemble(rho)
    r = lam.size
    m = default_components(r) if m is None else int(m)
    if m < r:
        raise ArgumentError(f"m = {m} is below rank(rho) = {r}")
    fn = make_cost(cost, rho.dims, partition)
    base = (vecs * np.sqrt(lam)).T
    best = None
    bounds = []
    total = 0
    prev_best = math.inf
    improvement = 0.0
    for idx in range(restarts):
        value, u, used = search_rotations(base, fn, m, restart_rng(seed, idx), init if idx == 0 else None)
        total += used
        bounds.append(value)
        if best is None or value < best[0]:
            best = (value, u)
        improvement = prev_best - best[0]
        prev_best = best[0]
    converged = restarts == 1 or not (improvement > IMPROVEMENT_TOL)
    value, u = best
    return RoofResult(value, _decomposition_from_rows(u @ base, rho.dims), restarts, converged, bounds, total)


def decomposition_cost(dec: Decomposition, cost="EOF", partition: PartitionSpec | None = None) -> float:
    """Average cost of a decomposition, recomputed from its components."""
    fn = make_cost(cost, dec.components[0].dims, partition)
    rows = np.array([c.amplitudes for c in dec.components]) * np.sqrt(dec.weights)[:, None]
    return float(fn(rows).sum())


def _bipartite_tensor(rho: DensityMatrix, partition) -> np.ndarray:
    # rho as t[a, b, a', b'] with the first party of ``partition`` on a
    cost = _MarginalCost("C", rho.dims, partition)
    n = rho.n
    t = rho.matrix.reshape(rho.dims + rho.dims)
    if cost.perm is not None:
        order = [p - 1 for p in cost.perm[1:]]
        t = np.transpose(t, order + [n + i for i in order])
    return t.reshape(cost.da, cost.db, cost.da, cost.db)


def _criterion_norm(t: np.ndarray) -> float:
    # max of the partial-transpose and realignment trace norms for t[a, b, a', b']
    da, db = t.shape[0], t.shape[1]
    pt = np.transpose(t, (2, 1, 0, 3)).reshape(da * db, da * db)
    neg = float(np.abs(herm_eig(0.5 * (pt + pt.conj().T)).eigenvalues).sum())
    realigned = np.transpose(t, (0, 2, 1, 3)).reshape(da * da, db * db)
    gram = realigned @ realigned.conj().T if da <= db else realigned.conj().T @ realigned
    sv = np.sqrt(np.clip(herm_eig(0.5 * (gram + gram.conj().T)).eigenvalues, 0.0, None))
    return max(neg, float(sv.sum()))


def concurrence_lower_bound(rho: DensityMatrix, partition: PartitionSpec | None = None) -> float:
    """Lower bound on the mixed-state concurrence from the PPT and realignment criteria.

    ``C >= sqrt(2 / (d (d - 1))) (max(|rho^T_A|_1, |R(rho)|_1) - 1)`` with
    ``d`` the smaller local dimension.
    """
    t = _bipartite_tensor(rho, partition)
    d = min(t.shape[0], t.shape[1])
    if d < 2:
        return 0.0
    return max(0.0, math.sqrt(2.0 / (d * (d - 1))) * (_criterion_norm(t) - 1.0))


def _isotropic_eof(f: float, d: int) -> float:
    # EOF of the d x d isotropic state with singlet fraction f (convex hull of R(f))
    if f <= 1.0 / d:
        return 0.0
    if d == 2:
        g = 0.5 * (math.sqrt(f) + math.sqrt(1.0 - f)) ** 2
        return binary_entropy(min(1.0, g))
    knee = 4.0 * (d - 1) / (d * d)
    if f >= knee:
        return d * math.log2(d - 1) / (d - 2) * (f - 1.0) + math.log2(d)
    g = (math.sqrt(f) + math.sqrt((d - 1) * (1.0 - f))) ** 2 / d
    return binary_entropy(min(1.0, g)) + (1.0 - g) * math.log2(d - 1)


def eof_lower_bound(rho: DensityMatrix, partition: PartitionSpec | None = None) -> float:
    """Lower bound on the EOF from the hashing inequality and the PPT/realignment norms.

    The second bound evaluates the isotropic-state EOF at singlet fraction
    ``max(|rho^T_A|_1, |R(rho)|_1) / d`` with ``d`` the smaller local dimension.
    """
    t = _bipartite_tensor(rho, partition)
    da, db = t.shape[0], t.shape[1]
    d = min(da, db)
    s_ab = matrix_entropy(t.reshape(da * db, da * db))
    s_a = matrix_entropy(np.einsum("ajbj->ab", t))
    s_b = matrix_entropy(np.einsum("jajb->ab", t))
    return max(0.0, s_a - s_ab, s_b - s_ab, _isotropic_eof(min(1.0, _criterion_norm(t) / d), d))
