"""Seeded random-state campaigns over the monogamy inequalities.

Sample ``i`` of a campaign with master seed ``s`` is drawn from a Philox
generator keyed by ``(s, i)``, so results do not depend on evaluation order
or on the number of worker processes.  States follow the Haar measure
(pure) or the measure induced by tracing out a Haar ancilla (mixed).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, CapacityError, UnsupportedError
from .measures import concurrence_two_qubit, eof_two_qubit, marginal_entropy, pure_concurrence_sq
from .monogamy import hierarchy_chain
from .roof import concurrence_lower_bound, eof_lower_bound, roof_minimize
from .states import MAX_PURE_DIM, DensityMatrix, PureState, named_state, partial_trace
from .statefile import state_to_dict

INEQUALITIES = ("sef_nqubit", "sef_hierarchical", "sc_nqubit", "sef_2dd", "sef_ddd")
CONJECTURES = ("sef_2dd", "sef_ddd")
MAX_CAMPAIGN_DIM = 64
HIST_BINS = 20
# cheap Koashi-Winter budget for tail terms; tails only enter as upper bounds
FUZZ_TAIL_BUDGET = {"grid": 16, "refine_iters": 100, "starts": 64, "refines": 1, "max_proposals": 1000}
FUZZ_ROOF_RESTARTS = 4
INJECTABLE = {
    "ou333": ((3, 3, 3), {}),
    "cluster4": ((2, 2, 2, 2), {}),
    "s224": ((2, 2, 4), {}),
}


def sample_rng(seed) -> np.random.Generator:
    """Counter-based generator; ``seed`` is an int or a tuple such as ``(master, index)``."""
    key = [int(s) for s in seed] if isinstance(seed, (tuple, list)) else [int(seed)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def haar_pure(dims, seed) -> PureState:
    """Normalized complex standard-normal vector (Haar-distributed pure state)."""
    dims = tuple(int(d) for d in dims)
    n = math.prod(dims)
    if n > MAX_PURE_DIM:
        raise CapacityError(f"pure state dimension {n} exceeds {MAX_PURE_DIM}")
    rng = sample_rng(seed)
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState.from_unnormalized(dims, z)


def random_mixed(dims, rank: int, seed) -> DensityMatrix:
    """Reduction of a Haar pure state on ``dims x rank`` to ``dims``."""
    if int(rank) < 1:
        raise ArgumentError(f"rank must be >= 1, got {rank}")
    dims = tuple(int(d) for d in dims)
    psi = haar_pure(dims + (int(rank),), seed)
    n = math.prod(dims)
    m = psi.amplitudes.reshape(n, int(rank))
    return DensityMatrix(dims, m @ m.conj().T, check=False)


@dataclass(frozen=True)
class CampaignConfig:
    dims: tuple
    samples: int
    seed: int
    inequality: str
    tolerance: float = 1e-9
    mixed_rank: int | None = None
    inject: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "inject", tuple(self.inject))
        if int(self.samples) < 0 or (int(self.samples) == 0 and not self.inject):
            raise ArgumentError(f"samples must be >= 1, got {self.samples}")
        if math.prod(self.dims) > MAX_CAMPAIGN_DIM:
            raise CapacityError(f"campaign dimension {math.prod(self.dims)} exceeds {MAX_CAMPAIGN_DIM}")
        if self.inequality not in INEQUALITIES:
            raise UnsupportedError(f"unknown inequality {self.inequality!r}; choose from {INEQUALITIES}")


@dataclass
class CampaignReport:
    """Campaign outcome.

    ``min_margin`` is the smallest conservative margin.  A violation is a
    sample whose margin is below ``-tolerance``; for the conjecture modes it
    must hold for the optimistic margin too.
    """

    config: dict
    min_margin: float
    argmin_state: dict
    violations: int
    histogram: dict
    min_optimistic_margin: float
    margin_kind: str
    evidence_only: bool
    violation_list: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "min_margin": self.min_margin,
            "min_optimistic_margin": self.min_optimistic_margin,
            "argmin_state": self.argmin_state,
            "violations": self.violations,
            "violation_list": self.violation_list,
            "histogram": self.histogram,
            "margin_kind": self.margin_kind,
            "evidence_only": self.evidence_only,
            "extra": self.extra,
        }


def _check_combo(cfg: CampaignConfig) -> None:
    dims, ineq = cfg.dims, cfg.inequality
    qubits = all(d == 2 for d in dims)
    if len(dims) < 3:
        raise UnsupportedError(f"{ineq} needs at least 3 parties, got dims {dims}")
    if ineq in ("sef_nqubit", "sef_hierarchical") and not qubits:
        raise UnsupportedError(f"{ineq} is defined for qubits only, got dims {dims}")
    if ineq == "sef_2dd" and dims[0] != 2:
        raise UnsupportedError(f"sef_2dd needs a qubit first party, got dims {dims}")
    if cfg.mixed_rank is not None and ineq != "sef_nqubit":
        raise UnsupportedError(f"{ineq} is evaluated on pure states only")
    for name in cfg.inject:
        if name not in INJECTABLE:
            raise UnsupportedError(f"cannot inject {name!r}; choose from {sorted(INJECTABLE)}")
        if INJECTABLE[name][0] != dims:
            raise UnsupportedError(f"{name} has dims {INJECTABLE[name][0]}, campaign dims are {dims}")


def _pair_sef(psi: PureState, j: int) -> tuple[float, float]:
    # (upper, lower) bounds on E_f(A1 A_j)^2
    rho = partial_trace(psi, [0, j])
    if rho.dims == (2, 2):
        e = eof_two_qubit(rho)
        return e * e, e * e
    up = roof_minimize(rho, "EOF", restarts=FUZZ_ROOF_RESTARTS).bound
    lo = eof_lower_bound(rho)
    return up * up, lo * lo


def _pair_sc(psi: PureState, j: int) -> tuple[float, float]:
    rho = partial_trace(psi, [0, j])
    if rho.dims == (2, 2):
        c = concurrence_two_qubit(rho)
        return c * c, c * c
    up = roof_minimize(rho, "C", restarts=FUZZ_ROOF_RESTARTS).bound
    lo = concurrence_lower_bound(rho)
    return up * up, lo * lo


def _margins(state, cfg: CampaignConfig) -> dict:
    ineq = cfg.inequality
    n = len(cfg.dims)
    if ineq == "sef_hierarchical":
        chain = hierarchy_chain(state, **FUZZ_TAIL_BUDGET)
        scores = [c.score for c in chain]
        steps = [b - a for a, b in zip(scores, scores[1:])]
        m = min(scores)
        return {"margin": m, "optimistic": m, "scores": scores, "min_step": min(steps) if steps else math.inf}
    if ineq == "sef_nqubit" and isinstance(state, DensityMatrix):
        joint = roof_minimize(state, "EOF", restarts=FUZZ_ROOF_RESTARTS).bound
        joint_lo = eof_lower_bound(state)
        pairs = sum(eof_two_qubit(partial_trace(state, [0, j])) ** 2 for j in range(1, n))
        # the joint EOF is the bounded term here, so the roles of the bounds swap
        return {"margin": joint_lo**2 - pairs, "optimistic": joint**2 - pairs}
    if ineq == "sc_nqubit":
        joint = pure_concurrence_sq(state)
        terms = [_pair_sc(state, j) for j in range(1, n)]
    else:
        joint = marginal_entropy(state, [0]) ** 2
        terms = [_pair_sef(state, j) for j in range(1, n)]
    return {"margin": joint - math.fsum(t[0] for t in terms), "optimistic": joint - math.fsum(t[1] for t in terms)}


def _draw(cfg: CampaignConfig, index: int):
    seed = (cfg.seed, index)
    if cfg.mixed_rank is not None:
        return random_mixed(cfg.dims, cfg.mixed_rank, seed)
    return haar_pure(cfg.dims, seed)


def _injected(cfg: CampaignConfig, name: str) -> PureState:
    dims, params = INJECTABLE[name]
    psi = named_state(name, **params)
    return PureState(cfg.dims, psi.amplitudes) if psi.dims != cfg.dims else psi


def _evaluate(args):
    cfg, index = args
    if index < cfg.samples:
        state = _draw(cfg, index)
    else:
        state = _injected(cfg, cfg.inject[index - cfg.samples])
    return index, _margins(state, cfg)


def _workers() -> int:
    raw = os.environ.get("MONOQT_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ArgumentError(f"MONOQT_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ArgumentError(f"MONOQT_THREADS must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def _histogram(margins: np.ndarray, tol: float) -> dict:
    lo, hi = float(margins.min()), float(margins.max())
    if hi <= lo:
        hi = lo + 1.0
    counts, edges = np.histogram(margins, bins=HIST_BINS, range=(lo, hi))
    q = np.quantile(margins, [0.0, 0.01, 0.5, 0.99, 1.0])
    return {
        "edges": [float(e) for e in edges],
        "counts": [int(c) for c in counts],
        "below_tolerance": int(np.sum(margins < -tol)),
        "quantiles": {"0": float(q[0]), "0.01": float(q[1]), "0.5": float(q[2]), "0.99": float(q[3]), "1": float(q[4])},
    }


def run_campaign(config: CampaignConfig, workers: int | None = None) -> CampaignReport:
    """Evaluate the chosen inequality margin on every sample.

    ``workers`` defaults to ``MONOQT_THREADS`` (0 means one process per CPU).
    """
    cfg = config
    _check_combo(cfg)
    total = cfg.samples + len(cfg.inject)
    jobs = [(cfg, i) for i in range(total)]
    nproc = _workers() if workers is None else max(1, int(workers))
    if nproc > 1 and total > 1:
        with ProcessPoolExecutor(max_workers=nproc) as pool:
            results = list(pool.map(_evaluate, jobs, chunksize=max(1, total // (4 * nproc))))
    else:
        results = [_evaluate(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    margins = np.array([r[1]["margin"] for r in results])
    optimistic = np.array([r[1]["optimistic"] for r in results])
    tol = float(cfg.tolerance)
    conjecture = cfg.inequality in CONJECTURES
    flagged = (margins < -tol) & (optimistic < -tol) if conjecture else margins < -tol
    idx = int(np.argmin(margins))
    argmin_state = _draw(cfg, idx) if idx < cfg.samples else _injected(cfg, cfg.inject[idx - cfg.samples])
    argmin = {
        "index": idx,
        "sample_seed": [int(cfg.seed), idx] if idx < cfg.samples else None,
        "injected": None if idx < cfg.samples else cfg.inject[idx - cfg.samples],
        "state": state_to_dict(argmin_state),
    }
    violation_list = [
        {"index": int(i), "margin": float(margins[i]), "optimistic_margin": float(optimistic[i]),
         "injected": None if i < cfg.samples else cfg.inject[i - cfg.samples]}
        for i in np.flatnonzero(flagged)
    ]
    exact = cfg.inequality in ("sef_nqubit", "sc_nqubit") and all(d == 2 for d in cfg.dims) and cfg.mixed_rank is None
    extra = {"state_measure": "induced by a Haar ancilla" if cfg.mixed_rank else "Haar pure states"}
    if cfg.inequality == "sef_hierarchical":
        steps = np.array([r[1]["min_step"] for r in results])
        extra["min_step"] = float(steps.min())
        extra["nondecreasing_violations"] = int(np.sum(steps < -tol))
        extra["tail_terms"] = "Koashi-Winter upper bounds"
    return CampaignReport(
        config={"dims": list(cfg.dims), "samples": cfg.samples, "seed": cfg.seed, "inequality": cfg.inequality,
                "tolerance": tol, "mixed_rank": cfg.mixed_rank, "inject": list(cfg.inject)},
        min_margin=float(margins.min()),
        argmin_state=argmin,
        violations=int(flagged.sum()),
        histogram=_histogram(margins, tol),
        min_optimistic_margin=float(optimistic.min()),
        margin_kind="exact" if exact else "bounds",
        evidence_only=conjecture,
        violation_list=violation_list,
        extra=extra,
    )
