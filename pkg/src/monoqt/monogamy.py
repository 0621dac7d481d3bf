"""Monogamy scores, the hierarchical indicators tau_SEF(k) and closed-form analyses.

Party ``A1`` is always subsystem 0; reorder subsystems before calling to
focus on a different party.  A tail term ``E_f(A1 | A_k ... A_n)`` is the EOF
of a mixed reduction and comes from the Koashi-Winter route, so it is an
upper bound unless noted otherwise in the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discord import cavity_closed_forms, koashi_winter
from .errors import ArgumentError, CapacityError, UnsupportedError
from .measures import (
    binary_entropy,
    concurrence_batch,
    eof_of_c_sq,
    eof_curve,
    eof_two_qubit,
    marginal_entropy,
    pure_concurrence_sq,
    von_neumann_entropy,
    weighted_entropies,
)
from .roof import roof_minimize
from .states import (
    CavityParams,
    DensityMatrix,
    PureState,
    cavity_state,
    cluster4,
    ou333,
    partial_trace,
    s224,
    s422,
)

CLAMP_TOL = 1e-9
MAX_MIXED_DIM = 64
# KW budget used for tail terms; the 4-dimensional frame path is the costly one
TAIL_BUDGET = {"grid": 64, "refine_iters": 200, "starts": 256, "refines": 2}


def _clamp(x: float) -> float:
    return 0.0 if -CLAMP_TOL <= x < 0.0 else x


@dataclass
class MonogamyScore:
    """``score = joint - sum(pairwise)`` for squared measures (SEF or SC).

    ``warning`` is set when an input lies outside the physically allowed
    range; such inputs are still evaluated.
    """

    measure: str
    joint: float
    pairwise: list[float]
    score: float
    warning: str | None = None
    k: int | None = None
    bound_quality: str = "exact"


def _score(measure, joint, pairwise, **extra) -> MonogamyScore:
    pairwise = [float(p) for p in pairwise]
    return MonogamyScore(measure, float(joint), pairwise, float(joint) - math.fsum(pairwise), **extra)


def sc_score(joint_c_sq: float, pairwise_c_sq, max_c_sq: float = 1.0) -> MonogamyScore:
    """SC monogamy score ``C^2(A|rest) - sum_i C^2(A A_i)``; negative means polygamous.

    Values outside ``[0, max_c_sq]`` are accepted but flagged.  For a first
    party of dimension ``d`` the allowed maximum is ``2 (1 - 1/d)``.
    """
    vals = [float(joint_c_sq)] + [float(x) for x in pairwise_c_sq]
    bad = [x for x in vals if x < 0.0 or x > max_c_sq + 1e-12]
    warning = f"inputs outside [0, {max_c_sq:g}]: {bad}" if bad else None
    return _score("SC", vals[0], vals[1:], warning=warning)


def _unit(x: float, name: str) -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0) or math.isnan(x):
        raise ArgumentError(f"{name} must lie in [0, 1], got {x}")
    return x


def sef_score_from_c_sq(joint_c_sq: float, pairwise_c_sq) -> MonogamyScore:
    """SEF score with every EOF obtained from its squared concurrence by the EOF curve."""
    joint = eof_curve(_unit(joint_c_sq, "joint_c_sq")).eof ** 2
    pairs = [eof_curve(_unit(x, "pairwise_c_sq")).eof ** 2 for x in pairwise_c_sq]
    return _score("SEF", joint, pairs)


@dataclass
class IndicatorReport:
    """tau_SEF(k) with the squared EOF terms that enter it.

    ``tau`` is clamped to 0 when it lies in ``[-1e-9, 0)``; ``raw_tau`` keeps
    the unclamped ``joint - sum(terms)``.  ``terms`` lists the pairwise terms
    for ``A2 .. A_{k-1}`` followed by the tail term.
    """

    k: int
    tau: float
    terms: list[float]
    method: str
    bound_quality: str
    joint: float
    raw_tau: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def _report(k, joint, terms, method, exact, diagnostics=None) -> IndicatorReport:
    raw = float(joint) - math.fsum(terms)
    return IndicatorReport(k, _clamp(raw), [float(t) for t in terms], method,
                           "exact" if exact else "upper_bound", float(joint), raw, diagnostics or {})


def _qubits(state, what: str) -> int:
    if any(d != 2 for d in state.dims):
        raise ArgumentError(f"{what} needs qubit subsystems, got dims {state.dims}")
    return len(state.dims)


def _check_k(k: int, n: int) -> int:
    if n < 3:
        raise ArgumentError(f"indicators need at least 3 parties, got {n}")
    if not (3 <= int(k) <= n):
        raise ArgumentError(f"k must satisfy 3 <= k <= {n}, got {k}")
    return int(k)


def _pair_eofs(state, upto: int) -> list[float]:
    # E_f(A1 A_j) for j = 2 .. upto (1-based), Wootters on two-qubit reductions,
    # evaluated as one stack because the eigensolver cost is per call
    if upto <= 1:
        return []
    stack = np.array([partial_trace(state, [0, j]).matrix for j in range(1, upto)])
    c = concurrence_batch(stack)
    return [float(e) for e in eof_of_c_sq(c * c)]


def _tail_eof(psi: PureState, k: int, budget) -> tuple[float, bool, dict]:
    n = psi.n
    if k == n and psi.dims[n - 1] == 2:
        return eof_two_qubit(partial_trace(psi, [0, n - 1])), True, {"tail": "wootters"}
    b = tuple(range(1, k - 1))
    c = tuple(range(k - 1, n))
    res = koashi_winter(psi, 0, b, c, **budget)
    return res.eof, res.exact, {"tail": "koashi_winter", "support_rank": res.support_rank}


TAIL_METHODS = ("auto", "wootters", "koashi_winter", "roof")


def _roof_tail(psi: PureState, k: int, restarts: int, seed: int) -> tuple[float, bool, dict]:
    rho = partial_trace(psi, [0] + list(range(k - 1, psi.n)))
    if math.prod(rho.dims) > MAX_MIXED_DIM:
        raise CapacityError(f"roof tail is limited to dimension {MAX_MIXED_DIM}, got {math.prod(rho.dims)}")
    res = roof_minimize(rho, "EOF", restarts=restarts, seed=seed)
    return res.bound, len(res.decomposition.components) == 1, {"tail": "roof", "converged": res.converged}


def tau_sef_k_pure(psi: PureState, k: int, tail: str = "auto", restarts: int = 4, seed: int = 0,
                   **budget) -> IndicatorReport:
    """tau_SEF(k) = E^2(A1|rest) - sum_{j<k} E^2(A1 A_j) - E^2(A1 | A_k .. A_n).

    The joint term is the marginal entropy and the pairs use Wootters, both
    exact.  The tail goes through Koashi-Winter with ``b = A2 .. A_{k-1}``;
    the report is exact only when the measured support is a qubit and the
    grid minimum survived refinement.  ``budget`` is passed to
    ``koashi_winter``.

    ``A1 .. A_{k-1}`` must be qubits; the tail parties may have any
    dimension (a grouped pair of qubits, say).

    ``tail`` forces the tail method: ``"wootters"`` (only for ``k = n`` with
    a qubit last party), ``"koashi_winter"``, or ``"roof"`` (convex-roof
    search on the reduction, using ``restarts`` and ``seed``).  ``"auto"``
    picks Wootters when it applies and Koashi-Winter otherwise.
    """
    n = psi.n
    k = _check_k(k, n)
    if any(d != 2 for d in psi.dims[: k - 1]):
        raise ArgumentError(f"A1 .. A{k - 1} must be qubits, got dims {psi.dims}")
    joint = marginal_entropy(psi, [0]) ** 2
    pairs = [e * e for e in _pair_eofs(psi, k - 1)]
    if tail not in TAIL_METHODS:
        raise ArgumentError(f"tail must be one of {TAIL_METHODS}, got {tail!r}")
    pair_tail = k == n and psi.dims[n - 1] == 2
    if tail == "wootters" and not pair_tail:
        raise UnsupportedError("a Wootters tail needs k = n and a qubit last party")
    if tail == "roof":
        e, exact, diag = _roof_tail(psi, k, restarts, seed)
    elif tail == "koashi_winter" and pair_tail:
        res = koashi_winter(psi, 0, tuple(range(1, n - 1)), n - 1, **{**TAIL_BUDGET, **budget})
        e, exact, diag = res.eof, res.exact, {"tail": "koashi_winter", "support_rank": res.support_rank}
    else:
        e, exact, diag = _tail_eof(psi, k, {**TAIL_BUDGET, **budget})
    return _report(k, joint, pairs + [e * e], "pure_exact", exact, diag)


def tau_w_state_closed_form(n: int, k: int) -> float:
    """tau_SEF(k) of the n-qubit W state from the symmetric squared concurrences."""
    n, k = int(n), int(k)
    _check_k(k, n)
    e2 = lambda x: eof_curve(x).eof ** 2
    return e2(4.0 * (n - 1) / n**2) - (k - 2) * e2(4.0 / n**2) - e2(4.0 * (n - k + 1) / n**2)


def _mixed_eof(rho: DensityMatrix, restarts: int, seed: int) -> tuple[float, bool]:
    if rho.n == 2 and rho.dims == (2, 2):
        return eof_two_qubit(rho), True
    res = roof_minimize(rho, "EOF", restarts=restarts, seed=seed)
    # a rank-1 reduction has a single decomposition, so the roof is exact
    exact = len(res.decomposition.components) == 1
    return res.bound, exact


def _pure_tau_rows(vecs: np.ndarray, n: int) -> np.ndarray:
    # tau_SEF(n) of each normalized n-qubit row: S(A1)^2 - sum_j E_f(A1 A_j)^2
    b = vecs.shape[0]
    t = vecs.reshape((b,) + (2,) * n)
    m = t.reshape(b, 2, -1)
    joint = weighted_entropies(m @ m.conj().transpose(0, 2, 1)) ** 2
    total = joint.copy()
    for j in range(1, n):
        rest = [i for i in range(1, n) if i != j]
        pair = np.transpose(t, [0, 1, j + 1] + [i + 1 for i in rest]).reshape(b, 4, -1)
        c = concurrence_batch(pair @ pair.conj().transpose(0, 2, 1))
        total -= eof_of_c_sq(c * c) ** 2
    return total


def tau_sef_k_mixed(rho: DensityMatrix, k: int, kind: int = 2, restarts: int = 4, seed: int = 0,
                    closed: dict | None = None, **budget) -> IndicatorReport:
    """Mixed-state indicators tau^(1) (``kind=1``) and tau^(2) (``kind=2``).

    Type 2 is ``E^2(A1|rest) - sum_j E^2(A1 A_j) - E^2(A1|A_k..A_n)`` with
    mixed-state EOFs from convex-roof search (upper bounds) and Wootters for
    two-qubit reductions.  ``closed`` may supply closed-form values for the
    ``"joint"`` and ``"tail"`` EOFs; the report is exact only if every term
    is.  Type 1 minimizes the average pure-state tau over decompositions of
    ``rho`` and is always an upper bound.
    """
    n = _qubits(rho, "tau_sef_k_mixed")
    k = _check_k(k, n)
    if math.prod(rho.dims) > MAX_MIXED_DIM:
        raise CapacityError(f"mixed indicators are limited to dimension {MAX_MIXED_DIM}, got {math.prod(rho.dims)}")
    closed = closed or {}
    if kind == 1:
        if k == n:
            fn = lambda v: _pure_tau_rows(v, n)
        else:
            def fn(v):
                # zero rows come from dropped components and carry no weight
                return np.array([tau_sef_k_pure(PureState(rho.dims, x), k, **budget).raw_tau
                                 if np.vdot(x, x).real > 0.5 else 0.0 for x in v])
        res = roof_minimize(rho, fn, restarts=restarts, seed=seed)
        return IndicatorReport(k, _clamp(res.bound), [], "mixed_type1_roof", "upper_bound", math.nan, res.bound,
                               {"components": len(res.decomposition.components), "converged": res.converged})
    if kind != 2:
        raise ArgumentError(f"kind must be 1 or 2, got {kind}")
    exact = True
    if "joint" in closed:
        joint = float(closed["joint"])
    else:
        joint, ok = _mixed_eof(rho, restarts, seed)
        exact &= ok
    pairs = _pair_eofs(rho, k - 1)
    if "tail" in closed:
        tail = float(closed["tail"])
    elif k == n:
        tail = eof_two_qubit(partial_trace(rho, [0, n - 1]))
    else:
        tail, ok = _mixed_eof(partial_trace(rho, [0] + list(range(k - 1, n))), restarts, seed)
        exact &= ok
    return _report(k, joint * joint, [e * e for e in pairs] + [tail * tail], "mixed_type2", exact)


CAVITY_PARTITIONS = {
    # subsystem order is (c1, r1, c2, r2); each tuple lists A1 .. A4
    "c1_first": (0, 2, 1, 3),
    "c1_r2_first": (0, 3, 2, 1),
    "r1_first": (1, 3, 0, 2),
    "r1_c2_first": (1, 2, 3, 0),
}
_CAVITY_TAILS = {
    "c1_first": "eof_c1_r1r2",
    "c1_r2_first": "eof_c1_c2r1",
    "r1_first": "eof_r1_c1c2",
    "r1_c2_first": "eof_r1_r2c1",
}


def cavity_indicator_decomposition(p: CavityParams, partition_name: str = "c1_first"):
    """``(tau4, tau3_pure, tau3_mixed)`` for the cavity-reservoir state, all from closed forms.

    ``tau4`` is tau_SEF(4) of the pure state in the chosen party order,
    ``tau3_pure`` is tau_SEF(3) and ``tau3_mixed`` is tau^(2)_SEF(3) of the
    three-party reduction on A1, A3, A4.  Their identity
    ``tau4 = tau3_pure + tau3_mixed`` holds by cancellation of the shared
    tail term.
    """
    if partition_name not in CAVITY_PARTITIONS:
        raise ArgumentError(f"unknown partition {partition_name!r}; choose from {sorted(CAVITY_PARTITIONS)}")
    order = CAVITY_PARTITIONS[partition_name]
    psi = cavity_state(p)
    a1 = order[0]
    joint = marginal_entropy(psi, [a1]) ** 2
    pairs = [eof_two_qubit(partial_trace(psi, sorted((a1, j)))) ** 2 for j in order[1:]]
    tail = getattr(cavity_closed_forms(p), _CAVITY_TAILS[partition_name]) ** 2
    tau4 = joint - math.fsum(pairs)
    tau3_pure = joint - pairs[0] - tail
    tau3_mixed = tail - pairs[1] - pairs[2]
    return tau4, tau3_pure, tau3_mixed


def hierarchy_chain(psi: PureState, **budget) -> list[MonogamyScore]:
    """SEF scores tau_SEF(k) for k = 3 .. n as MonogamyScore records.

    ``pairwise`` holds the squared pair terms followed by the squared tail.
    """
    n = _qubits(psi, "hierarchy_chain")
    if n < 3:
        raise ArgumentError(f"hierarchy_chain needs at least 3 qubits, got {n}")
    joint = marginal_entropy(psi, [0]) ** 2
    pairs = [e * e for e in _pair_eofs(psi, n)]
    budget = {**TAIL_BUDGET, **budget}
    out = []
    for k in range(3, n + 1):
        # for k = n the tail is the last pair
        tail, exact, _ = _tail_eof(psi, k, budget) if k < n else (math.sqrt(pairs[-1]), True, None)
        terms = pairs[: k - 2] + [tail * tail]
        out.append(_score("SEF", joint, terms, k=k, bound_quality="exact" if exact else "upper_bound"))
    return out


@dataclass
class Theorem4Ledger:
    """Split of the SEF score into ``gamma1 + gamma2``.

    ``k1 = E^2(x)/x`` for the joint squared concurrence ``x`` and ``ki`` alike
    for each pair (0 for a zero pair); ``gamma1 = sum (k1 - ki) x_i`` and
    ``gamma2 = k1`` times the SC score.
    """

    k1: float
    ki: list[float]
    gamma1: float
    gamma2: float
    sef_score: float


def _ratio(x: float) -> float:
    return eof_curve(x).eof ** 2 / x if x > 0.0 else 0.0


def theorem4_ledger(joint_c_sq: float, pairwise_c_sq) -> Theorem4Ledger:
    x = _unit(joint_c_sq, "joint_c_sq")
    if x == 0.0:
        raise ArgumentError("joint_c_sq = 0 leaves the ratio E_f^2 / C^2 undefined")
    xs = [_unit(v, "pairwise_c_sq") for v in pairwise_c_sq]
    k1 = _ratio(x)
    ki = [_ratio(v) for v in xs]
    gamma1 = math.fsum((k1 - kv) * v for kv, v in zip(ki, xs))
    gamma2 = k1 * (x - math.fsum(xs))
    return Theorem4Ledger(k1, ki, gamma1, gamma2, gamma1 + gamma2)


def analysis_422(theta: float) -> tuple[float, float]:
    """Closed-form ``(M(SEF), M(SC))`` for the 4 x 2 x 2 state with angle ``theta``.

    ``M(SEF) = 2 h(cos^2 theta)`` and ``M(SC) = -2 cos^2 theta sin^2 theta``.
    """
    a2 = math.cos(theta) ** 2
    b2 = math.sin(theta) ** 2
    return 2.0 * binary_entropy(a2), -2.0 * a2 * b2


def analysis_422_direct(theta: float, restarts: int = 1) -> dict:
    """The same scores computed from the state itself.

    E_f(A|BC) is the marginal entropy; the mixed reductions AB and AC go
    through convex-roof search for EOF and concurrence.
    """
    psi = s422(theta)
    e_joint = marginal_entropy(psi, [0])
    c_joint = pure_concurrence_sq(psi)
    rho_ab = partial_trace(psi, [0, 1])
    rho_ac = partial_trace(psi, [0, 2])
    e_ab = roof_minimize(rho_ab, "EOF", restarts=restarts).bound
    e_ac = roof_minimize(rho_ac, "EOF", restarts=restarts).bound
    c_ab = roof_minimize(rho_ab, "C", restarts=restarts).bound
    c_ac = roof_minimize(rho_ac, "C", restarts=restarts).bound
    return {
        "m_sef": e_joint**2 - e_ab**2 - e_ac**2,
        "m_sc": c_joint - c_ab**2 - c_ac**2,
        "eof_a_bc": e_joint,
        "eof_ab": e_ab,
        "eof_ac": e_ac,
        "c_sq_ab": c_ab**2,
        "c_sq_ac": c_ac**2,
        "s_b": von_neumann_entropy(partial_trace(psi, [1])),
    }


@dataclass
class CounterexampleReport:
    name: str
    values: dict
    notes: str = ""


def counterexample_report(name: str, restarts: int = 2) -> CounterexampleReport:
    """Scores of the catalogue counterexamples ``ou333``, ``s224`` and ``cluster4``."""
    key = str(name).lower()
    if key == "ou333":
        psi = ou333()
        e_joint = marginal_entropy(psi, [0])
        e_ab = roof_minimize(partial_trace(psi, [0, 1]), "EOF", restarts=restarts).bound
        e_ac = roof_minimize(partial_trace(psi, [0, 2]), "EOF", restarts=restarts).bound
        c_ab = roof_minimize(partial_trace(psi, [0, 1]), "C", restarts=restarts).bound
        c_ac = roof_minimize(partial_trace(psi, [0, 2]), "C", restarts=restarts).bound
        sef = _score("SEF", e_joint**2, [e_ab**2, e_ac**2])
        sc = sc_score(pure_concurrence_sq(psi), [c_ab**2, c_ac**2], max_c_sq=4.0 / 3.0)
        return CounterexampleReport("ou333", {"sef_score": sef.score, "sc_score": sc.score, "eof_a_bc": e_joint,
                                              "eof_ab": e_ab, "eof_ac": e_ac, "c_sq_ab": c_ab**2, "c_sq_ac": c_ac**2},
                                    "SEF monogamous while SC is polygamous")
    if key == "s224":
        psi = PureState((2, 2, 2, 2), s224().amplitudes)
        rep = tau_sef_k_pure(psi, 3)
        return CounterexampleReport("s224", {"tau3": rep.tau, "raw_tau3": rep.raw_tau,
                                             "eof_a1_a3a4": math.sqrt(rep.terms[-1]), "bound_quality": rep.bound_quality},
                                    "A1|A2|(A3 A4) with the last two qubits grouped")
    if key == "cluster4":
        rep = tau_sef_k_pure(cluster4(), 4)
        return CounterexampleReport("cluster4", {"tau4": rep.tau, "raw_tau4": rep.raw_tau,
                                                 "bound_quality": rep.bound_quality})
    raise ArgumentError(f"unknown counterexample {name!r}; choose ou333, s224 or cluster4")
