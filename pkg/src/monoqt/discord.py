"""Quantum discord over rank-1 projective measurements and the Koashi-Winter EOF.

For a pure state on parties ``a, b, c`` the EOF of ``rho_ac`` equals the
minimum, over measurements on ``b``, of the average entropy of ``a`` given the
outcome.  Only rank-1 projective measurements are searched here, so every
value is an upper bound on the POVM optimum (and hence on the EOF).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ArgumentError, ContractError, UnsupportedError
from .linalg import herm_eig
from .measures import binary_entropy, matrix_entropy, weighted_entropies
from .roof import MAX_PROPOSALS, make_cost, search_rotations
from .states import CavityParams, DensityMatrix, PureState

QUBIT_GRID = 64
REFINE_ITERS = 200
SIMPLEX_TOL = 1e-10
FRAME_STARTS = 2048
FRAME_REFINES = 2
SUPPORT_TOL = 1e-12


@dataclass
class MeasurementSpec:
    """Rank-1 projective measurement on a party of dimension 2 or 4.

    ``kind`` is ``"qubit_angles"`` (``params = (theta, phi)``) or
    ``"unitary_columns"`` (``params`` is empty and the unitary is stored
    directly).  ``frame`` holds the outcome vectors as columns.
    """

    party_dim: int
    kind: str
    params: tuple
    frame: np.ndarray = field(repr=False)

    def projectors(self) -> np.ndarray:
        f = self.frame
        return np.einsum("ik,jk->kij", f, f.conj())


@dataclass
class DiscordResult:
    """Discord D(A|B) with the measurement that attains the reported minimum.

    ``measured_entropy`` is the post-measurement average entropy of the
    unmeasured party; ``discord = measured_entropy - conditional_entropy``.
    ``stable`` records whether local refinement stayed inside the grid cell
    of its starting point (a sign that the grid located the right basin).
    """

    discord: float
    conditional_entropy: float
    measured_entropy: float
    optimal_measurement: MeasurementSpec
    stable: bool = True


def _two_party(rho) -> DensityMatrix:
    if not isinstance(rho, DensityMatrix):
        raise ContractError("expected a DensityMatrix")
    if rho.n != 2:
        raise ArgumentError(f"expected a bipartite state with two subsystems, got dims {rho.dims}")
    return rho


def _party_index(i) -> int:
    if i not in (0, 1):
        raise ArgumentError(f"party index must be 0 or 1, got {i!r}")
    return int(i)


def conditional_entropy(rho_ab: DensityMatrix, b: int = 1) -> float:
    """S(A|B) = S(AB) - S(B) with ``b`` the index of the conditioning party."""
    rho_ab = _two_party(rho_ab)
    b = _party_index(b)
    t = rho_ab.matrix.reshape(rho_ab.dims + rho_ab.dims)
    rho_b = np.einsum("ajak->jk", t) if b == 1 else np.einsum("jaka->jk", t)
    return matrix_entropy(rho_ab.matrix) - matrix_entropy(rho_b)


def _outcome_tensor(rho_ab: DensityMatrix, measured: int) -> np.ndarray:
    # R[j, l, a, a']: block of rho indexed by the measured party's (row, col)
    da, db = rho_ab.dims
    t = rho_ab.matrix.reshape(da, db, da, db)
    return np.transpose(t, (1, 3, 0, 2)) if measured == 1 else np.transpose(t, (0, 2, 1, 3))


def _measured_entropy(r: np.ndarray, frames: np.ndarray) -> np.ndarray:
    # frames (K, d, d) with outcome vectors as columns; average entropy per frame
    k, d, _ = frames.shape
    vecs = frames.transpose(0, 2, 1).reshape(k * d, d)
    sig = np.einsum("nj,jlab,nl->nab", vecs.conj(), r, vecs, optimize=True)
    return weighted_entropies(sig).reshape(k, d).sum(axis=1)


def qubit_frame(theta, phi) -> np.ndarray:
    """Orthonormal outcome vectors (columns) for Bloch direction (theta, phi)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    e = np.exp(1j * phi)
    f = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    f[..., 0, 0] = c
    f[..., 1, 0] = e * s
    f[..., 0, 1] = -e.conj() * s
    f[..., 1, 1] = c
    return f


def haar_frames(count: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar unitaries of size ``d`` (Gram-Schmidt on Ginibre matrices)."""
    z = rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))
    for k in range(d):
        col = z[:, :, k]
        for _ in range(2):
            if k:
                prev = z[:, :, :k]
                col = col - np.einsum("bik,bk->bi", prev, np.einsum("bik,bi->bk", prev.conj(), col))
        z[:, :, k] = col / np.linalg.norm(col, axis=1)[:, None]
    return z


def _weighted_qubit(a00: float, a11: float, a01: complex) -> float:
    # Tr(g) S(g / Tr g) for one 2x2 block, same branch structure as weighted_entropies
    w = a00 + a11
    det = max(a00 * a11 - (a01.real * a01.real + a01.imag * a01.imag), 0.0)
    hi = 0.5 * (w + math.sqrt(max(w * w - 4.0 * det, 0.0)))
    if hi <= 0.0:
        return 0.0
    lo = det / hi
    out = w * math.log2(w) - hi * math.log2(hi) - (lo * math.log2(lo) if lo > 0.0 else 0.0)
    return max(out, 0.0)


def _qubit_objective(r):
    # average entropy for the frame qubit_frame(theta, phi); the two outcome
    # blocks are c^2 R00 + s^2 R11 + cs (e R01 + conj(e) R10) and rho_a minus it
    r00, r11, r01, r10 = r[0, 0], r[1, 1], r[0, 1], r[1, 0]
    total = r00 + r11
    if r00.shape != (2, 2):
        sig = np.empty((2,) + r00.shape, dtype=np.complex128)

        def f(x):
            c, s = math.cos(0.5 * x[0]), math.sin(0.5 * x[0])
            e = complex(math.cos(x[1]), math.sin(x[1]))
            sig[0] = (c * c) * r00 + (s * s) * r11 + (c * s) * (e * r01 + e.conjugate() * r10)
            sig[1] = total - sig[0]
            return float(weighted_entropies(sig).sum())

        return f
    # scalar arithmetic for a qubit unmeasured party; numpy call overhead dominates otherwise
    t00, t11, t01 = float(total[0, 0].real), float(total[1, 1].real), complex(total[0, 1])
    p, q = r00.tolist(), r11.tolist()
    y, z = r01.tolist(), r10.tolist()

    def f(x):
        c, s = math.cos(0.5 * x[0]), math.sin(0.5 * x[0])
        e = complex(math.cos(x[1]), math.sin(x[1]))
        cc, ss, cs, ec = c * c, s * s, c * s, e.conjugate()
        a00 = (cc * p[0][0] + ss * q[0][0] + cs * (e * y[0][0] + ec * z[0][0])).real
        a11 = (cc * p[1][1] + ss * q[1][1] + cs * (e * y[1][1] + ec * z[1][1])).real
        a01 = cc * p[0][1] + ss * q[0][1] + cs * (e * y[0][1] + ec * z[0][1])
        return _weighted_qubit(a00, a11, a01) + _weighted_qubit(t00 - a00, t11 - a11, t01 - a01)

    return f


def _canonical_angles(theta: float, phi: float) -> tuple[float, float]:
    # (theta, phi) and (2 pi - theta, phi + pi) give the same projectors
    theta = float(theta) % (2.0 * math.pi)
    if theta > math.pi:
        theta, phi = 2.0 * math.pi - theta, phi + math.pi
    return theta, float(phi) % (2.0 * math.pi)


def _minimize_qubit(r, grid, refine_iters):
    n = max(2, int(grid))
    th, ph = np.meshgrid(np.linspace(0.0, math.pi, n), np.linspace(0.0, 2.0 * math.pi, n, endpoint=False), indexing="ij")
    vals = _measured_entropy(r, qubit_frame(th, ph).reshape(-1, 2, 2))
    idx = int(np.argmin(vals))
    x0 = np.array([th.reshape(-1)[idx], ph.reshape(-1)[idx]])
    best_x, best = x0, float(vals[idx])
    if refine_iters > 0:
        f = _qubit_objective(r)
        res = minimize(
            f, x0, method="Nelder-Mead",
            options={"maxiter": int(refine_iters), "xatol": SIMPLEX_TOL, "fatol": SIMPLEX_TOL,
                     "initial_simplex": np.array([x0, x0 + [math.pi / n, 0.0], x0 + [0.0, 2 * math.pi / n]])},
        )
        if res.fun < best:
            best_x, best = np.asarray(res.x, dtype=float), float(res.fun)
    # the refinement stayed inside the grid cell it started from
    dphi = abs((best_x[1] - x0[1] + math.pi) % (2.0 * math.pi) - math.pi)
    stable = bool(abs(best_x[0] - x0[0]) <= math.pi / (n - 1) and dphi <= 2.0 * math.pi / n)
    theta, phi = _canonical_angles(best_x[0], best_x[1])
    spec = MeasurementSpec(2, "qubit_angles", (theta, phi), qubit_frame(theta, phi))
    return best, spec, stable


def _frame_rows(rows: np.ndarray, frames: np.ndarray) -> np.ndarray:
    # outcome k of frame U conditions the rows on <u_k|: sum_j conj(U_jk) rows_j
    return np.einsum("bjk,jax->bkax", frames.conj(), rows)


def _minimize_frame(rows, starts, refines, seed, max_proposals=MAX_PROPOSALS):
    # rows (d, da, dx): the state conditioned on each basis vector of the
    # measured party.  Seeded Haar frames supply starts; random two-column
    # rotations then refine the best few, which is the roof search over the
    # ensembles a projective measurement can induce.
    d, da, dx = rows.shape
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), d])))
    frames = haar_frames(max(1, int(starts)), d, rng)
    out = _frame_rows(rows, frames).reshape(-1, da, dx)
    vals = weighted_entropies(out @ out.conj().transpose(0, 2, 1)).reshape(-1, d).sum(axis=1)
    order = np.argsort(vals)[: max(1, int(refines))]
    cost = make_cost("EOF", (da, dx))
    best, frame = math.inf, None
    for k in order:
        value, u, _ = search_rotations(rows.reshape(d, -1), cost, d, rng, frames[k].conj().T, max_proposals)
        if value < best:
            best, frame = value, u.conj().T
    return best, MeasurementSpec(d, "unitary_columns", (), frame), False


def _purified_rows(rho_ab: DensityMatrix, measured: int) -> np.ndarray:
    # rows[j][a, e] of a purification sum_e sqrt(l_e) |v_e>|e>, split on the measured index j
    lam, vecs = herm_eig(rho_ab.matrix)
    keep = lam > SUPPORT_TOL
    lam, vecs = lam[keep], vecs[:, keep]
    da, db = rho_ab.dims
    t = (vecs * np.sqrt(lam)).reshape(da, db, -1)
    return np.transpose(t, (1, 0, 2)) if measured == 1 else t


def measured_entropy(rho_ab: DensityMatrix, measured_party: int = 1, grid: int = QUBIT_GRID,
                     refine_iters: int = REFINE_ITERS, starts: int = FRAME_STARTS,
                     refines: int = FRAME_REFINES, seed: int = 0, max_proposals: int = MAX_PROPOSALS):
    """Minimum over projective measurements of the post-measurement entropy.

    Returns ``(value, MeasurementSpec, stable)``.
    """
    rho_ab = _two_party(rho_ab)
    measured = _party_index(measured_party)
    d = rho_ab.dims[measured]
    r = _outcome_tensor(rho_ab, measured)
    if d == 2:
        return _minimize_qubit(r, grid, refine_iters)
    if d == 4:
        return _minimize_frame(_purified_rows(rho_ab, measured), starts, refines, seed, max_proposals)
    raise UnsupportedError(f"measured party dimension {d} is not supported (only 2 or 4)")


def evaluate_measurement(rho_ab: DensityMatrix, measured_party: int, frame) -> float:
    """Post-measurement average entropy for an explicit outcome frame (columns)."""
    rho_ab = _two_party(rho_ab)
    measured = _party_index(measured_party)
    f = np.asarray(frame, dtype=np.complex128)
    return float(_measured_entropy(_outcome_tensor(rho_ab, measured), f[None])[0])


def discord(rho_ab: DensityMatrix, measured_party: int = 1, grid: int = QUBIT_GRID,
            refine_iters: int = REFINE_ITERS, starts: int = FRAME_STARTS,
            refines: int = FRAME_REFINES, seed: int = 0, max_proposals: int = MAX_PROPOSALS) -> DiscordResult:
    """Discord of ``rho_ab`` with the measurement on ``measured_party``.

    Parameters
    ----------
    grid : int
        Bloch-angle grid size per axis for a qubit measured party.
    refine_iters : int
        Nelder-Mead iteration budget for the local refinement.
    starts, refines, seed, max_proposals : int
        For a 4-dimensional measured party: number of seeded Haar frames, how
        many of the best are refined by two-column rotations, and the proposal
        cap per refinement.  This path is experimental.

    Notes
    -----
    Restricting to projective measurements makes the result an upper bound on
    the POVM discord.
    """
    value, spec, stable = measured_entropy(rho_ab, measured_party, grid, refine_iters, starts, refines, seed,
                                          max_proposals)
    cond = conditional_entropy(rho_ab, measured_party)
    return DiscordResult(max(0.0, value - cond), cond, value, spec, stable)


@dataclass
class KoashiWinterResult:
    eof: float
    support_rank: int
    measurement: MeasurementSpec | None
    exact: bool


def _group(psi: PureState, party) -> list[int]:
    return [int(party)] if np.isscalar(party) else [int(i) for i in party]


def koashi_winter(psi: PureState, a, b, c, grid: int = QUBIT_GRID, refine_iters: int = REFINE_ITERS,
                  starts: int = FRAME_STARTS, refines: int = FRAME_REFINES, seed: int = 0,
                  max_proposals: int = MAX_PROPOSALS) -> KoashiWinterResult:
    """EOF of ``rho_ac`` by minimizing the entropy of ``a`` after measuring ``b``.

    ``b`` is first compressed onto the support of its marginal: support rank
    1 means rho_ac is pure (EOF = S(a)), rank 2 a qubit measurement, rank 3 or 4 a measurement
    on a 4-dimensional frame (rank 3 is zero-padded).  ``exact`` is set only
    for a qubit support whose grid minimum survived refinement.
    """
    if not isinstance(psi, PureState):
        raise ContractError("Koashi-Winter needs a pure state on the parties a, b, c")
    ga, gb, gc = _group(psi, a), _group(psi, b), _group(psi, c)
    order = ga + gb + gc
    if sorted(order) != list(range(psi.n)):
        raise ArgumentError("parties a, b, c must partition all subsystems")
    da = math.prod(psi.dims[i] for i in ga)
    db = math.prod(psi.dims[i] for i in gb)
    t = np.transpose(psi.tensor(), order).reshape(da, db, -1)
    # Schmidt decomposition of b against (a, c) through the smaller Gram matrix
    m = np.transpose(t, (1, 0, 2)).reshape(db, -1)
    if db <= m.shape[1]:
        w, v = herm_eig(m @ m.conj().T)
        keep = w > SUPPORT_TOL
        basis = v[:, keep]
    else:
        w, v = herm_eig(m.conj().T @ m)
        keep = w > SUPPORT_TOL
        basis = (m @ v[:, keep]) / np.sqrt(w[keep])
    rank = int(keep.sum())
    if rank <= 1:
        # b is in a product state, so rho_ac is pure and its EOF is S(a)
        ma = t.reshape(da, -1)
        return KoashiWinterResult(matrix_entropy(ma @ ma.conj().T), rank, None, True)
    if rank > 4:
        raise UnsupportedError(f"measured party support has rank {rank}; only up to 4 is supported")
    comp = np.einsum("jb,ajx->bax", basis.conj(), t)
    if rank == 2:
        flat = np.transpose(comp, (1, 0, 2)).reshape(2 * da, -1)
        rho_ab = DensityMatrix((da, 2), flat @ flat.conj().T, check=False)
        value, spec, stable = _minimize_qubit(_outcome_tensor(rho_ab, 1), grid, refine_iters)
        return KoashiWinterResult(value, rank, spec, stable)
    if rank == 3:
        comp = np.concatenate([comp, np.zeros((1,) + comp.shape[1:], dtype=comp.dtype)])
    value, spec, _ = _minimize_frame(comp, starts, refines, seed, max_proposals)
    return KoashiWinterResult(value, rank, spec, False)


def koashi_winter_eof(psi: PureState, a, b, c, **budget) -> float:
    """Upper bound on E_f(rho_ac) for a pure ``psi`` on parties ``a, b, c``.

    Parties are subsystem indices (int) or index groups (sequence of int).
    """
    return koashi_winter(psi, a, b, c, **budget).eof


@dataclass(frozen=True)
class CavityClosedForms:
    eta1: float
    eta2: float
    eta3: float
    eta4: float
    eof_c1_r1r2: float
    eof_c1_c2r1: float
    eof_r1_c1c2: float
    eof_r1_r2c1: float


def _eta(z: float) -> float:
    # (1 - sqrt(1 - z)) / 2 written without cancellation
    z = min(1.0, max(0.0, z))
    return 0.5 * z / (1.0 + math.sqrt(1.0 - z))


def cavity_closed_forms(p: CavityParams) -> CavityClosedForms:
    """Closed-form EOFs of the three-party cavity-reservoir reductions."""
    b2, x2, c2 = p.beta**2, p.xi**2, p.chi**2
    e1 = _eta(4.0 * b2 * x2 * c2)
    e2 = _eta(4.0 * b2 * x2 * (b2 + x2 - 2.0 * b2 * x2))
    e3 = _eta(4.0 * b2 * x2 * c2)
    e4 = _eta(4.0 * b2 * c2 * (b2 + c2 - 2.0 * b2 * c2))
    return CavityClosedForms(e1, e2, e3, e4, binary_entropy(e1), binary_entropy(e2), binary_entropy(e3), binary_entropy(e4))
