"""Pure and mixed states on multipartite Hilbert spaces.

Basis convention: amplitudes are stored in row-major mixed-radix order, so the
first subsystem is the most significant digit (``numpy`` C order).  The ket
``|i_0 i_1 ... i_{n-1}>`` lives at ``np.ravel_multi_index((i_0, ...), dims)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, CapacityError, ContractError
from .linalg import MAX_AXIS, as_matrix, eigvalsh, hermiticity_error

NORM_TOL = 1e-10
RENORMALIZE_TOL = 1e-8
TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-9
MAX_PURE_DIM = 2**22


def _dims_tuple(dims) -> tuple[int, ...]:
    try:
        out = tuple(int(d) for d in dims)
    except TypeError as exc:
        raise ArgumentError(f"dims must be a sequence of integers, got {dims!r}") from exc
    if not out or any(d < 1 for d in out):
        raise ArgumentError(f"dims must be a nonempty list of positive integers, got {dims!r}")
    return out


def basis_index(digits, dims) -> int:
    """Flat amplitude index of the basis ket with the given per-subsystem levels."""
    return int(np.ravel_multi_index(tuple(int(x) for x in digits), tuple(dims)))


def basis_digits(index: int, dims) -> tuple[int, ...]:
    return tuple(int(x) for x in np.unravel_index(int(index), tuple(dims)))


@dataclass(frozen=True, eq=False)
class PureState:
    """A normalized state vector together with its subsystem dimensions.

    Vectors whose norm is within 1e-8 of one are renormalized silently;
    anything further off raises :class:`ContractError`.
    """

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = _dims_tuple(self.dims)
        total = math.prod(dims)
        if total > MAX_PURE_DIM:
            raise CapacityError(f"pure state dimension {total} exceeds {MAX_PURE_DIM}")
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != total:
            raise ContractError(f"{amps.size} amplitudes do not match dims {dims} (product {total})")
        if not np.all(np.isfinite(amps)):
            raise ContractError("amplitudes contain non-finite values")
        norm_sq = float(np.vdot(amps, amps).real)
        if abs(norm_sq - 1.0) > RENORMALIZE_TOL:
            raise ContractError(f"state norm^2 = {norm_sq!r} is not 1 (tolerance {RENORMALIZE_TOL:g})")
        if abs(norm_sq - 1.0) > 0.0:
            amps = amps / math.sqrt(norm_sq)
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, dims, vector) -> PureState:
        v = np.asarray(vector, dtype=np.complex128).reshape(-1)
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise ContractError("cannot normalize the zero vector")
        return cls(dims, v / norm)

    @property
    def n(self) -> int:
        return len(self.dims)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def to_density(self) -> DensityMatrix:
        return DensityMatrix(self.dims, np.outer(self.amplitudes, self.amplitudes.conj()), check=False)


class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix with subsystem dims.

    Parameters
    ----------
    dims : sequence of int
        Subsystem dimensions; their product must equal the matrix size.
    matrix : array_like
        The square matrix.
    check : bool
        Validate Hermiticity (1e-9), trace (1e-10) and positivity (-1e-9).
        Internal callers that build reduced states from valid inputs pass
        ``False`` to skip the eigen-decomposition.
    """

    __slots__ = ("dims", "matrix")

    def __init__(self, dims, matrix, check: bool = True):
        dims = _dims_tuple(dims)
        total = math.prod(dims)
        if total > MAX_AXIS:
            raise CapacityError(f"density matrix dimension {total} exceeds {MAX_AXIS}")
        m = as_matrix(matrix) if check else np.asarray(matrix, dtype=np.complex128)
        if m.shape != (total, total):
            raise ContractError(f"matrix shape {m.shape} does not match dims {dims}")
        if check:
            herr = hermiticity_error(m)
            if herr > HERMITIAN_TOL:
                raise ContractError(f"density matrix is not Hermitian (max deviation {herr:.3e})")
            tr = complex(np.trace(m))
            if abs(tr - 1.0) > TRACE_TOL:
                raise ContractError(f"density matrix trace is {tr.real!r}, expected 1")
            lo = float(eigvalsh(m)[-1])
            if lo < -PSD_TOL:
                raise ContractError(f"density matrix has negative eigenvalue {lo:.3e}")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self.dims = dims
        self.matrix = m

    @property
    def n(self) -> int:
        return len(self.dims)

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.dims})"


@dataclass(frozen=True)
class PartitionSpec:
    """Ordered grouping of subsystem indices into parties, e.g. ``0 | 1 | 2,3``."""

    parties: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        parties = tuple(tuple(int(i) for i in p) for p in self.parties)
        if len(parties) < 2:
            raise ArgumentError("a partition needs at least two parties")
        flat = [i for p in parties for i in p]
        if any(not p for p in parties):
            raise ArgumentError("partition contains an empty party")
        if any(i < 0 for i in flat):
            raise ArgumentError("partition indices must be nonnegative")
        if len(set(flat)) != len(flat):
            raise ArgumentError(f"partition parties overlap: {parties}")
        object.__setattr__(self, "parties", parties)

    @classmethod
    def parse(cls, text: str) -> PartitionSpec:
        """Parse ``"0|1|2,3"`` (parties separated by ``|``, members by ``,``)."""
        try:
            parties = [tuple(int(x) for x in chunk.split(",")) for chunk in text.split("|")]
        except ValueError as exc:
            raise ArgumentError(f"cannot parse partition {text!r}") from exc
        return cls(tuple(parties))

    @classmethod
    def bipartite(cls, first, n: int) -> PartitionSpec:
        """``first`` against every remaining subsystem of an ``n``-partite system."""
        first = tuple(first)
        return cls((first, tuple(i for i in range(n) if i not in first)))

    def check(self, n: int) -> None:
        bad = [i for p in self.parties for i in p if i >= n]
        if bad:
            raise ArgumentError(f"partition index {bad[0]} out of range for {n} subsystems")

    def covers(self, n: int) -> bool:
        return sorted(i for p in self.parties for i in p) == list(range(n))

    def __str__(self) -> str:
        return "|".join(",".join(str(i) for i in p) for p in self.parties)


@dataclass(frozen=True)
class CavityParams:
    """Initial amplitudes and dimensionless time of the two cavity-reservoir pairs."""

    alpha: float
    beta: float | None = None
    kappa_t: float = 0.0

    def __post_init__(self):
        alpha = float(self.alpha)
        beta = math.sqrt(max(0.0, 1.0 - alpha * alpha)) if self.beta is None else float(self.beta)
        if abs(alpha * alpha + beta * beta - 1.0) > 1e-12:
            raise ArgumentError(f"alpha^2 + beta^2 must be 1, got {alpha * alpha + beta * beta!r}")
        if not (self.kappa_t >= 0.0):
            raise ArgumentError(f"kappa_t must be nonnegative, got {self.kappa_t!r}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "kappa_t", float(self.kappa_t))

    @property
    def xi(self) -> float:
        return math.exp(-self.kappa_t / 2.0)

    @property
    def chi(self) -> float:
        return math.sqrt(-math.expm1(-self.kappa_t))


def _keep_list(keep, n: int) -> list[int]:
    keep = sorted(int(i) for i in keep)
    if not keep:
        raise ArgumentError("keep set must be nonempty")
    if len(set(keep)) != len(keep) or keep[0] < 0 or keep[-1] >= n:
        raise ArgumentError(f"invalid keep set {keep} for {n} subsystems")
    return keep


def reduced_matrix(psi: PureState, keep) -> np.ndarray:
    """Reduced density matrix of a pure state on ``keep`` (sorted), as an array."""
    keep = _keep_list(keep, psi.n)
    rest = [i for i in range(psi.n) if i not in keep]
    dk = math.prod(psi.dims[i] for i in keep)
    m = np.transpose(psi.tensor(), keep + rest).reshape(dk, -1)
    return m @ m.conj().T


def partial_trace(rho, keep) -> DensityMatrix:
    """Trace out every subsystem not in ``keep``.

    Accepts a :class:`DensityMatrix` or a :class:`PureState`; the kept
    subsystems stay in their original relative order.
    """
    if isinstance(rho, PureState):
        keep = _keep_list(keep, rho.n)
        return DensityMatrix([rho.dims[i] for i in keep], reduced_matrix(rho, keep), check=False)
    keep = _keep_list(keep, rho.n)
    if len(keep) == rho.n:
        return rho
    n = rho.n
    dims = rho.dims
    rest = [i for i in range(n) if i not in keep]
    t = rho.matrix.reshape(dims + dims)
    t = np.transpose(t, keep + rest + [n + i for i in keep] + [n + i for i in rest])
    dk = math.prod(dims[i] for i in keep)
    dr = math.prod(dims[i] for i in rest)
    t = t.reshape(dk, dr, dk, dr)
    return DensityMatrix([dims[i] for i in keep], np.einsum("ajbj->ab", t), check=False)


def _grouping_order(partition: PartitionSpec, dims) -> list[int]:
    partition.check(len(dims))
    if not partition.covers(len(dims)):
        raise ArgumentError("grouping must cover every subsystem; trace out the others first")
    return [i for p in partition.parties for i in p]


def group_parties(state, partition: PartitionSpec):
    """Merge the members of each party into a single composite subsystem.

    Subsystems are permuted into party order, so the result has one factor
    per party whose dimension is the product of its members.
    """
    order = _grouping_order(partition, state.dims)
    new_dims = [math.prod(state.dims[i] for i in p) for p in partition.parties]
    if isinstance(state, PureState):
        amps = np.transpose(state.tensor(), order).reshape(-1)
        return PureState(new_dims, amps)
    n = state.n
    t = state.matrix.reshape(state.dims + state.dims)
    t = np.transpose(t, order + [n + i for i in order])
    total = math.prod(state.dims)
    return DensityMatrix(new_dims, t.reshape(total, total), check=False)


def ungroup_parties(state, partition: PartitionSpec, dims):
    """Inverse of :func:`group_parties` given the original subsystem ``dims``."""
    dims = _dims_tuple(dims)
    order = _grouping_order(partition, dims)
    inverse = list(np.argsort(order))
    permuted = [dims[i] for i in order]
    if isinstance(state, PureState):
        amps = np.transpose(state.amplitudes.reshape(permuted), inverse).reshape(-1)
        return PureState(dims, amps)
    n = len(dims)
    t = state.matrix.reshape(permuted + permuted)
    t = np.transpose(t, inverse + [n + i for i in inverse])
    total = math.prod(dims)
    return DensityMatrix(dims, t.reshape(total, total), check=False)


def product_state(*states: PureState) -> PureState:
    amps = states[0].amplitudes
    dims = list(states[0].dims)
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
        dims += list(s.dims)
    return PureState(dims, amps)


def _from_terms(dims, terms) -> PureState:
    v = np.zeros(math.prod(dims), dtype=np.complex128)
    for digits, amp in terms:
        v[basis_index(digits, dims)] += amp
    return PureState.from_unnormalized(dims, v)


def w_state(n: int) -> PureState:
    """Equal superposition of the ``n`` single-excitation kets of ``n`` qubits."""
    if n < 2:
        raise ArgumentError(f"W state needs n >= 2, got {n}")
    v = np.zeros(2**n, dtype=np.complex128)
    v[[1 << (n - 1 - i) for i in range(n)]] = 1.0 / math.sqrt(n)
    return PureState((2,) * n, v)


def ghz_state(n: int) -> PureState:
    """(|0...0> + |1...1>)/sqrt(2).  Only used as a test fixture for chains."""
    if n < 2:
        raise ArgumentError(f"GHZ state needs n >= 2, got {n}")
    v = np.zeros(2**n, dtype=np.complex128)
    v[0] = v[-1] = 1.0 / math.sqrt(2.0)
    return PureState((2,) * n, v)


def bell_state() -> PureState:
    return ghz_state(2)


def cavity_state(p: CavityParams) -> PureState:
    """Output state of two cavity-reservoir pairs, subsystem order (c1, r1, c2, r2).

    alpha|0000> + beta (xi|10> + chi|01>)_{c1 r1} (xi|10> + chi|01>)_{c2 r2}
    """
    pair = np.array([0.0, p.chi, p.xi, 0.0], dtype=np.complex128)
    v = p.beta * np.kron(pair, pair)
    v[0] += p.alpha
    return PureState.from_unnormalized((2, 2, 2, 2), v)


def cluster4() -> PureState:
    return _from_terms((2, 2, 2, 2), [((0, 0, 0, 0), 1), ((1, 0, 0, 1), 1), ((0, 1, 1, 0), 1), ((1, 1, 1, 1), -1)])


def s224() -> PureState:
    """The four-qubit cluster state viewed as 2 x 2 x 4 with the last two qubits merged."""
    return _from_terms((2, 2, 4), [((0, 0, 0), 1), ((1, 0, 1), 1), ((0, 1, 2), 1), ((1, 1, 3), -1)])


def ou333() -> PureState:
    """Totally antisymmetric state of three qutrits (levels 1..3 written as 0..2)."""
    terms = [((0, 1, 2), 1), ((0, 2, 1), -1), ((1, 2, 0), 1), ((1, 0, 2), -1), ((2, 0, 1), 1), ((2, 1, 0), -1)]
    return _from_terms((3, 3, 3), terms)


def s422(theta: float) -> PureState:
    """(a|000> + b|110> + a|201> + b|311>)/sqrt(2) on 4 x 2 x 2 with a = cos t, b = sin t."""
    a, b = math.cos(theta), math.sin(theta)
    return _from_terms((4, 2, 2), [((0, 0, 0), a), ((1, 1, 0), b), ((2, 0, 1), a), ((3, 1, 1), b)])


NAMED_STATES = ("bell", "ghz", "w", "cluster4", "s224", "ou333", "s422", "cavity")


def named_state(name: str, **params) -> PureState:
    """Factory for the catalogue states.

    ``ghz`` and ``w`` take ``n``; ``s422`` takes ``theta``; ``cavity`` takes
    ``alpha`` and ``kappa_t``.
    """
    key = name.lower()
    if key == "bell":
        return bell_state()
    if key == "ghz":
        return ghz_state(int(params.get("n", 3)))
    if key == "w":
        return w_state(int(params.get("n", 3)))
    if key == "cluster4":
        return cluster4()
    if key == "s224":
        return s224()
    if key == "ou333":
        return ou333()
    if key == "s422":
        return s422(float(params.get("theta", math.pi / 4)))
    if key == "cavity":
        return cavity_state(CavityParams(float(params.get("alpha", 1 / math.sqrt(3))), kappa_t=float(params.get("kappa_t", 0.0))))
    raise ArgumentError(f"unknown state name {name!r}; choose from {', '.join(NAMED_STATES)}")
