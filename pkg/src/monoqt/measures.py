"""Entropies, concurrences and the two-qubit EOF curve with its derivatives.

All logarithms are base 2 (ebits).  The curve is parameterized by the squared
concurrence ``x = C**2`` through ``s = sqrt(1 - x)``; wherever ``1 - s`` is
needed it is formed as ``x / (1 + s)`` so small ``x`` keeps full precision.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError
from .linalg import PSD_CLAMP, eigvalsh, eigvalsh_2x2, herm_eig_batch, wootters_lambdas, wootters_lambdas_batch
from .states import DensityMatrix, PartitionSpec, PureState, _keep_list

LN2 = math.log(2.0)
LN4 = math.log(4.0)
LN16 = math.log(16.0)
DOMAIN_BAND = 1e-12
SERIES_CUTOFF = 0.1
_SERIES_TERMS = 16


class WoottersPoint(NamedTuple):
    """A point ``(C**2, E_f)`` on the two-qubit EOF curve."""

    c_sq: float
    eof: float


class DerivativeBundle(NamedTuple):
    """First and second derivative of E_f at ``at`` with respect to ``variable``.

    ``factor`` is the positive prefactor that multiplies the bracketed term in
    the closed form (``1 / (2 ln16 x (1-x)^{3/2})`` for ``x``, and
    ``1 / (ln4 (1-C^2)^{3/2})`` for ``C``); it is ``inf`` at the endpoint
    where it diverges.
    """

    first: float
    second: float
    at: float
    variable: str
    factor: float


def _clamp_unit(p: float, name: str = "p") -> float:
    p = float(p)
    if not (-DOMAIN_BAND <= p <= 1.0 + DOMAIN_BAND):
        raise ArgumentError(f"{name} = {p!r} is outside [0, 1]")
    return min(1.0, max(0.0, p))


def binary_entropy(p: float) -> float:
    """h(p) = -p log2 p - (1-p) log2 (1-p); exactly 0 at both endpoints."""
    p = _clamp_unit(p)
    if p == 0.0 or p == 1.0:
        return 0.0
    q = 1.0 - p
    return -(p * math.log2(p) + q * math.log2(q))


def entropy_of_spectrum(w) -> float:
    """Shannon entropy in bits of a spectrum, after the 1e-10 clamp."""
    w = np.asarray(w, dtype=float)
    if w.size and w.min() < -PSD_CLAMP:
        raise ArgumentError(f"spectrum has negative entry {w.min():.3e}")
    w = w[w > 0.0]
    return float(-np.sum(w * np.log2(w))) + 0.0


def _matrix_of(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)


def matrix_entropy(m: np.ndarray) -> float:
    """Von Neumann entropy of a density matrix given as an array."""
    if m.shape == (2, 2):
        hi, lo = eigvalsh_2x2(m)
        return entropy_of_spectrum([float(hi), float(lo)])
    return entropy_of_spectrum(eigvalsh(m))


def von_neumann_entropy(rho) -> float:
    """S(rho) = -Tr rho log2 rho with 0 log 0 = 0.

    ``rho`` may be a :class:`DensityMatrix` or a square array; arrays are
    validated as Hermitian by the eigensolver.
    """
    return matrix_entropy(_matrix_of(rho))


def _two_qubit_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        if rho.dims != (2, 2):
            raise ArgumentError(f"two-qubit routine needs dims (2, 2), got {rho.dims}")
        return rho.matrix
    m = np.asarray(rho, dtype=np.complex128)
    if m.shape != (4, 4):
        raise ArgumentError(f"two-qubit routine needs a 4x4 matrix, got shape {m.shape}")
    return m


def concurrence_two_qubit(rho) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4) of a two-qubit state."""
    lam = wootters_lambdas(_two_qubit_matrix(rho))
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def concurrence_batch(stack) -> np.ndarray:
    """Concurrence of every 4x4 matrix in a ``(B, 4, 4)`` stack."""
    lam = wootters_lambdas_batch(stack)
    return np.clip(lam[:, 0] - lam[:, 1] - lam[:, 2] - lam[:, 3], 0.0, 1.0)


def _bipartite_keep(psi: PureState, partition: PartitionSpec | None) -> list[int]:
    if partition is None:
        return [0]
    if len(partition.parties) != 2:
        raise ArgumentError(f"expected a bipartite partition, got {partition}")
    partition.check(psi.n)
    if not partition.covers(psi.n):
        raise ArgumentError(f"partition {partition} does not cover all {psi.n} subsystems of a pure state")
    return _keep_list(partition.parties[0], psi.n)


def _gram_marginal(psi: PureState, keep) -> np.ndarray:
    # The nonzero spectrum is shared by both marginals; build the smaller one.
    keep = _keep_list(keep, psi.n)
    rest = [i for i in range(psi.n) if i not in keep]
    dk = math.prod(psi.dims[i] for i in keep)
    m = np.transpose(psi.tensor(), keep + rest).reshape(dk, -1)
    return m @ m.conj().T if dk <= m.shape[1] else m.T @ m.conj()


def marginal_purity(psi: PureState, keep) -> float:
    r = _gram_marginal(psi, keep)
    return float(np.real(np.vdot(r, r)))


def marginal_entropy(psi: PureState, keep) -> float:
    return matrix_entropy(_gram_marginal(psi, keep))


def pure_concurrence_sq(psi: PureState, partition: PartitionSpec | None = None) -> float:
    """C^2 = 2 (1 - Tr rho_A^2) across a bipartition of a pure state (default A1 | rest)."""
    keep = _bipartite_keep(psi, partition)
    return max(0.0, 2.0 * (1.0 - marginal_purity(psi, keep)))


def eof_pure(psi: PureState, partition: PartitionSpec | None = None) -> float:
    """Entanglement entropy S(rho_A) across a bipartition of a pure state."""
    return marginal_entropy(psi, _bipartite_keep(psi, partition))


def _eof_from_x(x: float) -> float:
    if x <= 0.0:
        return 0.0
    s = math.sqrt(1.0 - x)
    p = 0.5 * (1.0 + s)
    q = 0.5 * x / (1.0 + s)
    return min(1.0, -(p * math.log2(p) + q * math.log2(q)))


def eof_curve(c_sq: float) -> WoottersPoint:
    """E_f = h((1 + sqrt(1 - C^2)) / 2) for squared concurrence ``c_sq`` in [0, 1]."""
    x = _clamp_unit(c_sq, "c_sq")
    return WoottersPoint(x, _eof_from_x(x))


def eof_of_c_sq(x) -> np.ndarray:
    """Vectorized EOF curve; inputs are clipped to [0, 1]."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    s = np.sqrt(1.0 - x)
    p = 0.5 * (1.0 + s)
    q = 0.5 * x / (1.0 + s)
    with np.errstate(divide="ignore", invalid="ignore"):
        e = -(p * np.log2(p) + np.where(q > 0.0, q * np.log2(np.where(q > 0.0, q, 1.0)), 0.0))
    return np.clip(e, 0.0, 1.0)


def eof_curve_inverse(eof: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Squared concurrence whose EOF equals ``eof``, found by bisection.

    Bisection is used because the slope diverges at 0; the loop stops once
    the residual is at most ``tol`` or after ``max_iter`` halvings.
    """
    e = _clamp_unit(eof, "eof")
    if e == 0.0 or e == 1.0:
        return e
    lo, hi = 0.0, 1.0
    mid = 0.5
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r = _eof_from_x(mid) - e
        if abs(r) <= tol:
            break
        if r < 0.0:
            lo = mid
        else:
            hi = mid
    return mid


def eof_two_qubit(rho) -> float:
    """Wootters EOF of a two-qubit (possibly mixed) state."""
    c = concurrence_two_qubit(rho)
    return _eof_from_x(c * c)


def _log_ratio(s: float, x: float) -> float:
    # ln((1 + s) / (1 - s)) = 2 atanh(s), with 1 - s = x / (1 + s)
    return math.log((1.0 + s) ** 2 / x)


def _series(s: float, coef) -> float:
    s2 = s * s
    total, term = 0.0, 1.0
    for k in range(1, _SERIES_TERMS + 1):
        total += coef(k) * term
        term *= s2
    return total


def eof_derivatives(at: float, variable: str = "x") -> DerivativeBundle:
    """Closed-form first and second derivatives of E_f.

    Parameters
    ----------
    at : float
        Evaluation point in [0, 1]; it is ``x = C^2`` or ``C`` depending on
        ``variable``.
    variable : {"x", "C"}

    Notes
    -----
    The second derivatives lose precision near ``s = sqrt(1 - x) = 0``
    through cancellation, so below ``s = 0.1`` the power series in ``s^2``
    is used instead.  At the open endpoints ``x -> 0`` (``C -> 0``) the
    second derivative is returned as ``-inf`` (``+inf``).
    """
    if variable not in ("x", "C"):
        raise ArgumentError(f"variable must be 'x' or 'C', got {variable!r}")
    t = _clamp_unit(at, "at")
    x = t if variable == "x" else t * t
    s = math.sqrt(1.0 - x)
    if variable == "x":
        if x == 0.0:
            return DerivativeBundle(math.inf, -math.inf, t, "x", math.inf)
        factor = math.inf if s == 0.0 else 1.0 / (2.0 * LN16 * x * s**3)
        if s < SERIES_CUTOFF:
            # atanh(s)/s = sum s^{2k}/(2k+1); (s/x - atanh s)/s^3 = sum 2k/(2k+1) s^{2k-2}
            first = 2.0 / LN16 * _series(s, lambda k: 1.0 / (2 * k - 1))
            second = -_series(s, lambda k: 2.0 * k / (2 * k + 1)) / LN16
        else:
            lr = _log_ratio(s, x)
            first = lr / (s * LN16)
            second = -(s / x - 0.5 * lr) / (LN16 * s**3)
        return DerivativeBundle(first, second, t, "x", factor)
    c = t
    if c == 0.0:
        return DerivativeBundle(0.0, math.inf, t, "C", math.inf)
    factor = math.inf if s == 0.0 else 1.0 / (LN4 * s**3)
    if s < SERIES_CUTOFF:
        first = 2.0 * c / LN4 * _series(s, lambda k: 1.0 / (2 * k - 1))
        second = 2.0 / LN4 * _series(s, lambda k: 1.0 / (2 * k + 1))
    else:
        lr = _log_ratio(s, x)
        first = c * lr / (s * LN4)
        second = 2.0 * (0.5 * lr - s) / (LN4 * s**3)
    return DerivativeBundle(first, second, t, "C", factor)


def weighted_entropies(g: np.ndarray) -> np.ndarray:
    """``Tr(g) * S(g / Tr g)`` for a stack of unnormalized PSD matrices ``(K, d, d)``.

    Zero matrices contribute 0.  The 2x2 case uses the closed-form spectrum.
    """
    k, d, _ = g.shape
    w = np.einsum("kii->k", g).real
    if d == 1:
        return np.zeros(k)
    if d == 2:
        det = np.maximum(g[:, 0, 0].real * g[:, 1, 1].real - np.abs(g[:, 0, 1]) ** 2, 0.0)
        disc = np.sqrt(np.maximum(w * w - 4.0 * det, 0.0))
        hi = 0.5 * (w + disc)
        lo = det / np.maximum(hi, 1e-300)
        lam = np.stack([hi, lo], axis=-1)
    else:
        lam = np.maximum(herm_eig_batch(0.5 * (g + g.conj().transpose(0, 2, 1))).eigenvalues, 0.0)
    t = lam * np.log2(np.maximum(lam, 1e-300))
    return np.maximum(w * np.log2(np.maximum(w, 1e-300)) - t.sum(axis=-1), 0.0)
