"""Dense complex linear algebra for small matrices.

Matrices are plain ``numpy.complex128`` arrays.  The Hermitian eigensolver is a
cyclic Jacobi iteration, which is plenty for the dimensions handled here
(at most 64 per factor) and keeps the results independent of LAPACK builds.
"""

import math
from typing import NamedTuple

import numpy as np

from .errors import CapacityError, ContractError, NotPSDError

MAX_AXIS = 4096
HERMITIAN_TOL = 1e-9
PSD_CLAMP = 1e-10
JACOBI_TOL = 1e-14
SUPPORT_TOL = 1e-14
_MAX_SWEEPS = 100

SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)


class EigenSystem(NamedTuple):
    """Eigenvalues (descending) and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite 2-D complex array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ContractError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractError("matrix has non-finite entries")
    return m


def _check_axes(rows: int, cols: int) -> None:
    if rows > MAX_AXIS or cols > MAX_AXIS:
        raise CapacityError(f"matrix of shape ({rows}, {cols}) exceeds {MAX_AXIS} entries per axis")


def kron(a, b) -> np.ndarray:
    """Kronecker product with the capacity guard applied before allocation."""
    a = as_matrix(a)
    b = as_matrix(b)
    _check_axes(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])
    return np.kron(a, b)


def hermiticity_error(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def _square_hermitian(h) -> np.ndarray:
    m = as_matrix(h)
    if m.shape[0] != m.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {m.shape}")
    _check_axes(*m.shape)
    err = hermiticity_error(m)
    if err > HERMITIAN_TOL:
        raise ContractError(f"matrix is not Hermitian (max |H - H^dagger| = {err:.3e})")
    return 0.5 * (m + m.conj().T)


def _rotation(app: float, aqq: float, apq: complex) -> tuple[float, float, complex]:
    # Phase-align the pivot to a real value, then take the real symmetric
    # Jacobi rotation that annihilates it.  Returns (c, s, conj(phase)).
    mag = abs(apq)
    theta = (aqq - app) / (2.0 * mag)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    return c, t * c, (apq / mag).conjugate()


def _jacobi_single(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Scalar-pivot variant of _jacobi for one matrix; same rotations.
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = max(1.0, float(np.linalg.norm(a)))
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(_MAX_SWEEPS):
        if float(np.linalg.norm(a[offdiag])) < JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = complex(a[p, q])
                if abs(apq) <= 1e-300:
                    continue
                c, s, pc = _rotation(a[p, p].real, a[q, q].real, apq)
                g10 = -s * pc
                g11 = c * pc
                cp = a[:, p].copy()
                a[:, p] = c * cp + g10 * a[:, q]
                a[:, q] = s * cp + g11 * a[:, q]
                rp = a[p, :].copy()
                a[p, :] = c * rp + g10.conjugate() * a[q, :]
                a[q, :] = s * rp + g11.conjugate() * a[q, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                v[:, p] = c * vp + g10 * v[:, q]
                v[:, q] = s * vp + g11 * v[:, q]
    return np.diag(a).real.copy(), v


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Cyclic-by-rows Jacobi on a stack (B, n, n), modified in place.  Every
    # matrix sees the same pivot schedule with its own rotation angles.
    nb, n, _ = a.shape
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), a.shape).copy()
    scale = np.maximum(1.0, np.linalg.norm(a, axis=(1, 2)))
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(_MAX_SWEEPS):
        off = np.linalg.norm(a[:, offdiag], axis=1)
        if np.all(off < JACOBI_TOL * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                mag = np.abs(apq)
                live = mag > 1e-300
                if not live.any():
                    continue
                safe = np.where(live, mag, 1.0)
                # Phase-align the pivot, then the real symmetric rotation
                # G = [[c, s], [-s pc, c pc]] on columns (p, q) annihilates it.
                theta = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe)
                big = np.abs(theta) > 1e150
                th = np.where(big, 1.0, theta)
                t = np.where(th >= 0, 1.0, -1.0) / (np.abs(th) + np.sqrt(th * th + 1.0))
                t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
                t = np.where(live, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                pc = np.where(live, (apq / safe).conj(), 1.0)
                g10 = (-s * pc)[:, None]
                g11 = (c * pc)[:, None]
                cc = c[:, None]
                ss = s[:, None]
                cp = a[:, :, p].copy()
                a[:, :, p] = cc * cp + g10 * a[:, :, q]
                a[:, :, q] = ss * cp + g11 * a[:, :, q]
                rp = a[:, p, :].copy()
                a[:, p, :] = cc * rp + g10.conj() * a[:, q, :]
                a[:, q, :] = ss * rp + g11.conj() * a[:, q, :]
                a[:, p, q] = 0.0
                a[:, q, p] = 0.0
                a[:, p, p] = a[:, p, p].real
                a[:, q, q] = a[:, q, q].real
                vp = v[:, :, p].copy()
                v[:, :, p] = cc * vp + g10 * v[:, :, q]
                v[:, :, q] = ss * vp + g11 * v[:, :, q]
    return np.diagonal(a, axis1=1, axis2=2).real.copy(), v


def _sorted_system(w: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    pivots = np.argmax(np.abs(v), axis=-2)
    ph = np.take_along_axis(v, pivots[..., None, :], axis=-2)
    return w, v * (np.abs(ph) / ph)


def herm_eig(h) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Eigenvalues are returned in descending order.  Each eigenvector is scaled
    so that its largest-magnitude entry is real and positive, which makes the
    output a deterministic function of the input.

    Raises
    ------
    ContractError
        If ``h`` is not square or deviates from Hermitian by more than 1e-9.
    """
    a = _square_hermitian(h)
    if a.shape[0] == 0:
        return EigenSystem(np.zeros(0), np.zeros((0, 0), dtype=np.complex128))
    w, v = _jacobi_single(a.copy())
    return EigenSystem(*_sorted_system(w, v))


def herm_eig_batch(stack) -> EigenSystem:
    """:func:`herm_eig` applied to every matrix of a ``(B, n, n)`` stack at once."""
    a = np.asarray(stack, dtype=np.complex128)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ContractError(f"expected a stack of square matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError("matrix stack has non-finite entries")
    _check_axes(a.shape[1], a.shape[2])
    err = float(np.max(np.abs(a - a.conj().transpose(0, 2, 1)))) if a.size else 0.0
    if err > HERMITIAN_TOL:
        raise ContractError(f"stack is not Hermitian (max |H - H^dagger| = {err:.3e})")
    a = 0.5 * (a + a.conj().transpose(0, 2, 1))
    if a.shape[0] == 0 or a.shape[1] == 0:
        return EigenSystem(np.zeros(a.shape[:2]), np.zeros(a.shape, dtype=np.complex128))
    w, v = _jacobi(a)
    return EigenSystem(*_sorted_system(w, v))


def eigvalsh(h) -> np.ndarray:
    return herm_eig(h).eigenvalues


def clamp_spectrum(w: np.ndarray, band: float = PSD_CLAMP) -> np.ndarray:
    """Zero eigenvalues in [-band, 0); raise on anything more negative."""
    if w.size and w.min() < -band:
        raise NotPSDError(f"eigenvalue {w.min():.3e} is below -{band:g}")
    return np.where(w < 0.0, 0.0, w)


def psd_sqrt(h) -> np.ndarray:
    """Hermitian positive square root; eigenvalues within -1e-10 of zero are clamped."""
    w, v = herm_eig(h)
    w = clamp_spectrum(w)
    return (v * np.sqrt(w)) @ v.conj().T


def spin_flip(rho: np.ndarray) -> np.ndarray:
    """Two-qubit spin flip (sigma_y x sigma_y) rho^* (sigma_y x sigma_y)."""
    return SIGMA_YY @ rho.conj() @ SIGMA_YY


def wootters_lambdas(rho) -> np.ndarray:
    """Square roots of the eigenvalues of rho * flip(rho), in descending order.

    Computed from the Hermitian product sqrt(rho) flip(rho) sqrt(rho), which
    has the same spectrum as the non-Hermitian product.  The product is
    formed in the eigenbasis of rho, where directions with eigenvalue below
    ``SUPPORT_TOL`` are exact zeros; otherwise eigensolver noise of order
    1e-16 on the null space would surface as 1e-8 after the square root.
    """
    m = as_matrix(rho)
    if m.shape != (4, 4):
        raise ContractError(f"expected a 4x4 two-qubit matrix, got shape {m.shape}")
    return wootters_lambdas_batch(m[np.newaxis])[0]


def wootters_lambdas_batch(stack) -> np.ndarray:
    """Row-wise :func:`wootters_lambdas` for a ``(B, 4, 4)`` stack."""
    m = np.asarray(stack, dtype=np.complex128)
    if m.ndim != 3 or m.shape[1:] != (4, 4):
        raise ContractError(f"expected a stack of 4x4 matrices, got shape {m.shape}")
    w, v = herm_eig_batch(m)
    w = clamp_spectrum(w)
    root = np.sqrt(np.where(w <= SUPPORT_TOL, 0.0, w))
    flipped = SIGMA_YY @ m.conj() @ SIGMA_YY
    prod = v.conj().transpose(0, 2, 1) @ flipped @ v
    prod = root[:, :, None] * prod * root[:, None, :]
    lam = herm_eig_batch(0.5 * (prod + prod.conj().transpose(0, 2, 1))).eigenvalues
    return np.sqrt(np.where(lam < 0.0, 0.0, lam))


def eigvalsh_2x2(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (larger, smaller) of a stack of 2x2 Hermitian matrices."""
    a = m[..., 0, 0].real
    d = m[..., 1, 1].real
    b2 = np.abs(m[..., 0, 1]) ** 2
    half = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b2)
    return half + disc, half - disc
