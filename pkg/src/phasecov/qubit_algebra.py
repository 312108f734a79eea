"""Dense linear algebra for single-qubit operators.

Operators are plain ``numpy`` arrays:

* a Hermitian operator is a ``(2, 2)`` complex array,
* a Bloch/affine vector is a length-4 real array ``(tr X, tr s1 X, tr s2 X, tr s3 X)``,
* an affine superoperator is a ``(4, 4)`` real array acting on Bloch vectors.

The 4x4 Hermitian eigensolver is a cyclic complex Jacobi iteration that
works on stacks of matrices, so thousands of Choi matrices can be
certified in one call.
"""

import numpy as np

from .config import DEFAULT_TOLERANCES

IDENTITY = np.eye(2, dtype=complex)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_BASIS = (IDENTITY, SIGMA1, SIGMA2, SIGMA3)

KET0_PROJ = np.array([[1, 0], [0, 0]], dtype=complex)
KET1_PROJ = np.array([[0, 0], [0, 1]], dtype=complex)

_JACOBI_MAX_SWEEPS = 50
_OFF_DIAGONAL = ~np.eye(4, dtype=bool)


def is_hermitian(X, tol=DEFAULT_TOLERANCES.hermitian):
    X = np.asarray(X)
    return X.shape[-1] == X.shape[-2] and bool(
        np.max(np.abs(X - np.conj(np.swapaxes(X, -1, -2))), initial=0.0) <= tol
    )


def to_bloch(X, tol=DEFAULT_TOLERANCES.hermitian):
    """Return ``(tr X, tr(s1 X), tr(s2 X), tr(s3 X))`` for a Hermitian 2x2 ``X``.

    Raises:
        ValueError: if ``X`` is not 2x2 or deviates from Hermiticity by more than ``tol``.
    """
    X = np.asarray(X, dtype=complex)
    if X.shape != (2, 2):
        raise ValueError(f"expected a 2x2 operator, got shape {X.shape}")
    if not is_hermitian(X, tol):
        raise ValueError("operator is not Hermitian")
    return np.array([np.trace(P @ X).real for P in PAULI_BASIS])


def from_bloch(v):
    """Inverse of :func:`to_bloch`: ``X = (v0 I + v1 s1 + v2 s2 + v3 s3) / 2``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (4,):
        raise ValueError(f"expected a length-4 vector, got shape {v.shape}")
    t, b1, b2, b3 = v
    return 0.5 * np.array(
        [[t + b3, b1 - 1j * b2], [b1 + 1j * b2, t - b3]], dtype=complex
    )


def apply_superop(S, v):
    return np.asarray(S, dtype=float) @ np.asarray(v, dtype=float)


def is_trace_preserving(S, tol=1e-14):
    return bool(np.max(np.abs(np.asarray(S)[0] - [1.0, 0.0, 0.0, 0.0])) <= tol)


def hermitian4_eigh(M, tol=1e-10):
    """Eigen-decomposition of (a stack of) 4x4 Hermitian matrices by cyclic Jacobi.

    Parameters
    ----------
    M : array_like, shape (..., 4, 4)
        Hermitian input.
    tol : float
        Allowed deviation from Hermiticity, relative to ``max(1, |M|)``.

    Returns
    -------
    values : ndarray, shape (..., 4)
        Eigenvalues in ascending order.
    vectors : ndarray, shape (..., 4, 4)
        Orthonormal eigenvectors as columns, ordered like ``values``.
    """
    A = np.array(M, dtype=complex)
    if A.shape[-2:] != (4, 4):
        raise ValueError(f"expected 4x4 matrices, got shape {A.shape}")
    batch_shape = A.shape[:-2]
    A = A.reshape(-1, 4, 4)
    scale = np.maximum(1.0, np.max(np.abs(A), axis=(1, 2)))
    asym = np.max(np.abs(A - np.conj(np.swapaxes(A, 1, 2))), axis=(1, 2))
    if np.any(asym > tol * scale):
        raise ValueError("matrix is not Hermitian")
    A = 0.5 * (A + np.conj(np.swapaxes(A, 1, 2)))
    V = np.broadcast_to(np.eye(4, dtype=complex), A.shape).copy()

    norm = np.sqrt(np.sum(np.abs(A) ** 2, axis=(1, 2)))
    target = 1e-15 * np.maximum(norm, np.finfo(float).tiny)
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = _off_norm(A)
        if np.all(off <= target):
            break
        for p in range(3):
            for q in range(p + 1, 4):
                _rotate(A, V, p, q)

    values = np.diagonal(A, axis1=1, axis2=2).real
    order = np.argsort(values, axis=1)
    values = np.take_along_axis(values, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return values.reshape(batch_shape + (4,)), V.reshape(batch_shape + (4, 4))


def hermitian4_eigenvalues(M, tol=1e-10):
    """Ascending eigenvalues of (a stack of) 4x4 Hermitian matrices."""
    return hermitian4_eigh(M, tol)[0]


def _off_norm(A):
    # summed entry by entry: |A|^2 - |diag|^2 cancels to 0 for tiny off-diagonals
    return np.sqrt(np.sum(np.abs(A * _OFF_DIAGONAL) ** 2, axis=(1, 2)))


def _rotate(A, V, p, q):
    """One complex Jacobi step zeroing ``A[:, p, q]`` in place (``A <- U^H A U``)."""
    apq = A[:, p, q].copy()
    r = np.abs(apq)
    if not np.any(r > 0):
        return
    phase = np.exp(-1j * np.angle(apq))
    # column q scaled by phase, row q by conj(phase): A[p, q] becomes real, equal to r
    A[:, :, q] *= phase[:, None]
    A[:, q, :] *= np.conj(phase)[:, None]
    V[:, :, q] *= phase[:, None]

    a = A[:, p, p].real
    b = A[:, q, q].real
    theta = 0.5 * np.arctan2(2.0 * r, b - a)
    c = np.cos(theta)[:, None]
    s = np.sin(theta)[:, None]

    col_p = A[:, :, p].copy()
    col_q = A[:, :, q].copy()
    A[:, :, p] = c * col_p - s * col_q
    A[:, :, q] = s * col_p + c * col_q
    row_p = A[:, p, :].copy()
    row_q = A[:, q, :].copy()
    A[:, p, :] = c * row_p - s * row_q
    A[:, q, :] = s * row_p + c * row_q
    A[:, p, q] = 0.0
    A[:, q, p] = 0.0

    vp = V[:, :, p].copy()
    vq = V[:, :, q].copy()
    V[:, :, p] = c * vp - s * vq
    V[:, :, q] = s * vp + c * vq


def max_abs(X):
    """Max-abs entry norm used for all operator defects."""
    return float(np.max(np.abs(X), initial=0.0))
