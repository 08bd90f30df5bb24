"""Dense complex matrix/tensor kernel: unfoldings, multilinear and structured
products, SVD-backed pseudo-inverse and rank-1 approximation.

Linearization convention, used everywhere in this package: the first
(leftmost) mode varies fastest, i.e. tensors are flattened in Fortran
(column-major) order and ``vec`` of a matrix stacks its columns.  Under this
convention, for a third-order tensor with factor matrices ``A, B, C`` and a
(super)diagonal core,

    unfold(Z, 0) == A @ khatri_rao(C, B).T
    unfold(Z, 1) == B @ khatri_rao(C, A).T
    unfold(Z, 2) == C @ khatri_rao(B, A).T

and for a dense core ``G`` of any order,

    unfold(Z, n) == M_n @ unfold(G, n) @ kron(M_last, ..., skipping M_n).T
"""

import numpy as np
import scipy.linalg

from .errors import NumericalError

DEFAULT_PINV_TOL = 1e-12


def vec(a):
    """Stack the columns of a matrix (or flatten a tensor, first mode fastest)."""
    return np.ravel(a, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec` for matrices."""
    return np.reshape(v, (rows, cols), order="F")


def unfold(t, mode):
    """Mode-``mode`` unfolding: ``dims[mode] x prod(other dims)`` matrix.

    Columns enumerate the complement modes with lower-numbered modes varying
    fastest.  ``fold`` is the exact inverse.
    """
    t = np.asarray(t)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode index {mode} out of range for order-{t.ndim} tensor")
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def fold(mat, mode, dims):
    """Inverse of :func:`unfold`: rebuild the tensor of shape ``dims``."""
    dims = tuple(dims)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode index {mode} out of range for order-{len(dims)} tensor")
    rest = [d for i, d in enumerate(dims) if i != mode]
    t = np.reshape(np.asarray(mat), [dims[mode]] + rest, order="F")
    return np.moveaxis(t, 0, mode)


def unfold_multi(t, row_modes, col_modes):
    """Generalized unfolding combining several modes per axis.

    The row index runs over ``row_modes`` with the first listed mode varying
    fastest; same for columns.  ``unfold_multi(t, [0], [1, .., d-1])`` is the
    plain mode-0 unfolding.
    """
    t = np.asarray(t)
    if sorted(list(row_modes) + list(col_modes)) != list(range(t.ndim)):
        raise ValueError("row and column modes must partition the tensor modes")
    rows = int(np.prod([t.shape[m] for m in row_modes]))
    perm = list(row_modes) + list(col_modes)
    return np.reshape(np.transpose(t, perm), (rows, -1), order="F")


def nmode_product(t, m, mode):
    """Multiply matrix ``m`` onto tensor ``t`` along ``mode``.

    The result has ``dims[mode]`` replaced by ``m.shape[0]`` and satisfies
    ``unfold(result, mode) == m @ unfold(t, mode)``.
    """
    t = np.asarray(t)
    m = np.asarray(m)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode index {mode} out of range for order-{t.ndim} tensor")
    if m.shape[1] != t.shape[mode]:
        raise ValueError(
            f"matrix with {m.shape[1]} columns cannot act on mode of size {t.shape[mode]}"
        )
    return np.moveaxis(np.tensordot(m, t, axes=(1, mode)), 0, mode)


def identity_tensor(order, size):
    """Superdiagonal tensor of the given order with ones on its diagonal."""
    t = np.zeros((size,) * order, dtype=complex)
    idx = np.arange(size)
    t[(idx,) * order] = 1.0
    return t


def kron(a, b):
    """Kronecker product; block (i, j) of the result is ``a[i, j] * b``."""
    return np.kron(np.asarray(a), np.asarray(b))


def khatri_rao(a, b):
    """Column-wise Kronecker product of two matrices with equal column counts."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"column-count mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    return scipy.linalg.khatri_rao(a, b)


def selection_matrix(l):
    """The ``l**2 x l`` 0/1 matrix that extracts the column-wise Kronecker
    product: ``kron(A, B) @ selection_matrix(l) == khatri_rao(A, B)`` for
    square ``A, B`` with ``l`` columns."""
    if l < 1:
        raise ValueError("extent must be positive")
    eye = np.eye(l, dtype=complex)
    return khatri_rao(eye, eye)


def pinv(a, tol=DEFAULT_PINV_TOL):
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values below ``tol * sigma_max`` are treated as zero.
    """
    try:
        return np.linalg.pinv(np.asarray(a), rcond=tol)
    except np.linalg.LinAlgError as err:
        raise NumericalError(f"SVD did not converge in pinv: {err}") from err


def best_rank1(a):
    """Dominant singular triple ``(u, v, sigma)`` of a matrix.

    ``sigma * outer(u, v.conj())`` is the Frobenius-optimal rank-1
    approximation of ``a``.  A zero matrix yields ``sigma == 0`` with valid
    unit-norm singular vectors.
    """
    a = np.asarray(a)
    if a.size == 0:
        raise ValueError("empty matrix")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as err:
        raise NumericalError(f"SVD did not converge in best_rank1: {err}") from err
    return u[:, 0], vh[0].conj(), float(s[0])


def kron_rearrange(m, left_shape, right_shape):
    """Rearrange a ``(ra*rb) x (ca*cb)`` matrix so a Kronecker-structured
    input ``kron(A, B)`` maps to the rank-1 matrix ``vec(A) @ vec(B).T``.

    ``left_shape = (ra, ca)`` and ``right_shape = (rb, cb)`` are the factor
    shapes.  This is the standard rank-1 rearrangement behind nearest
    Kronecker-product problems.
    """
    ra, ca = left_shape
    rb, cb = right_shape
    m = np.asarray(m)
    if m.shape != (ra * rb, ca * cb):
        raise ValueError(
            f"matrix shape {m.shape} incompatible with factors {left_shape} x {right_shape}"
        )
    # rows of m enumerate (i_a, i_b) with i_b fastest; columns (j_a, j_b)
    # with j_b fastest.  Target: rows (i_a, j_a) i_a fastest, cols (i_b, j_b).
    m4 = np.reshape(m, (rb, ra, cb, ca), order="F")
    return np.reshape(np.transpose(m4, (1, 3, 0, 2)), (ra * ca, rb * cb), order="F")


def nearest_kronecker(m, left_shape, right_shape):
    """Frobenius-nearest separable matrix ``kron(A, B)`` to ``m``.

    Returns the factors ``(A, B)``; their Kronecker product is the
    projection.  The split of the overall scale between the factors is the
    symmetric ``sqrt(sigma)`` one.
    """
    u, v, sigma = best_rank1(kron_rearrange(m, left_shape, right_shape))
    a = unvec(np.sqrt(sigma) * u, *left_shape)
    b = unvec(np.sqrt(sigma) * v.conj(), *right_shape)
    return a, b
