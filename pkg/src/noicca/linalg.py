"""Dense symmetric eigen-solvers, SVD, inverse square roots and whitening.

All routines work on float64 numpy arrays. Data matrices follow the
column-per-sample convention (features x samples).
"""

from collections import namedtuple

import numpy as np

from .errors import DimensionError, NumericError

SymEig = namedtuple("SymEig", ["eigenvalues", "eigenvectors"])

# eigenvalues down to -NEG_TOL * lambda_max are treated as rounding noise
NEG_TOL = 1e-10


def as_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    # a sum is finite only if every entry is
    if not np.isfinite(M.sum()) and not np.isfinite(M).all():
        raise NumericError(f"{name} contains non-finite entries")
    return M


def symmetrize(M):
    return 0.5 * (M + M.T)


def _eigh(M):
    """Ascending eigendecomposition of a validated square matrix."""
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got {M.shape}")
    try:
        return np.linalg.eigh(symmetrize(M))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition of {M.shape[0]}x{M.shape[1]} matrix failed: {exc}")


def sym_eig(M):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    The input is symmetrized before decomposition to absorb rounding
    asymmetry from covariance accumulation.
    """
    w, V = _eigh(as_matrix(M))
    return SymEig(w[::-1].copy(), V[:, ::-1].copy())


def _clamped_eigenvalues(w, eps):
    # w ascending
    lo, hi = float(w[0]), float(w[-1])
    lam_max = max(-lo, hi)
    if lo < -NEG_TOL * lam_max:
        raise NumericError(f"matrix is indefinite: smallest eigenvalue {lo:.3e}, largest {lam_max:.3e}")
    if lo < 0:
        w = np.maximum(w, 0.0)
    w = w + eps
    if w[0] <= 0:
        raise NumericError("singular matrix: eigenvalue + eps <= 0 (pass eps > 0 for rank-deficient input)")
    return w


def inv_sqrt_sym(M, eps=0.0):
    """Return (M + eps*I)^(-1/2) for a symmetric PSD matrix M."""
    w, V = _eigh(as_matrix(M))
    w = _clamped_eigenvalues(w, eps)
    R = (V / np.sqrt(w)) @ V.T
    return symmetrize(R)


def inv_sym(M, eps=0.0):
    """Return (M + eps*I)^(-1) for a symmetric PSD matrix M."""
    w, V = _eigh(as_matrix(M))
    w = _clamped_eigenvalues(w, eps)
    return symmetrize((V / w) @ V.T)


def _orthonormal_completion(Q, k):
    """Replace columns k: of Q with an orthonormal completion of Q[:, :k]."""
    d, L = Q.shape
    basis = Q[:, :k]
    filled = [basis]
    for j in range(d):
        if sum(b.shape[1] for b in filled) == L:
            break
        e = np.zeros((d, 1))
        e[j] = 1.0
        cur = np.hstack(filled)
        r = e - cur @ (cur.T @ e)
        r = r - cur @ (cur.T @ r)
        nrm = np.linalg.norm(r)
        if nrm > 1e-8:
            filled.append(r / nrm)
    return np.hstack(filled)[:, :L]


def _fix_signs(U, V):
    # largest-magnitude entry of each left vector made positive
    idx = np.argmax(np.abs(U), axis=0)
    s = np.sign(U[idx, np.arange(U.shape[1])])
    s[s == 0] = 1.0
    return U * s, V * s


def svd_rank_l(M, L):
    """Rank-L SVD computed from the eigendecomposition of the smaller Gram matrix.

    Returns ``(U, sigma, V)`` with ``M ~= U @ diag(sigma) @ V.T``, sigma
    descending, orthonormal columns in U and V.
    """
    M = as_matrix(M)
    d1, d2 = M.shape
    if not 1 <= L <= min(d1, d2):
        raise DimensionError(f"rank {L} out of range for a {d1}x{d2} matrix")
    transpose = d1 > d2
    A = M.T if transpose else M
    w, P = sym_eig(A @ A.T)
    w = np.maximum(w[:L], 0.0)
    sigma = np.sqrt(w)
    P = P[:, :L]
    Q = A.T @ P
    good = int(np.sum(sigma > sigma[0] * 1e-10)) if sigma[0] > 0 else 0
    Q[:, :good] /= sigma[:good]
    Q[:, good:] = 0.0
    if good < L:
        Q = _orthonormal_completion(Q, good)
        sigma[good:] = 0.0
    # one Gram-Schmidt pass; R ~ I for well separated columns
    Qo, R = np.linalg.qr(Q)
    Qo = Qo * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))
    U, V = (Qo, P) if transpose else (P, Qo)
    U, V = _fix_signs(U, V)
    return U, sigma, V


def whiten_rows(A, eps=0.0):
    """Return (A A^T + eps I)^(-1/2) A, whose rows are orthonormal when eps = 0."""
    A = as_matrix(A)
    return inv_sqrt_sym(A @ A.T, eps) @ A


def random_orthonormal(d, L, seed):
    """Seeded d x L matrix with orthonormal columns (QR of a Gaussian fill)."""
    if L > d or L < 1:
        raise DimensionError(f"cannot build {L} orthonormal columns in dimension {d}")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((d, L)))
    return Q * np.sign(np.diag(R))
