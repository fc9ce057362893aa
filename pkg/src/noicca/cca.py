"""Linear CCA: closed form, alternating least squares, and rank-1 gradient descent.

Covariances use the "scaled" convention: Sigma_ff = F F^T on centered data,
with no 1/N factor, so whitened projections have orthonormal rows.

Every ``eps`` argument in this module is a *relative* ridge: the value added
to the diagonal of a covariance is ``eps`` times its mean diagonal entry.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError, NumericError
from .linalg import as_matrix, inv_sqrt_sym, inv_sym, random_orthonormal, svd_rank_l, whiten_rows

DEFAULT_EPS = 1e-6


@dataclass
class CcaSolution:
    u_map: np.ndarray  # d_x x L
    v_map: np.ndarray  # d_y x L
    correlations: np.ndarray
    total: float
    mean_x: np.ndarray
    mean_y: np.ndarray

    def transform(self, X, Y):
        """Project raw (uncentered) views onto the canonical directions."""
        P = self.u_map.T @ (X - self.mean_x[:, None])
        Q = self.v_map.T @ (Y - self.mean_y[:, None])
        return P, Q


@dataclass
class AlsState:
    a_proj: np.ndarray  # L x N
    b_proj: np.ndarray  # L x N
    iteration: int


def center(F):
    mean = F.mean(axis=1)
    return F - mean[:, None], mean


def ridge(S, eps):
    """Absolute ridge for covariance ``S`` given a relative ``eps``."""
    scale = float(np.mean(np.diag(S)))
    return eps * scale if scale > 0 else eps


def _paired(F, G):
    F = as_matrix(F, "F")
    G = as_matrix(G, "G")
    if F.shape[1] != G.shape[1]:
        raise DimensionError(f"views have different sample counts: {F.shape[1]} vs {G.shape[1]}")
    if F.shape[1] < 2:
        raise DataError("CCA needs at least 2 samples")
    return F, G


def whitened_cross_cov(F, G, eps=DEFAULT_EPS):
    """Sigma_ff^{-1/2} Sigma_fg Sigma_gg^{-1/2} for centered F, G.

    Returns the whitened cross-covariance together with the two inverse
    square roots used to build it.
    """
    Sff = F @ F.T
    Sgg = G @ G.T
    Sff_is = inv_sqrt_sym(Sff, ridge(Sff, eps))
    Sgg_is = inv_sqrt_sym(Sgg, ridge(Sgg, eps))
    return Sff_is @ (F @ G.T) @ Sgg_is, Sff_is, Sgg_is


def closed_form(F, G, L, eps=DEFAULT_EPS):
    """Exact CCA via the SVD of the whitened cross-covariance.

    Inputs are raw; both views are centered here and their means stored on
    the returned solution.
    """
    F, G = _paired(F, G)
    if not 1 <= L <= min(F.shape[0], G.shape[0]):
        raise DimensionError(f"L={L} out of range for view dims {F.shape[0]}, {G.shape[0]}")
    Fc, mx = center(F)
    Gc, my = center(G)
    T, Sff_is, Sgg_is = whitened_cross_cov(Fc, Gc, eps)
    Ut, sigma, Vt = svd_rank_l(T, L)
    return CcaSolution(
        u_map=Sff_is @ Ut,
        v_map=Sgg_is @ Vt,
        correlations=sigma,
        total=float(np.sum(sigma)),
        mean_x=mx,
        mean_y=my,
    )


def total_correlation(P, Q, eps=DEFAULT_EPS):
    """Sum of all canonical correlations between two L x M projections."""
    P = as_matrix(P, "P")
    Q = as_matrix(Q, "Q")
    if P.shape != Q.shape:
        raise DimensionError(f"projection shapes differ: {P.shape} vs {Q.shape}")
    return closed_form(P, Q, P.shape[0], eps).total


def _whiten(B, eps):
    # An ill-conditioned B (a start nearly orthogonal to the other view) lets
    # even a tiny ridge leave visible Gram error; a second pass on the
    # near-orthonormal result removes it.
    B = whiten_rows(B, ridge(B @ B.T, eps))
    return whiten_rows(B, ridge(B @ B.T, eps))


def als(F, G, L, T, eps=1e-10, seed=0, callback=None, tol=None):
    """CCA projections by alternating least squares (orthogonal iterations).

    F and G must be centered. Each iteration regresses the current view-1
    projection onto G, whitens, then regresses back onto F and whitens.

    Parameters
    ----------
    F, G : ndarray, (d_x, N) and (d_y, N)
    L : int
        Number of projection dimensions.
    T : int
        Iteration count; the loop runs exactly T times unless ``tol`` is set.
    eps : float
        Relative ridge for every inverse and inverse square root.
    seed : int
        Seed for the orthonormal initialization of the whitened view-1 basis.
    callback : callable, optional
        Called as ``callback(state)`` after every iteration.
    tol : float, optional
        Stop early once the subspace moves by less than ``tol`` radians.
    """
    F, G = _paired(F, G)
    if not 1 <= L <= min(F.shape[0], G.shape[0]):
        raise DimensionError(f"L={L} out of range for view dims {F.shape[0]}, {G.shape[0]}")
    if T < 1:
        raise DataError("ALS needs T >= 1")
    Sff = F @ F.T
    Sgg = G @ G.T
    rf, rg = ridge(Sff, eps), ridge(Sgg, eps)
    U0 = random_orthonormal(F.shape[0], L, seed)
    A = U0.T @ inv_sqrt_sym(Sff, rf) @ F
    # least-squares projectors, applied as (A G^T) @ proj_g
    proj_g = inv_sym(Sgg, rg) @ G
    proj_f = inv_sym(Sff, rf) @ F
    state = AlsState(A, None, 0)
    for t in range(1, T + 1):
        B = (A @ G.T) @ proj_g
        B = _whiten(B, eps)
        A_new = (B @ F.T) @ proj_f
        A_new = _whiten(A_new, eps)
        moved = subspace_angle(A, A_new) if tol is not None else None
        A = A_new
        state = AlsState(A, B, t)
        if callback is not None:
            callback(state)
        if moved is not None and moved < tol:
            break
    return state


def _unit(x):
    return x / np.linalg.norm(x)


def gd_rank1(F, G, eta, T, seed=0, u0=None, v0=None):
    """Top canonical pair by gradient descent over alternating least squares.

    Each step moves u toward the least-squares fit of the normalized
    view-2 projection (and symmetrically for v); both updates use the
    previous iterate. F and G must be centered. Returns ``(u, v)`` scaled so
    that ``||u^T F|| = ||v^T G|| = 1``.
    """
    F, G = _paired(F, G)
    if eta <= 0:
        raise DataError("eta must be positive")
    rng = np.random.default_rng(seed)
    u = _unit(rng.standard_normal(F.shape[0])) if u0 is None else np.array(u0, dtype=np.float64)
    v = _unit(rng.standard_normal(G.shape[0])) if v0 is None else np.array(v0, dtype=np.float64)

    def proj_norm(w, M):
        p = w @ M
        nrm = np.linalg.norm(p)
        if nrm < 1e-12:
            raise NumericError("degenerate direction: projection norm below 1e-12")
        return p, nrm

    for _ in range(T):
        pu, nu = proj_norm(u, F)
        pv, nv = proj_norm(v, G)
        u, v = u - eta * F @ (pu - pv / nv), v - eta * G @ (pv - pu / nu)
    _, nu = proj_norm(u, F)
    _, nv = proj_norm(v, G)
    return u / nu, v / nv


def _row_basis(A):
    A = as_matrix(A)
    Q, R = np.linalg.qr(A.T)
    d = np.abs(np.diag(R))
    if d.size == 0 or d.min() <= 1e-12 * max(d.max(), 1e-300):
        raise NumericError("row space is rank deficient")
    return Q


def subspace_angle(A, B):
    """Largest principal angle (radians) between the row spaces of A and B."""
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"row spaces live in different dimensions: {A.shape} vs {B.shape}")
    Qa = _row_basis(A)
    Qb = _row_basis(B)
    cos = np.linalg.svd(Qa.T @ Qb, compute_uv=False)
    # the sine form stays accurate for small angles where arccos does not
    resid = Qb - Qa @ (Qa.T @ Qb)
    sin = np.linalg.norm(resid, 2)
    if sin < np.sqrt(0.5):
        return float(np.arcsin(min(sin, 1.0)))
    if Qb.shape[1] > Qa.shape[1]:
        return float(np.pi / 2)
    return float(np.arccos(np.clip(cos.min(), -1.0, 1.0)))
