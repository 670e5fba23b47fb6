"""Normalized Laplacian spectra and diffusion-map embeddings of components."""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from .exceptions import EigenSolverError
from .graph import Component

DENSE_LIMIT = 512
RESIDUAL_TOL = 1e-8
CONVENTIONS = ("paper", "standard")

# ARPACK keeps global state in Fortran common blocks
_arpack_lock = threading.Lock()


@dataclass(frozen=True)
class EigenPairs:
    """Smallest eigenpairs of ``L = I - D^-1/2 A D^-1/2``.

    ``vectors[:, i]`` is the unit eigenvector ``v_i``; ``phi[:, i]`` is
    ``D^-1/2 v_i``.
    """

    values: np.ndarray
    vectors: np.ndarray
    phi: np.ndarray
    residuals: np.ndarray


@dataclass(frozen=True)
class DiffusionMap:
    nodes: np.ndarray
    points: np.ndarray  # (n, d)
    eigenvalues: np.ndarray  # lambda_1..lambda_{d+1}
    d: int
    t: float
    convention: str


def normalized_laplacian(adjacency) -> sp.csr_matrix:
    a = sp.csr_matrix(adjacency, dtype=np.float64)
    deg = np.asarray(a.sum(axis=1)).ravel()
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
    dinv = sp.diags(inv_sqrt)
    lap = sp.identity(a.shape[0], format="csr") - dinv @ a @ dinv
    return sp.csr_matrix(lap)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its first non-negligible entry is positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-8 * max(np.abs(col).max(), 1e-300))
        if big.size and col[big[0]] < 0:
            out[:, j] = -col
    return out


def _residuals(lap, values, vectors) -> np.ndarray:
    r = lap @ vectors - vectors * values
    return np.linalg.norm(r, axis=0)


def _residual_ok(values, residuals) -> bool:
    return bool(np.all(residuals <= RESIDUAL_TOL * np.maximum(1.0, np.abs(values))))


def _sparse_eigs(lap, m, rng, maxiter):
    n = lap.shape[0]
    # a shift just below zero keeps L - sigma*I positive definite while
    # leaving the transformed spectrum 1/(lambda - sigma) well separated
    sigma = -1e-8
    lu = splu(sp.csc_matrix(lap - sigma * sp.identity(n)), permc_spec="MMD_AT_PLUS_A")
    opinv = LinearOperator((n, n), matvec=lu.solve, dtype=np.float64)
    last = None
    for ncv in (min(n, max(2 * m + 1, 20)), min(n, max(4 * m + 1, 60))):
        v0 = rng.standard_normal(n)
        try:
            with _arpack_lock:
                vals, vecs = eigsh(
                    lap, k=m, sigma=sigma, which="LM", OPinv=opinv, v0=v0, ncv=ncv,
                    tol=0.0, maxiter=maxiter,
                )
        except ArpackNoConvergence as exc:
            last = exc
            continue
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        res = _residuals(lap, vals, vecs)
        if _residual_ok(vals, res):
            return vals, vecs
        last = res
    residual = None if last is None or isinstance(last, Exception) else float(np.max(last))
    raise EigenSolverError(
        f"eigensolver failed to reach residual {RESIDUAL_TOL:g} for {m} pairs of an "
        f"{n}-node Laplacian",
        residual=residual,
    )


def smallest_eigenpairs(
    component: Component, m: int, *, seed: int = 0, maxiter: int = 5000
) -> EigenPairs:
    """The ``m`` smallest eigenpairs of the component's normalized Laplacian.

    Components up to ``DENSE_LIMIT`` nodes use a dense symmetric solver;
    larger ones use shift-invert Lanczos with a residual check and one
    restart. Each eigenvector is sign-normalized so that its first
    non-negligible entry is positive.
    """
    n = component.size
    if m < 1 or m > n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if not component.is_connected():
        raise ValueError("component is not connected; embed each connected piece separately")
    adj = component.adjacency
    lap = normalized_laplacian(adj)
    if n == 1:
        vals = np.zeros(1)
        vecs = np.ones((1, 1))
    elif n <= DENSE_LIMIT:
        vals, vecs = scipy.linalg.eigh(lap.toarray(), subset_by_index=(0, m - 1))
    else:
        rng = np.random.default_rng(seed)
        vals, vecs = _sparse_eigs(lap, m, rng, maxiter)
    vecs = _fix_signs(vecs)
    res = _residuals(lap, vals, vecs)
    if not _residual_ok(vals, res):
        raise EigenSolverError(
            f"eigen residual {res.max():.3g} exceeds tolerance", residual=float(res.max())
        )
    deg = np.asarray(adj.sum(axis=1)).ravel() if n > 1 else np.ones(1)
    phi = vecs / np.sqrt(deg)[:, None]
    return EigenPairs(vals, vecs, phi, res)


def embed(
    component: Component,
    d: int = 3,
    t: float = 1,
    convention: str = "paper",
    *,
    seed: int = 0,
) -> DiffusionMap:
    """Diffusion map of a component into ``R^d``.

    Coordinate ``j`` of node ``i`` is ``w_{j+1}**t * phi_{j+1}(i)`` for
    ``j = 1..d``, skipping the trivial constant eigenvector. The weight
    ``w`` is the Laplacian eigenvalue itself (``"paper"``) or the
    random-walk eigenvalue ``1 - lambda`` (``"standard"``).
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    if d < 1:
        raise ValueError("embedding dimension must be >= 1")
    if component.size < d + 1:
        raise ValueError(
            f"component of {component.size} nodes is too small for a {d}-dimensional embedding"
        )
    pairs = smallest_eigenpairs(component, d + 1, seed=seed)
    lam = pairs.values[1 : d + 1]
    w = lam if convention == "paper" else 1.0 - lam
    points = pairs.phi[:, 1 : d + 1] * np.power(w, t)[None, :]
    return DiffusionMap(component.nodes, points, pairs.values, d, t, convention)
