"""
Linear algebra and optimisation used by the projection pursuit methods

- sym_eig: cyclic Jacobi eigendecomposition of a symmetric matrix
- whiten: centre and whiten a data matrix onto its leading components
- ridge_ols: ridge-regularised least squares through a Cholesky solve
- qn_minimize: limited-memory BFGS with Armijo backtracking
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from numba import njit

from errors import InputError, NumericError

logger = logging.getLogger(__name__)

JACOBI_MAX_SWEEPS = 100
WHITEN_EIGEN_FLOOR = 1e-12
LBFGS_MEMORY = 10
ARMIJO = 1e-4
BACKTRACK = 0.5
MAX_BACKTRACKS = 60


def as_matrix(X, name: str = "X") -> np.ndarray:
    A = np.asarray(X, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise InputError(f"{name} must be a 2-D matrix, got {A.ndim} dimensions")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} contains non-finite entries")
    return A


@njit(cache=True)
def _jacobi(a, tol):
    d = a.shape[0]
    v = np.eye(d)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(d):
            for q in range(p + 1, d):
                off += 2.0 * a[p, q] * a[p, q]
        if math.sqrt(off) < tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(d):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(d):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(d):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return np.diag(a).copy(), v


def sym_eig(A) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenvalues in descending order and the matching eigenvectors as columns.

    Each eigenvector is signed so that its largest-magnitude entry is positive.
    """
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise InputError(f"A must be square, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > 1e-10 * scale:
        raise InputError("A is not symmetric")
    A = 0.5 * (A + A.T)
    values, vectors = _jacobi(A.copy(), 1e-12 * float(np.linalg.norm(A)))
    idx = np.argsort(-values, kind="stable")
    values, vectors = values[idx], vectors[:, idx]
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return values, vectors * signs


def covariance(X) -> np.ndarray:
    X = as_matrix(X)
    Xc = X - X.mean(axis=0)
    return Xc.T @ Xc / (X.shape[0] - 1)


@dataclass(frozen=True)
class WhitenedData:
    """whitened = (X - centre) @ whitener, whitener = U Lambda^{-1/2}."""

    whitened: np.ndarray
    whitener: np.ndarray
    center: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def unwhitener(self) -> np.ndarray:
        """Pseudo-inverse of the whitener, Lambda^{1/2} U^T."""
        return np.sqrt(self.eigenvalues)[:, None] * self.eigenvectors.T

    def transform(self, X) -> np.ndarray:
        return (as_matrix(X) - self.center) @ self.whitener

    def reconstruct(self) -> np.ndarray:
        return self.whitened @ self.unwhitener + self.center


def whiten(X, ncomp: int) -> WhitenedData:
    """Centre X and project onto its ncomp leading principal axes with unit variance."""
    X = as_matrix(X)
    n, d = X.shape
    if not 1 <= ncomp <= d:
        raise InputError(f"ncomp must lie in [1, {d}], got {ncomp}")
    if n < 2:
        raise InputError("whitening needs at least two rows")
    center = X.mean(axis=0)
    values, vectors = sym_eig(covariance(X))
    floor = WHITEN_EIGEN_FLOOR * max(values[0], 0.0)
    if not values[ncomp - 1] > floor:
        raise NumericError(
            f"covariance is rank deficient: eigenvalue {ncomp} is {values[ncomp - 1]:.3e} "
            f"(floor {floor:.3e})"
        )
    lam = values[:ncomp]
    U = vectors[:, :ncomp]
    whitener = U / np.sqrt(lam)
    return WhitenedData(
        whitened=(X - center) @ whitener,
        whitener=whitener,
        center=center,
        eigenvalues=lam,
        eigenvectors=U,
    )


@njit(cache=True)
def _cholesky_solve(L, b):
    """Solve L L^T x = b for lower-triangular L by forward then back substitution."""
    n = L.shape[0]
    z = np.empty(n)
    for i in range(n):
        s = b[i]
        for j in range(i):
            s -= L[i, j] * z[j]
        z[i] = s / L[i, i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        s = z[i]
        for j in range(i + 1, n):
            s -= L[j, i] * x[j]
        x[i] = s / L[i, i]
    return x


def ridge_ols(X, y, ridge: float = 0.01) -> np.ndarray:
    """Solve (X^T X + ridge I) w = X^T y by Cholesky factorisation."""
    if not ridge > 0:
        raise InputError(f"ridge must be positive, got {ridge}")
    X = as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    if y.size != X.shape[0]:
        raise InputError(f"X has {X.shape[0]} rows but y has {y.size} entries")
    A = X.T @ X + ridge * np.eye(X.shape[1])
    return _cholesky_solve(np.linalg.cholesky(A), X.T @ y)


@dataclass(frozen=True)
class OptimizeResult:
    x: np.ndarray
    value: float
    gradient: np.ndarray
    n_iter: int
    status: str

    @property
    def degraded(self) -> bool:
        return self.status == "non_finite"


def _two_loop(g, pairs):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    s, y, _ = pairs[-1]
    r = q * ((s @ y) / (y @ y))
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ r)
        r += (a - b) * s
    return r


def qn_minimize(
    f_and_grad: Callable[[np.ndarray], Tuple[float, np.ndarray]],
    x0,
    max_iter: int = 100,
    grad_tol: float = 1e-6,
    memory: int = LBFGS_MEMORY,
) -> OptimizeResult:
    """
    Unconstrained L-BFGS minimisation.

    Stops when the gradient's max-norm falls below grad_tol * (1 + |f|) or
    after max_iter accepted steps. Accepted iterates never increase f.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = f_and_grad(x)
    g = np.asarray(g, dtype=float)
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise NumericError("objective or gradient is not finite at the starting point")

    pairs = deque(maxlen=memory)
    status = "max_iter"
    n_iter = 0
    while n_iter < max_iter:
        if np.max(np.abs(g)) < grad_tol * (1.0 + abs(f)):
            status = "converged"
            break
        if pairs:
            d = -_two_loop(g, list(pairs))
            step = 1.0
        else:
            d = -g
            step = min(1.0, 1.0 / float(np.max(np.abs(g))))
        slope = float(g @ d)
        if slope >= 0:
            pairs.clear()
            d = -g
            slope = float(g @ d)
            step = min(1.0, 1.0 / float(np.max(np.abs(g))))

        accepted = False
        for _ in range(MAX_BACKTRACKS):
            xn = x + step * d
            fn, gn = f_and_grad(xn)
            if math.isfinite(fn) and fn <= f + ARMIJO * step * slope:
                accepted = True
                break
            step *= BACKTRACK
        if not accepted:
            status = "line_search"
            break
        gn = np.asarray(gn, dtype=float)
        if not np.all(np.isfinite(gn)):
            logger.warning("non-finite gradient after %d iterations, returning best iterate", n_iter)
            status = "non_finite"
            break

        s, y = xn - x, gn - g
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
        x, f, g = xn, float(fn), gn
        n_iter += 1

    logger.debug("qn_minimize: %s after %d iterations, f = %.6g", status, n_iter, f)
    return OptimizeResult(x=x, value=float(f), gradient=g, n_iter=n_iter, status=status)
