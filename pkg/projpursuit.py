"""
Projection pursuit on top of the fast kernel sums

- ICA: deflationary minimisation of the projected sample entropy on whitened data
- MDH: minimum density hyperplanes with a penalty keeping the split near the mean
- PPR: projection pursuit regression with the analytic leave-one-out SSE gradient

Every projection index depends on its direction only through w / ||w||.
Models are immutable and serialise to JSON with reals written as hex floats.
"""

import json
import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

import settings
from errors import InputError, NumericError
from fastsum import WeightedSample, fk_sum
from kernel_core import PolyExpKernel, default_kernel
from linalg_opt import as_matrix, covariance, qn_minimize, ridge_ols, sym_eig, whiten
from smoothers import REGRESSION_METHODS, kde, loo_sse_objective, regress, scalar_minimize, silverman_bandwidth

logger = logging.getLogger(__name__)

ICA_MAX_BACKTRACKS = 30
MDH_GRID = 200
MDH_STAGES = 11
MDH_MAX_ITER = 50
PPR_MAX_ITER = 50
PPR_GRAD_TOL = 1e-6
PPR_RIDGE = 0.01


# Serialisation helpers

def _hex_array(a) -> list:
    return [float(v).hex() for v in np.asarray(a, dtype=float).ravel()]


def _from_hex(values, shape=None) -> np.ndarray:
    out = np.array([float.fromhex(v) for v in values], dtype=float)
    return out if shape is None else out.reshape(shape)


def _kernel_json(kernel: PolyExpKernel) -> list:
    return _hex_array(kernel.coefficients)


def _kernel_from_json(values) -> PolyExpKernel:
    return PolyExpKernel(tuple(_from_hex(values)))


def _check_kind(payload: dict, kind: str):
    if payload.get("model") != kind:
        raise InputError(f"expected a '{kind}' model, got '{payload.get('model')}'")


def _unit(w, name: str = "w") -> Tuple[np.ndarray, float]:
    w = np.asarray(w, dtype=float).ravel()
    norm = float(np.linalg.norm(w))
    if not norm > 0 or not math.isfinite(norm):
        raise InputError(f"{name} must have positive finite norm")
    return w / norm, norm


def _radial_chain(X: np.ndarray, w: np.ndarray, norm: float, p: np.ndarray, dp: np.ndarray) -> np.ndarray:
    # p = X w / ||w||  =>  grad_w = X^T dp / ||w|| - w (p^T dp) / ||w||^2
    return X.T @ dp / norm - w * (p @ dp) / norm ** 2


# ---------------------------------------------------------------------------
# ICA
# ---------------------------------------------------------------------------

def _projected_density(sample: WeightedSample, h: float, kernel: PolyExpKernel, nbin) -> np.ndarray:
    """Plain KDE (self term included) at the sample points, floored."""
    dens = fk_sum(sample, h, kernel, nbin=nbin).ksum / (sample.n * h)
    return np.maximum(dens, settings.DENSITY_FLOOR)


def entropy_index(q, Xw, h: float, kernel: Optional[PolyExpKernel] = None, nbin: Optional[int] = None) -> float:
    """-(1/n) sum log f(p_j), p = Xw q / ||q||."""
    if not h > 0:
        raise InputError(f"bandwidth h must be positive, got {h}")
    kernel = (kernel or default_kernel()).normalized()
    Xw = as_matrix(Xw, "Xw")
    u, _ = _unit(q, "q")
    sample = WeightedSample.create(Xw @ u)
    return float(-np.mean(np.log(_projected_density(sample, h, kernel, nbin))))


def entropy_grad(q, Xw, h: float, kernel: Optional[PolyExpKernel] = None, nbin: Optional[int] = None) -> np.ndarray:
    if not h > 0:
        raise InputError(f"bandwidth h must be positive, got {h}")
    kernel = (kernel or default_kernel()).normalized()
    Xw = as_matrix(Xw, "Xw")
    q = np.asarray(q, dtype=float).ravel()
    u, norm = _unit(q, "q")
    p = Xw @ u
    n = p.size
    sample = WeightedSample.create(p)
    both = fk_sum(sample, h, kernel, mode="both", nbin=nbin)
    f = np.maximum(both.ksum / (n * h), settings.DENSITY_FLOOR)
    d_inv = fk_sum(sample.with_weights(1.0 / f), h, kernel, mode="dsum", nbin=nbin).dksum
    dp = (d_inv + both.dksum / f) / (n * n * h * h)
    return _radial_chain(Xw, q, norm, p, dp)


@dataclass(frozen=True)
class ICAModel:
    whitener: np.ndarray
    unmixing: np.ndarray
    sources: np.ndarray
    center: np.ndarray
    kernel: PolyExpKernel
    bandwidths: Tuple[float, ...]

    @property
    def ncomp(self) -> int:
        return self.unmixing.shape[1]

    @property
    def unmixing_matrix(self) -> np.ndarray:
        """W with s = W (x - center) for column vectors x."""
        return (self.whitener @ self.unmixing).T

    def transform(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.center.size:
            raise InputError(f"model expects {self.center.size} columns, got {X.shape[1]}")
        return (X - self.center) @ self.whitener @ self.unmixing

    def to_json(self) -> str:
        return json.dumps({
            "model": "ica",
            "kernel": _kernel_json(self.kernel),
            "whitener": {"shape": list(self.whitener.shape), "values": _hex_array(self.whitener)},
            "unmixing": {"shape": list(self.unmixing.shape), "values": _hex_array(self.unmixing)},
            "center": _hex_array(self.center),
            "bandwidths": _hex_array(self.bandwidths),
        }, indent=2)

    @classmethod
    def from_json(cls, text: str, X=None) -> "ICAModel":
        """Rebuild a model; sources are recomputed from X when given, else empty."""
        payload = json.loads(text)
        _check_kind(payload, "ica")
        whitener = _from_hex(payload["whitener"]["values"], payload["whitener"]["shape"])
        unmixing = _from_hex(payload["unmixing"]["values"], payload["unmixing"]["shape"])
        center = _from_hex(payload["center"])
        sources = np.empty((0, unmixing.shape[1]))
        if X is not None:
            sources = (as_matrix(X) - center) @ whitener @ unmixing
        return cls(
            whitener=whitener,
            unmixing=unmixing,
            sources=sources,
            center=center,
            kernel=_kernel_from_json(payload["kernel"]),
            bandwidths=tuple(_from_hex(payload["bandwidths"])),
        )


def _orthogonalize(q: np.ndarray, basis: List[np.ndarray]) -> np.ndarray:
    for b in basis:
        q = q - (q @ b) * b
    norm = np.linalg.norm(q)
    if not norm > 0:
        raise NumericError("direction collapsed during Gram-Schmidt orthogonalisation")
    return q / norm


def ica_fit(
    X,
    ncomp: int,
    kernel: Optional[PolyExpKernel] = None,
    hmult: float = 1.5,
    it: int = 20,
    nbin: Optional[int] = None,
) -> ICAModel:
    """
    Extract ncomp independent components one at a time.

    Component i starts at the i-th coordinate axis of the whitened data and
    takes `it` projected-gradient steps; every candidate is orthogonalised
    against the components already found and renormalised.
    """
    kernel = kernel or default_kernel()
    X = as_matrix(X)
    n, d = X.shape
    if not 1 <= ncomp <= d:
        raise InputError(f"ncomp must lie in [1, {d}], got {ncomp}")
    if n <= ncomp:
        raise InputError(f"need more rows than components, got n={n}, ncomp={ncomp}")
    if not hmult > 0 or it < 0:
        raise InputError(f"hmult must be positive and it non-negative, got {hmult}, {it}")

    white = whiten(X, ncomp)
    Z = white.whitened
    found: List[np.ndarray] = []
    bandwidths = []
    for i in range(ncomp):
        q = _orthogonalize(np.eye(ncomp)[i], found)
        step = 1.0
        h = hmult * silverman_bandwidth(Z @ q, kernel)
        for _ in range(it):
            h = hmult * silverman_bandwidth(Z @ q, kernel)
            value = entropy_index(q, Z, h, kernel, nbin)
            g = entropy_grad(q, Z, h, kernel, nbin)
            # tangent to the sphere and to the deflation constraints
            g = g - (g @ q) * q
            for b in found:
                g = g - (g @ b) * b
            if not np.linalg.norm(g) > 0:
                break
            improved = False
            for _ in range(ICA_MAX_BACKTRACKS):
                cand = _orthogonalize(q - step * g, found)
                if entropy_index(cand, Z, h, kernel, nbin) < value:
                    improved = True
                    break
                step *= 0.5
            if not improved:
                break
            q = cand
            step *= 2.0
        found.append(q)
        bandwidths.append(h)
        logger.info("ICA component %d/%d extracted, h = %.4g", i + 1, ncomp, h)

    Q = np.column_stack(found)
    return ICAModel(
        whitener=white.whitener,
        unmixing=Q,
        sources=Z @ Q,
        center=white.center,
        kernel=kernel,
        bandwidths=tuple(bandwidths),
    )


# ---------------------------------------------------------------------------
# Minimum density hyperplanes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectionSummary:
    """Projections of X onto a unit direction, sorted once for repeated sums."""

    sample: WeightedSample
    mean: float
    sd: float

    @classmethod
    def of(cls, X: np.ndarray, v: np.ndarray) -> "ProjectionSummary":
        p = X @ v
        return cls(sample=WeightedSample.create(p), mean=float(np.mean(p)), sd=float(np.std(p, ddof=1)))


def _interval_distance(b, mean: float, sd: float, alpha: float):
    b = np.asarray(b, dtype=float)
    return np.maximum(0.0, np.maximum((mean - alpha * sd) - b, b - (mean + alpha * sd)))


def mdh_penalized_density(summary: ProjectionSummary, b, h: float, kernel: PolyExpKernel, C: float, alpha: float):
    """KDE of the projections at b plus C * dist(b, [mean - alpha sd, mean + alpha sd])^2."""
    if not h > 0 or C < 0 or alpha < 0:
        raise InputError(f"need h > 0, C >= 0 and alpha >= 0, got h={h}, C={C}, alpha={alpha}")
    b_arr = np.atleast_1d(np.asarray(b, dtype=float))
    dens = kde(summary.sample, h, kernel, x_eval=b_arr).density
    out = dens + C * _interval_distance(b_arr, summary.mean, summary.sd, alpha) ** 2
    return float(out[0]) if np.ndim(b) == 0 else out


def mdh_min_b(summary: ProjectionSummary, h: float, kernel: PolyExpKernel, C: float, alpha: float) -> Tuple[float, float]:
    """
    Grid search over [mean - (alpha+1) sd, mean + (alpha+1) sd] followed by
    ternary search inside the best cell. The mean itself is always a
    candidate, so the result never exceeds the density at the mean.
    """
    mu, sd = summary.mean, summary.sd
    half = (alpha + 1.0) * sd
    grid = np.linspace(mu - half, mu + half, MDH_GRID)
    values = mdh_penalized_density(summary, grid, h, kernel, C, alpha)
    k = int(np.argmin(values))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, MDH_GRID - 1)]
    width = 1e-6 * sd
    while hi - lo > width:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if mdh_penalized_density(summary, m1, h, kernel, C, alpha) <= mdh_penalized_density(summary, m2, h, kernel, C, alpha):
            hi = m2
        else:
            lo = m1
    b = 0.5 * (lo + hi)
    value = mdh_penalized_density(summary, b, h, kernel, C, alpha)
    if values[k] < value:
        b, value = float(grid[k]), float(values[k])
    at_mean = mdh_penalized_density(summary, mu, h, kernel, C, alpha)
    if at_mean < value:
        b, value = mu, at_mean
    return float(b), float(value)


def _mdh_objective(X: np.ndarray, S: np.ndarray, h: float, kernel: PolyExpKernel, C: float, alpha: float):
    xbar = X.mean(axis=0)
    n = X.shape[0]
    knorm = kernel.normalized()

    def f_and_grad(w):
        v, norm = _unit(w)
        summary = ProjectionSummary.of(X, v)
        b, value = mdh_min_b(summary, h, kernel, C, alpha)
        # envelope gradient: b held at its minimiser
        grad_v = np.array([
            fk_sum(summary.sample.with_weights(X[:, j]), h, knorm, x_eval=[b], mode="dsum").dksum[0]
            for j in range(X.shape[1])
        ]) / (n * h * h)
        mu, sd = summary.mean, summary.sd
        dmu = xbar
        dsd = S @ v / sd
        if b < mu - alpha * sd:
            grad_v += 2.0 * C * (mu - alpha * sd - b) * (dmu - alpha * dsd)
        elif b > mu + alpha * sd:
            grad_v += 2.0 * C * (b - mu - alpha * sd) * (-dmu - alpha * dsd)
        grad_w = (grad_v - v * (v @ grad_v)) / norm
        return value, grad_w

    return f_and_grad


def _rises_to_peak(profile: np.ndarray) -> bool:
    """
    Read outward from profile[0], the density stays above profile[0] until it
    reaches an interior local maximum.
    """
    for k in range(1, len(profile) - 1):
        if not profile[k] > profile[0]:
            return False
        if profile[k] >= profile[k - 1] and profile[k] > profile[k + 1]:
            return True
    return False


def _is_separating(summary: ProjectionSummary, b: float, h: float, kernel: PolyExpKernel) -> bool:
    """
    b is a strict local minimum of the projected density and the lowest point
    between the nearest grid maxima on either side.
    """
    lo, hi = summary.sample.values[0], summary.sample.values[-1]
    if not lo < b < hi:
        return False
    delta = (hi - lo) / (MDH_GRID - 1)
    near = kde(summary.sample, h, kernel, x_eval=[b - delta, b, b + delta]).density
    if not (near[0] > near[1] and near[2] > near[1]):
        return False
    grid = np.linspace(lo, hi, MDH_GRID)
    dens = kde(summary.sample, h, kernel, x_eval=grid).density
    for outward in (dens[grid < b - 0.5 * delta][::-1], dens[grid > b + 0.5 * delta]):
        if not _rises_to_peak(np.concatenate([[near[1]], outward])):
            return False
    return True


@dataclass(frozen=True)
class MDHModel:
    v: np.ndarray
    b: float
    alpha_final: float
    density_at_b: float
    h: float
    C: float
    separating: bool
    kernel: PolyExpKernel

    def predict_side(self, X) -> np.ndarray:
        """+1 for points with x.v >= b, -1 otherwise."""
        X = as_matrix(X)
        if X.shape[1] != self.v.size:
            raise InputError(f"model expects {self.v.size} columns, got {X.shape[1]}")
        return np.where(X @ self.v - self.b >= 0.0, 1, -1)

    def to_json(self) -> str:
        return json.dumps({
            "model": "mdh",
            "kernel": _kernel_json(self.kernel),
            "v": _hex_array(self.v),
            "b": float(self.b).hex(),
            "alpha_final": float(self.alpha_final).hex(),
            "density_at_b": float(self.density_at_b).hex(),
            "h": float(self.h).hex(),
            "C": float(self.C).hex(),
            "separating": self.separating,
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MDHModel":
        payload = json.loads(text)
        _check_kind(payload, "mdh")
        return cls(
            v=_from_hex(payload["v"]),
            b=float.fromhex(payload["b"]),
            alpha_final=float.fromhex(payload["alpha_final"]),
            density_at_b=float.fromhex(payload["density_at_b"]),
            h=float.fromhex(payload["h"]),
            C=float.fromhex(payload["C"]),
            separating=bool(payload["separating"]),
            kernel=_kernel_from_json(payload["kernel"]),
        )


def default_penalty(summary: ProjectionSummary, h: float, kernel: PolyExpKernel) -> float:
    """10 * (max projected density) / sd^2."""
    grid = np.linspace(summary.sample.values[0], summary.sample.values[-1], MDH_GRID)
    peak = float(np.max(kde(summary.sample, h, kernel, x_eval=grid).density))
    return 10.0 * peak / summary.sd ** 2


def mdh_fit(
    X,
    v0=None,
    hmult: float = 1.0,
    kernel: Optional[PolyExpKernel] = None,
    alphamax: float = 1.0,
    C: Optional[float] = None,
) -> MDHModel:
    """
    Minimum density hyperplane through continuation in alpha.

    h is chosen once on the initial projection. Each of the alpha stages
    re-optimises the direction from the previous one; the last stage whose
    split is a strict density minimum is returned.
    """
    kernel = kernel or default_kernel()
    X = as_matrix(X)
    n, d = X.shape
    if n < 10 or d < 2:
        raise InputError(f"MDH needs n >= 10 and d >= 2, got n={n}, d={d}")
    if alphamax < 0 or not hmult > 0:
        raise InputError(f"need alphamax >= 0 and hmult > 0, got {alphamax}, {hmult}")
    S = covariance(X)
    if v0 is None:
        v0 = sym_eig(S)[1][:, 0]
    w, _ = _unit(v0, "v0")
    if w.size != d:
        raise InputError(f"v0 has {w.size} entries, X has {d} columns")

    summary = ProjectionSummary.of(X, w)
    if not summary.sd > 0:
        raise InputError("data have zero variance along v0")
    h = hmult * silverman_bandwidth(summary.sample, kernel)
    if C is None:
        C = default_penalty(summary, h, kernel)
    elif C < 0:
        raise InputError(f"penalty C must be non-negative, got {C}")

    fallback = None
    best = None
    for alpha in np.linspace(0.0, alphamax, MDH_STAGES):
        result = qn_minimize(_mdh_objective(X, S, h, kernel, C, alpha), w, max_iter=MDH_MAX_ITER)
        if result.degraded:
            logger.warning("MDH stage alpha=%.3g ended with status %s", alpha, result.status)
        w, _ = _unit(result.x)
        summary = ProjectionSummary.of(X, w)
        b, _ = mdh_min_b(summary, h, kernel, C, alpha)
        density = float(kde(summary.sample, h, kernel, x_eval=[b]).density[0])
        model = MDHModel(
            v=w, b=b, alpha_final=float(alpha), density_at_b=density,
            h=h, C=C, separating=True, kernel=kernel,
        )
        if fallback is None:
            fallback = model
        valid = _is_separating(summary, b, h, kernel)
        logger.debug("MDH alpha=%.3g b=%.4g density=%.4g valid=%s", alpha, b, density, valid)
        if valid:
            best = model

    if best is None:
        logger.warning("no separating hyperplane found, returning the alpha=0 solution")
        return replace(fallback, separating=False)
    logger.info("MDH finished at alpha=%.3g, density at split %.4g", best.alpha_final, best.density_at_b)
    return best


# ---------------------------------------------------------------------------
# Projection pursuit regression
# ---------------------------------------------------------------------------

def _check_ppr_args(X, r, h):
    if not h > 0:
        raise InputError(f"bandwidth h must be positive, got {h}")
    X = as_matrix(X)
    r = np.asarray(r, dtype=float).ravel()
    if r.size != X.shape[0]:
        raise InputError(f"X has {X.shape[0]} rows but r has {r.size} entries")
    return X, r


def _loo_nw(sample: WeightedSample, r: np.ndarray, h: float, kernel: PolyExpKernel):
    b0 = kernel.beta0
    sr = fk_sum(sample.with_weights(r), h, kernel, mode="both")
    s1 = fk_sum(sample.with_weights(np.ones_like(r)), h, kernel, mode="both")
    loo_r = sr.ksum - b0 * r
    loo_1 = np.maximum(s1.ksum - b0, settings.DENSITY_FLOOR)
    return loo_r / loo_1, loo_1, sr.dksum, s1.dksum


def ppr_phi(w, X, r, h: float, kernel: Optional[PolyExpKernel] = None) -> float:
    """Sum of squared leave-one-out Nadaraya-Watson residuals along w."""
    X, r = _check_ppr_args(X, r, h)
    kernel = (kernel or default_kernel()).normalized()
    u, _ = _unit(w)
    rhat, _, _, _ = _loo_nw(WeightedSample.create(X @ u), r, h, kernel)
    return float(np.sum((r - rhat) ** 2))


def ppr_grad(w, X, r, h: float, kernel: Optional[PolyExpKernel] = None) -> np.ndarray:
    """
    dphi/dp = (2/h) (T1 - T2 + T3) with
    T1 = D(rhat (rhat - r) / S1), T2 = r D((rhat - r) / S1),
    T3 = ((rhat - r) / S1) (rhat D(1) - D(r)),
    where S1 is the leave-one-out sum of ones and D the derivative sum.
    """
    X, r = _check_ppr_args(X, r, h)
    kernel = (kernel or default_kernel()).normalized()
    w = np.asarray(w, dtype=float).ravel()
    u, norm = _unit(w)
    p = X @ u
    sample = WeightedSample.create(p)
    rhat, s1, d_r, d_1 = _loo_nw(sample, r, h, kernel)
    e = (rhat - r) / s1
    t1 = fk_sum(sample.with_weights(rhat * e), h, kernel, mode="dsum").dksum
    t2 = r * fk_sum(sample.with_weights(e), h, kernel, mode="dsum").dksum
    t3 = e * (rhat * d_1 - d_r)
    dp = 2.0 / h * (t1 - t2 + t3)
    return _radial_chain(X, w, norm, p, dp)


@dataclass(frozen=True)
class PPRComponent:
    w: np.ndarray
    h: float
    projections: np.ndarray
    residuals: np.ndarray
    smoother: str = "nw"

    def predict(self, X, kernel: PolyExpKernel) -> np.ndarray:
        X = as_matrix(X)
        return regress(self.projections, self.residuals, self.h, kernel, x_eval=X @ self.w, method=self.smoother).fitted

    def fitted(self, kernel: PolyExpKernel) -> np.ndarray:
        return regress(self.projections, self.residuals, self.h, kernel, method=self.smoother).fitted

    def to_dict(self) -> dict:
        return {
            "w": _hex_array(self.w),
            "h": float(self.h).hex(),
            "projections": _hex_array(self.projections),
            "residuals": _hex_array(self.residuals),
            "smoother": self.smoother,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PPRComponent":
        return cls(
            w=_from_hex(payload["w"]),
            h=float.fromhex(payload["h"]),
            projections=_from_hex(payload["projections"]),
            residuals=_from_hex(payload["residuals"]),
            smoother=payload.get("smoother", "nw"),
        )


@dataclass(frozen=True)
class PPRModel:
    mu: float
    components: Tuple[PPRComponent, ...]
    kernel: PolyExpKernel

    @property
    def nterms(self) -> int:
        return len(self.components)

    def predict(self, X) -> np.ndarray:
        return ppr_predict(self, X)

    def to_json(self) -> str:
        return json.dumps({
            "model": "ppr",
            "kernel": _kernel_json(self.kernel),
            "mu": float(self.mu).hex(),
            "components": [c.to_dict() for c in self.components],
        })

    @classmethod
    def from_json(cls, text: str) -> "PPRModel":
        payload = json.loads(text)
        _check_kind(payload, "ppr")
        return cls(
            mu=float.fromhex(payload["mu"]),
            components=tuple(PPRComponent.from_dict(c) for c in payload["components"]),
            kernel=_kernel_from_json(payload["kernel"]),
        )


def ppr_fit_component(
    X,
    r,
    w0=None,
    kernel: Optional[PolyExpKernel] = None,
    smoother: str = "nw",
    max_iter: int = PPR_MAX_ITER,
    grad_tol: float = PPR_GRAD_TOL,
) -> PPRComponent:
    """
    Fit one ridge function to the residuals r.

    The direction starts at the ridge least-squares fit and is optimised at a
    pilot bandwidth sqrt(lambda_max) / n^0.2; the final bandwidth minimises
    the leave-one-out SSE over [pilot / 50, pilot].
    """
    kernel = kernel or default_kernel()
    if smoother not in REGRESSION_METHODS:
        raise InputError(f"smoother must be one of {REGRESSION_METHODS}, got '{smoother}'")
    X = as_matrix(X)
    r = np.asarray(r, dtype=float).ravel()
    n = X.shape[0]
    if n < 20:
        raise InputError(f"PPR needs at least 20 rows, got {n}")
    values, vectors = sym_eig(covariance(X))
    if not values[0] > 0:
        raise InputError("X has zero variance")
    if w0 is None:
        w0 = ridge_ols(X, r, PPR_RIDGE)
        if not np.linalg.norm(w0) > 0:
            w0 = vectors[:, 0]
    pilot = math.sqrt(values[0]) / n ** 0.2

    def f_and_grad(w):
        return ppr_phi(w, X, r, pilot, kernel), ppr_grad(w, X, r, pilot, kernel)

    result = qn_minimize(f_and_grad, w0, max_iter=max_iter, grad_tol=grad_tol)
    if result.degraded:
        logger.warning("PPR direction search ended with status %s", result.status)
    w, _ = _unit(result.x)
    sample = WeightedSample.create(X @ w)
    h = scalar_minimize(lambda t: loo_sse_objective(t, sample, r, kernel, smoother), pilot / 50.0, pilot)
    logger.debug("PPR component: %d iterations, pilot h %.4g, final h %.4g", result.n_iter, pilot, h)
    return PPRComponent(w=w, h=h, projections=X @ w, residuals=r.copy(), smoother=smoother)


def ppr_fit(X, y, nterms: int, kernel: Optional[PolyExpKernel] = None, smoother: str = "nw") -> PPRModel:
    """Forward stagewise fit: each component models the residuals of the previous ones."""
    if nterms < 1:
        raise InputError(f"nterms must be at least 1, got {nterms}")
    kernel = kernel or default_kernel()
    X = as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    if y.size != X.shape[0]:
        raise InputError(f"X has {X.shape[0]} rows but y has {y.size} entries")
    if not np.all(np.isfinite(y)):
        raise InputError("responses must be finite")
    mu = float(np.mean(y))
    r = y - mu
    components = []
    for j in range(nterms):
        comp = ppr_fit_component(X, r, kernel=kernel, smoother=smoother)
        r = r - comp.fitted(kernel)
        components.append(comp)
        logger.info("PPR term %d/%d: h = %.4g, training SSE %.6g", j + 1, nterms, comp.h, float(r @ r))
    return PPRModel(mu=mu, components=tuple(components), kernel=kernel)


def ppr_predict(model: PPRModel, Xnew) -> np.ndarray:
    X = as_matrix(Xnew)
    out = np.full(X.shape[0], model.mu)
    for comp in model.components:
        if X.shape[1] != comp.w.size:
            raise InputError(f"model expects {comp.w.size} columns, got {X.shape[1]}")
        out += comp.predict(X, model.kernel)
    return out
