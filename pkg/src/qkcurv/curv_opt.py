"""Search over 2-planes for extremal sectional and quaternionic sectional curvature.

Every objective here is a quadratic form in the Plücker coordinates
``w = X ^ Y`` of an orthonormal pair, so one evaluation is ``w . Q w``.  The
search draws random planes, keeps the best as starting points and refines
them by projected gradient steps on pairs of orthonormal vectors.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from .errors import DegeneratePlaneError
from .qk_models import QKPoint, quaternionic_span
from .report import CheckRecord, CheckReport, lower, near, upper
from .tensor_core import sectional
from .twistor import TwistorPoint, VerticalVec, build_twistor, sectional_rbar, sectional_rbar_last_summand

OBJECTIVES = ("kappa", "kappa_h", "sec_rbar")
MODES = ("min", "max")
EXACT_TOL = 1e-12
THETA_TOL = 1e-3

Model = Union[QKPoint, TwistorPoint]


@lru_cache(maxsize=None)
def _pairs(dim: int) -> tuple[np.ndarray, np.ndarray]:
    ia, ib = np.triu_indices(dim, 1)
    return ia, ib


@dataclass(frozen=True, eq=False)
class Plane:
    """Orthonormal basis ``(x, y)`` of a 2-plane."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x, y = np.asarray(self.x, float), np.asarray(self.y, float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("plane vectors must be 1-d arrays of equal length")
        gram = np.array([[x @ x, x @ y], [y @ x, y @ y]])
        if np.abs(gram - np.eye(2)).max() > 1e-10:
            raise ValueError("plane basis is not orthonormal")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def span(cls, x, y, rtol: float = 1e-12) -> "Plane":
        """Gram-Schmidt on ``(x, y)``."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        nx = np.linalg.norm(x)
        if nx == 0.0:
            raise DegeneratePlaneError("first vector is zero")
        u = x / nx
        v = y - (u @ y) * u
        nv = np.linalg.norm(v)
        if nv <= math.sqrt(rtol) * np.linalg.norm(y) or nv == 0.0:
            raise DegeneratePlaneError("vectors are collinear")
        return cls(u, v / nv)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    def rotated(self, angle: float) -> "Plane":
        c, s = math.cos(angle), math.sin(angle)
        return Plane(c * self.x + s * self.y, -s * self.x + c * self.y)

    def plucker(self) -> np.ndarray:
        return plucker(self.x, self.y)

    def to_json(self) -> dict:
        return {"x": self.x.tolist(), "y": self.y.tolist()}


def plucker(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Coordinates of ``x ^ y`` on the lexicographic basis; works on stacks of vectors."""
    ia, ib = _pairs(x.shape[-1])
    return x[..., ia] * y[..., ib] - x[..., ib] * y[..., ia]


def orthonormalize(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise Gram-Schmidt for stacks of vector pairs."""
    x = x / np.linalg.norm(x, axis=-1, keepdims=True)
    y = y - np.sum(x * y, axis=-1, keepdims=True) * x
    return x, y / np.linalg.norm(y, axis=-1, keepdims=True)


def random_planes(dim: int, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """``count`` planes from the rotation-invariant distribution, as two (count, dim) arrays."""
    x = rng.standard_normal((count, dim))
    y = rng.standard_normal((count, dim))
    return orthonormalize(x, y)


def _form_vector(J: np.ndarray) -> np.ndarray:
    """``j`` with ``<J X, Y> = j . (X ^ Y)``."""
    ia, ib = _pairs(J.shape[0])
    return J[ib, ia]


def quaternionic_cos2(p: QKPoint, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``cos^2`` of the Wirtinger angle, ``sum_a <J_a X, Y>^2 / |X ^ Y|^2``; vectorised."""
    w = plucker(x, y)
    num = sum((w @ _form_vector(J)) ** 2 for J in p.frame)
    area = np.sum(w * w, axis=-1)
    return np.clip(num / area, 0.0, 1.0)


def wirtinger_angle(p: QKPoint, plane: Plane) -> float:
    return float(math.acos(math.sqrt(float(quaternionic_cos2(p, plane.x, plane.y)))))


def kappa(p: QKPoint, plane: Plane) -> float:
    return sectional(p.R, plane.x, plane.y)


def kappa_h(p: QKPoint, plane: Plane) -> float:
    """Sectional curvature minus ``scal/(8n(n+2)) cos^2`` of the Wirtinger angle."""
    return kappa(p, plane) - p.c8 * float(quaternionic_cos2(p, plane.x, plane.y))


def sec_rbar(t: TwistorPoint, plane: Plane) -> float:
    if t.Rbar is None:
        raise ValueError("twistor point has no canonical curvature (eps=+1)")
    return sectional(t.Rbar, plane.x, plane.y)


def objective_form(objective: str, model: Model) -> np.ndarray:
    """Symmetric matrix ``Q`` on Plücker coordinates with objective ``= w . Q w`` for unit planes."""
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")
    if objective == "sec_rbar":
        if not isinstance(model, TwistorPoint) or model.Rbar is None:
            raise ValueError("sec_rbar needs a nearly Kähler twistor point")
        return -model.Rbar.matrix
    if not isinstance(model, QKPoint):
        raise ValueError(f"{objective} needs a quaternion-Kähler point")
    # R(X, Y, Y, X) = -w . M w
    Q = -model.R.matrix
    if objective == "kappa_h":
        for J in model.frame[:3]:
            j = _form_vector(J)
            Q = Q - model.c8 * np.outer(j, j)
    return 0.5 * (Q + Q.T)


def _values(S: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    w = plucker(x, y)
    return np.einsum("...a,ab,...b->...", w, S, w)


def _gradients(S: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``w . S w`` in x and y, projected off the current plane."""
    d = x.shape[-1]
    ia, ib = _pairs(d)
    v = plucker(x, y) @ S
    G = np.zeros(x.shape[:-1] + (d, d))
    G[..., ia, ib] = v
    G[..., ib, ia] = -v
    gx = 2.0 * np.einsum("...ij,...j->...i", G, y)
    gy = -2.0 * np.einsum("...ij,...j->...i", G, x)

    def project(g):
        return g - np.sum(g * x, -1, keepdims=True) * x - np.sum(g * y, -1, keepdims=True) * y

    return project(gx), project(gy)


@dataclass
class _BatchResult:
    value: float
    batch: int
    x: np.ndarray
    y: np.ndarray
    iterations: int
    converged: bool


def _refine(S, x, y, max_iter: int, gtol: float):
    """Adaptive-step ascent of ``w . S w`` for a stack of planes; never accepts a worse point."""
    f = _values(S, x, y)
    step = np.full(f.shape, 0.25)
    gnorm = np.full(f.shape, np.inf)
    it = 0
    for it in range(1, max_iter + 1):
        gx, gy = _gradients(S, x, y)
        gnorm = np.sqrt(np.sum(gx * gx, -1) + np.sum(gy * gy, -1))
        active = (gnorm > gtol) & (step > 1e-16)
        if not active.any():
            break
        xn, yn = orthonormalize(x + step[:, None] * gx, y + step[:, None] * gy)
        fn = _values(S, xn, yn)
        better = active & (fn > f)
        x = np.where(better[:, None], xn, x)
        y = np.where(better[:, None], yn, y)
        f = np.where(better, fn, f)
        step = np.where(better, np.minimum(step * 1.5, 4.0), step * 0.5)
    return x, y, f, it, gnorm


def _run_batch(S, dim, batch, seed, samples, starts, max_iter, gtol) -> _BatchResult:
    rng = np.random.default_rng([seed, batch])
    x, y = random_planes(dim, max(samples, starts, 1), rng)
    f = _values(S, x, y)
    order = np.argsort(-f, kind="stable")[: max(starts, 1)]
    rx, ry, rf, iters, gnorm = _refine(S, x[order], y[order], max_iter, gtol)
    k = int(np.argmax(rf))
    return _BatchResult(float(rf[k]), batch, rx[k], ry[k], iters, bool(gnorm[k] <= 1e-6))


@dataclass(frozen=True, eq=False)
class ExtremumResult:
    objective: str
    mode: str
    value: float
    witness: Plane
    iterations: int
    restarts: int
    samples: int
    converged: bool

    def to_json(self) -> dict:
        return {
            "objective": self.objective,
            "mode": self.mode,
            "value": self.value,
            "iterations": self.iterations,
            "restarts": self.restarts,
            "samples": self.samples,
            "converged": self.converged,
            "witness": self.witness.to_json(),
        }


def evaluate(objective: str, model: Model, plane: Plane) -> float:
    if objective == "kappa":
        return kappa(model, plane)
    if objective == "kappa_h":
        return kappa_h(model, plane)
    if objective == "sec_rbar":
        return sec_rbar(model, plane)
    raise ValueError(f"unknown objective {objective!r}")


def extremize(
    objective: str,
    model: Model,
    mode: str = "max",
    restarts: int = 16,
    seed: int = 0,
    samples: int = 20000,
    batches: int = 4,
    workers: int = 1,
    max_iter: int = 4000,
    gtol: float = 1e-10,
) -> ExtremumResult:
    """Best plane for ``objective`` after random sampling and local refinement.

    Work is split into ``batches`` independent batches, each with its own
    random stream seeded by ``(seed, batch)``.  Ties are broken by batch index,
    so the result does not depend on ``workers``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if restarts < 1 or samples < 0 or batches < 1:
        raise ValueError("restarts and batches must be positive, samples non-negative")
    sign = 1.0 if mode == "max" else -1.0
    S = sign * objective_form(objective, model)
    dim = model.dim
    jobs = []
    for b in range(batches):
        n_samp = samples // batches + (1 if b < samples % batches else 0)
        n_start = restarts // batches + (1 if b < restarts % batches else 0)
        if n_start == 0 and n_samp == 0:
            continue
        jobs.append((S, dim, b, seed, n_samp, n_start, max_iter, gtol))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda args: _run_batch(*args), jobs))
    else:
        results = [_run_batch(*args) for args in jobs]
    best = min(results, key=lambda r: (-r.value, r.batch))
    plane = Plane.span(best.x, best.y)
    return ExtremumResult(
        objective=objective,
        mode=mode,
        value=evaluate(objective, model, plane),
        witness=plane,
        iterations=max(r.iterations for r in results),
        restarts=restarts,
        samples=samples,
        converged=all(r.converged for r in results),
    )


def sample_values(objective: str, model: Model, count: int, seed: int) -> np.ndarray:
    """Objective on ``count`` random planes, with no refinement."""
    S = objective_form(objective, model)
    x, y = random_planes(model.dim, count, np.random.default_rng([seed, 2**31 - 1]))
    return _values(S, x, y)


def quaternionic_planes(p: QKPoint, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Planes ``(X, Y)`` with ``Y`` a unit vector in ``Q(X)``."""
    x = rng.standard_normal((count, p.dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    coef = rng.standard_normal((count, 3))
    coef /= np.linalg.norm(coef, axis=1, keepdims=True)
    y = sum(coef[:, [a]] * (x @ p.frame[a].T) for a in range(3))
    return x, y


def profile_planes(p: QKPoint, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Planes whose Wirtinger angle is spread over ``[0, pi/2]``."""
    x, q = quaternionic_planes(p, count, rng)
    z = rng.standard_normal((count, p.dim))
    for u in (x, *(x @ p.frame[a].T for a in range(3))):
        z -= np.sum(z * u, 1, keepdims=True) * u
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    angle = rng.uniform(0.0, 0.5 * math.pi, (count, 1))
    return x, np.cos(angle) * q + np.sin(angle) * z


def _witness(p: QKPoint, plane: Plane) -> dict:
    out = plane.to_json()
    out["theta"] = wirtinger_angle(p, plane)
    return out


def model_descriptor(p: QKPoint, eps: Optional[int] = None) -> dict:
    out = {"family": p.family, "n": p.n, "scal": p.scal, "dim": p.dim}
    if eps is not None:
        out["eps"] = eps
    return out


def verify_bounds(
    p: QKPoint,
    family: str,
    restarts: int = 16,
    seed: int = 0,
    samples: int = 20000,
    opt_tol: float = 1e-6,
    identity_tol: float = 1e-9,
    workers: int = 1,
    profile_count: int = 1000,
) -> CheckReport:
    """Sectional-curvature bounds and the quaternionic sectional curvature sign."""
    if family not in ("hpn", "wolf_general"):
        raise ValueError(f"family must be 'hpn' or 'wolf_general', got {family!r}")
    if family == "hpn" and p.family != "hpn":
        raise ValueError(f"family 'hpn' does not match a {p.family} model")
    start = time.perf_counter()
    report = CheckReport("bounds", model_descriptor(p), seed=seed)
    n, scal = p.n, p.scal
    c16 = scal / (16 * n * (n + 2))
    opts = dict(restarts=restarts, seed=seed, samples=samples, workers=workers)

    kmax = extremize("kappa", p, "max", **opts)
    kmin = extremize("kappa", p, "min", **opts)
    if family == "hpn":
        report.add(near("kappa_max", "max sectional curvature = scal/(4n(n+2)) on quaternionic planes",
                        kmax.value, 4 * c16, opt_tol, _witness(p, kmax.witness)))
        report.add(upper("kappa_max_witness_quaternionic", "Wirtinger angle of the maximising plane is 0",
                         wirtinger_angle(p, kmax.witness), THETA_TOL))
        report.add(near("kappa_min", "min sectional curvature = scal/(16n(n+2)) on totally real planes",
                        kmin.value, c16, opt_tol, _witness(p, kmin.witness)))
        report.add(lower("kappa_min_witness_totally_real", "Wirtinger angle of the minimising plane is pi/2",
                         wirtinger_angle(p, kmin.witness), 0.5 * math.pi - THETA_TOL))
    else:
        report.add(near("kappa_max", "max sectional curvature = scal/(2n(n+2))",
                        kmax.value, 8 * c16, opt_tol, _witness(p, kmax.witness)))
        rec = lower("kappa_min", "sectional curvature >= scal/(8n(n+2)) cos^2(theta) >= 0",
                    kmin.value, -opt_tol, _witness(p, kmin.witness))
        rec.reason = "observed minimum; sharpness is not asserted"
        report.add(rec)

    raw = sample_values("kappa_h", p, samples, seed)
    report.add(lower("profile_lower_bound_sampled", "kappa - scal/(8n(n+2)) cos^2(theta) >= 0 on sampled planes",
                     float(raw.min()), -opt_tol))
    khmin = extremize("kappa_h", p, "min", **opts)
    report.add(lower("kappa_h_min", "quaternionic sectional curvature >= 0",
                     khmin.value, -opt_tol, _witness(p, khmin.witness)))
    if family == "wolf_general":
        report.add(near("kappa_h_zero_witness", "quaternionic sectional curvature attains 0",
                        khmin.value, 0.0, opt_tol, _witness(p, khmin.witness)))

    rng = np.random.default_rng([seed, 7])
    qx, qy = quaternionic_planes(p, max(samples // 4, 1), rng)
    qvals = _values(objective_form("kappa", p), qx, qy)
    report.add(lower("quaternionic_planes", "sectional curvature of quaternionic planes >= scal/(8n(n+2))",
                     float(qvals.min()), 2 * c16 - opt_tol))

    if family == "hpn":
        px, py = profile_planes(p, profile_count, rng)
        kv = _values(objective_form("kappa", p), px, py)
        cos2 = quaternionic_cos2(p, px, py)
        resid = np.abs(kv - c16 * (1 + 3 * cos2)).max()
        report.add(upper("hpn_profile", "kappa = scal/(16n(n+2)) (1 + 3 cos^2(theta)) pointwise",
                         float(resid), identity_tol * max(1.0, c16)))
        coef, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(cos2), cos2]), kv, rcond=None)
        report.add(near("hpn_profile_fit_constant", "fitted constant term scal/(16n(n+2))",
                        float(coef[0]), c16, identity_tol * max(1.0, c16)))
        report.add(near("hpn_profile_fit_slope", "fitted cos^2 coefficient 3 scal/(16n(n+2))",
                        float(coef[1]), 3 * c16, identity_tol * max(1.0, c16)))
    report.wall_time = time.perf_counter() - start
    return report


def _numerator(t: TwistorPoint, xi1: np.ndarray, xi2: np.ndarray) -> float:
    return t.Rbar(xi1, xi2, xi2, xi1)


def _kappa_h_numerator(p: QKPoint, x1: np.ndarray, x2: np.ndarray) -> float:
    quat = sum(float((J @ x1) @ x2) ** 2 for J in p.frame)
    return p.R(x1, x2, x2, x1) - p.c8 * quat


def equivalence_check(
    p: QKPoint,
    restarts: int = 16,
    seed: int = 0,
    samples: int = 20000,
    planes: int = 1000,
    opt_tol: float = 1e-6,
    identity_tol: float = 1e-9,
    workers: int = 1,
) -> CheckReport:
    """Relate the twistor canonical curvature to the base quaternionic sectional curvature."""
    start = time.perf_counter()
    t = build_twistor(p, -1)
    report = CheckReport("equivalence", model_descriptor(p, -1), seed=seed)
    rng = np.random.default_rng([seed, 11])
    h = p.dim
    unit = 2 * p.n * (p.n + 2) / p.scal  # det(J*, K*)

    closed_gap = last_max = fam_gap = 0.0
    for _ in range(planes):
        x1, x2 = rng.standard_normal((2, h))
        a1, b1, a2, b2 = rng.standard_normal(4)
        v1, v2 = VerticalVec(a1, b1), VerticalVec(a2, b2)
        xi1, xi2 = t.lift(x1, v1), t.lift(x2, v2)
        assembled = t.Rbar(xi1, xi2, xi2, xi1)
        closed = sectional_rbar(t, x1, v1, x2, v2)
        closed_gap = max(closed_gap, abs(closed - assembled) / max(1.0, abs(assembled)))

        # V1 = J*, V2 = s K* with det(V1, V2) = <I x2, x1> / 2
        s = 0.5 * float((p.I @ x2) @ x1) / unit
        last_max = max(last_max, abs(sectional_rbar_last_summand(t, x1, VerticalVec(1, 0), x2, VerticalVec(0, s))))

        xi1 = t.lift(x1, VerticalVec(1, 0))
        vals = [_numerator(t, xi1, t.lift(x2, VerticalVec(0, s_))) for s_ in (-1.0, 0.0, 1.0)]
        quad = 0.5 * (vals[0] + vals[2]) - vals[1]
        lin = 0.5 * (vals[2] - vals[0])
        fam_min = vals[1] - lin * lin / (4 * quad)
        target = _kappa_h_numerator(p, x1, x2)
        fam_gap = max(fam_gap, abs(fam_min - target) / max(1.0, abs(target)))

    report.add(upper("closed_form_vs_assembled", "block formula for Rbar(xi1, xi2, xi2, xi1) matches the assembled tensor",
                     closed_gap, identity_tol))
    report.add(upper("det_choice_zeroes_last_summand", "det(V1, V2) = g(I X2, X1)/2 kills the last summand",
                     last_max, EXACT_TOL))
    report.add(upper("vertical_minimum_is_kappa_h", "min over vertical parts of the Rbar numerator = kappa_H numerator",
                     fam_gap, identity_tol))

    # totally real base plane, no vertical part: every correction vanishes
    x1 = rng.standard_normal(h)
    basis, _ = quaternionic_span(p, x1)
    x2 = rng.standard_normal(h)
    x2 -= basis.T @ (basis @ x2)
    zero = VerticalVec(0.0, 0.0)
    gap = abs(sectional_rbar(t, x1, zero, x2, zero) - p.R(x1, x2, x2, x1))
    report.add(upper("totally_real_horizontal", "horizontal totally real plane: Rbar numerator = base numerator",
                     gap, identity_tol * max(1.0, abs(p.R(x1, x2, x2, x1)))))

    opts = dict(restarts=restarts, seed=seed, samples=samples, workers=workers)
    sec = extremize("sec_rbar", t, "min", **opts)
    kh = extremize("kappa_h", p, "min", **opts)
    report.add(lower("sec_rbar_min", "canonical sectional curvature on the twistor space >= 0",
                     sec.value, -opt_tol, sec.witness.to_json()))
    report.add(lower("kappa_h_min", "quaternionic sectional curvature on the base >= 0",
                     kh.value, -opt_tol, _witness(p, kh.witness)))
    agree = (sec.value >= -opt_tol) == (kh.value >= -opt_tol)
    report.add(CheckRecord("nonnegativity_equivalence", "sec(Rbar) >= 0 iff kappa_H >= 0",
                           None, None, agree,
                           reason="" if agree else "signs of the two minima disagree"))
    report.wall_time = time.perf_counter() - start
    return report
