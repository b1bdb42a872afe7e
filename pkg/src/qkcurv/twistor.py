"""Tangent-space model of the twistor space over a quaternion-Kähler point.

The fibre point is ``I = J_1`` of the base frame.  The total space is
``H + V`` with ``H`` the horizontal lift of the base tangent space (indices
``0 .. 4n-1``) and ``V`` spanned by ``J* = J_2`` and ``K* = J_3``.  Total-space
coordinates use the orthonormal frame ``u_1 = J*/|J*|``, ``u_2 = K*/|K*|`` on
``V`` (indices ``4n`` and ``4n+1``), with ``(u_1, u_2)`` positively oriented.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegeneratePlaneError
from .qk_models import QKPoint, curvature_endomorphism
from .tensor_core import CurvTensor, wedge_norm_sq


@dataclass(frozen=True)
class VerticalVec:
    """``a J* + b K*`` in the (non-normalised) basis of the vertical space."""

    a: float
    b: float


@dataclass(frozen=True, eq=False)
class TwistorPoint:
    base: QKPoint
    eps: int
    c2: float
    Jz: np.ndarray
    tau: Optional[np.ndarray] = field(default=None, repr=False)
    Rbar: Optional[CurvTensor] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def scal(self) -> float:
        return self.base.scal

    @property
    def dim_h(self) -> int:
        return 4 * self.base.n

    @property
    def dim(self) -> int:
        return self.dim_h + 2

    @property
    def vertical_norm_sq(self) -> float:
        """``|J*|^2 = |K*|^2 = 4 n c^2``."""
        return 4 * self.n * self.c2

    def vertical_gram(self) -> np.ndarray:
        """``g_c(A*, B*) = -c^2 tr(AB)`` on the basis (J*, K*), from the frame matrices."""
        J, K = self.base.frame[1], self.base.frame[2]
        return -self.c2 * np.array([[np.trace(J @ J), np.trace(J @ K)], [np.trace(K @ J), np.trace(K @ K)]])

    def lift(self, x: np.ndarray, v: VerticalVec = VerticalVec(0.0, 0.0)) -> np.ndarray:
        """Total-space coordinates of ``X~ + V``."""
        nu = np.sqrt(self.vertical_norm_sq)
        return np.concatenate([np.asarray(x, float), [v.a * nu, v.b * nu]])

    def det(self, v1: VerticalVec, v2: VerticalVec) -> float:
        """Oriented area of (V1, V2): ``(a1 b2 - a2 b1) |J*|^2``, which is ``2n(n+2)/scal`` per unit for eps=-1."""
        return (v1.a * v2.b - v2.a * v1.b) * self.vertical_norm_sq

    def to_json(self) -> dict:
        payload = {
            "schema": "qkcurv.tensor/1",
            "kind": "twistor-point",
            "blocks": {"H": self.dim_h, "V": 2},
            "eps": self.eps,
            "c2": self.c2,
            "base": self.base.to_json(),
            "complex_structure": self.Jz.ravel().tolist(),
        }
        if self.Rbar is not None:
            payload["curvature"] = self.Rbar.to_json()
        return payload


def build_twistor(p: QKPoint, eps: int = -1) -> TwistorPoint:
    """Twistor model with the Kähler (``eps=+1``) or nearly Kähler (``eps=-1``) parameters.

    Only the nearly Kähler branch carries torsion and the assembled curvature.
    """
    if eps not in (-1, 1):
        raise ValueError(f"eps must be +1 or -1, got {eps}")
    n, scal = p.n, p.scal
    c2 = (n + 2) / scal if eps == 1 else (n + 2) / (2 * scal)
    h = 4 * n
    D = h + 2
    Jz = np.zeros((D, D))
    Jz[:h, :h] = p.I
    # J*(u1) = eps (I J)* = eps K*, J*(u2) = eps (I K)* = -eps J*
    Jz[h + 1, h] = eps
    Jz[h, h + 1] = -eps
    t = TwistorPoint(p, eps, c2, Jz)
    if eps == 1:
        return t
    tau = torsion_tensor(t)
    t = TwistorPoint(p, eps, c2, Jz, tau)
    return TwistorPoint(p, eps, c2, Jz, tau, assemble_rbar(t))


def torsion_tensor(t: TwistorPoint) -> np.ndarray:
    """Totally skew torsion 3-form on the total space, in the orthonormal frame."""
    if t.eps != -1:
        raise ValueError("torsion is only defined on the nearly Kähler branch")
    p, h = t.base, t.dim_h
    nu = np.sqrt(t.vertical_norm_sq)
    base = np.zeros((t.dim,) * 3)
    for slot, A in ((h, p.frame[1]), (h + 1, p.frame[2])):
        # tau(A*, X, Y) = 1/4 <A I X, Y> and u = A*/nu
        base[slot, :h, :h] = 0.25 * (A @ p.I).T / nu
    # base is skew in its last two slots, so the cyclic sum is totally skew
    return base + np.transpose(base, (2, 0, 1)) + np.transpose(base, (1, 2, 0))


def torsion_eval(t: TwistorPoint, A: VerticalVec, x: np.ndarray, y: np.ndarray) -> float:
    """``tau(A*, X~, Y~) = 1/4 g(A I X, Y)`` with ``A = a J + b K``."""
    if t.eps != -1:
        raise ValueError("torsion vanishes identically on the Kähler branch")
    frame = t.base.frame
    Amat = A.a * frame[1] + A.b * frame[2]
    return 0.25 * float((Amat @ frame[0] @ x) @ y)


def torsion_form(t: TwistorPoint, xi: np.ndarray, eta: np.ndarray, zeta: np.ndarray) -> float:
    """Evaluate the torsion 3-form on arbitrary total-space vectors."""
    if t.tau is None:
        raise ValueError("torsion vanishes identically on the Kähler branch")
    return float(np.einsum("abc,a,b,c->", t.tau, xi, eta, zeta))


def assemble_rbar(t: TwistorPoint) -> CurvTensor:
    """Canonical-connection curvature from its horizontal, vertical and mixed blocks."""
    if t.eps != -1:
        raise ValueError("the curvature blocks are only available on the nearly Kähler branch")
    p = t.base
    n, h, D = p.n, t.dim_h, t.dim
    c8 = p.c8
    c4 = p.c4
    fibre = p.scal / (2 * n * (n + 2))
    I, J, K = p.frame
    full = np.zeros((D,) * 4)
    # <J e_x, e_y> = J[y, x]
    full[:h, :h, :h, :h] = p.R.full - c8 * (np.einsum("yx,zw->xyzw", J, J) + np.einsum("yx,zw->xyzw", K, K))
    v = slice(h, h + 2)
    g = np.eye(2)
    full[v, v, v, v] = fibre * (np.einsum("bc,ad->abcd", g, g) - np.einsum("ac,bd->abcd", g, g))
    # R(X1, X2, u2, u1) = -c4 <I X2, X1> det(u1, u2),  det(u1, u2) = 1
    mixed = -c4 * I  # mixed[x1, x2] = -c4 I[x1, x2] = R(x1, x2, u2, u1)
    full[:h, :h, h + 1, h] = mixed
    full[:h, :h, h, h + 1] = -mixed
    full[h + 1, h, :h, :h] = mixed
    full[h, h + 1, :h, :h] = -mixed
    return CurvTensor.from_full(full)


def sectional_rbar(t: TwistorPoint, x1: np.ndarray, v1: VerticalVec, x2: np.ndarray, v2: VerticalVec) -> float:
    """``Rbar(xi1, xi2, xi2, xi1)`` for ``xi_k = X_k~ + V_k`` from the closed block formula."""
    xi1, xi2 = t.lift(x1, v1), t.lift(x2, v2)
    area = wedge_norm_sq(xi1, xi2)
    if area <= 1e-12 * np.dot(xi1, xi1) * np.dot(xi2, xi2) or area == 0.0:
        raise DegeneratePlaneError("tangent vectors are collinear")
    p = t.base
    c8 = p.c8
    base = p.R(x1, x2, x2, x1)
    quat = sum(float((J @ x1) @ x2) ** 2 for J in p.frame)
    last = float((p.I @ x2) @ x1) - 2.0 * t.det(v1, v2)
    return base - c8 * quat + c8 * last**2


def sectional_rbar_last_summand(t: TwistorPoint, x1, v1: VerticalVec, x2, v2: VerticalVec) -> float:
    c8 = t.base.c8
    return c8 * (float((t.base.I @ x2) @ x1) - 2.0 * t.det(v1, v2)) ** 2


@dataclass(frozen=True)
class RicciFit:
    horizontal: float
    vertical: float
    mixed_defect: float
    horizontal_residual: float
    vertical_residual: float


def ricci_rbar(t: TwistorPoint) -> RicciFit:
    """Contract Rbar over the orthonormal frame and fit ``Ric = a g_H + b g_V``."""
    if t.Rbar is None:
        raise ValueError("Rbar is not assembled on the Kähler branch")
    ric = t.Rbar.ricci()
    h = t.dim_h
    hh, vv, hv = ric[:h, :h], ric[h:, h:], ric[:h, h:]
    a = float(np.trace(hh) / h)
    b = float(np.trace(vv) / 2)
    return RicciFit(
        horizontal=a,
        vertical=b,
        mixed_defect=float(np.linalg.norm(hv)),
        horizontal_residual=float(np.abs(hh - a * np.eye(h)).max()),
        vertical_residual=float(np.abs(vv - b * np.eye(2)).max()),
    )


def oneill_defect(t: TwistorPoint, x: np.ndarray, y: np.ndarray) -> float:
    """Compare ``tau_X Y`` with half of ``[R^M(X, Y), I]`` read as a vertical vector."""
    p, h = t.base, t.dim_h
    nu = np.sqrt(t.vertical_norm_sq)
    tau_xy = np.einsum("abc,a,b->c", t.tau, t.lift(x), t.lift(y))
    Rxy = curvature_endomorphism(p.R, x, y)
    comm = Rxy @ p.I - p.I @ Rxy
    # decompose on J, K using <A, B> = -tr(AB) / 4n
    coeffs = [-np.trace(comm @ A) / h for A in (p.frame[1], p.frame[2])]
    vertical = 0.5 * np.array(coeffs) * nu
    return float(np.abs(tau_xy[h:] - vertical).max() + np.abs(tau_xy[:h]).max())
