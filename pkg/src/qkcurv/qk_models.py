"""Pointwise quaternion-Kähler data for HP^n and Gr_2(C^{n+2})."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import ModelError
from .tensor_core import CurvTensor, EuclSpace, constant_curvature

FAMILIES = ("hpn", "gr2c")
IDENTITY_TOL = 1e-9


def default_scal(n: int) -> float:
    """Normalisation making the quaternionic-plane lower bound scal/(8n(n+2)) equal to 1."""
    return 8.0 * n * (n + 2)


@dataclass(frozen=True, eq=False)
class QKPoint:
    """Tangent space of a quaternion-Kähler manifold of dimension 4n at one point.

    ``frame[a]`` is the matrix of ``J_{a+1}`` acting on column vectors, with
    ``J_1 J_2 = J_3`` (and cyclic).
    """

    n: int
    scal: float
    R: CurvTensor
    frame: np.ndarray
    family: str = "custom"
    lie: Optional["LieModel"] = field(default=None, repr=False)

    @property
    def space(self) -> EuclSpace:
        return EuclSpace(4 * self.n)

    @property
    def dim(self) -> int:
        return 4 * self.n

    @property
    def I(self) -> np.ndarray:
        return self.frame[0]

    @property
    def c4(self) -> float:
        """scal / (4n(n+2))."""
        return self.scal / (4 * self.n * (self.n + 2))

    @property
    def c8(self) -> float:
        """scal / (8n(n+2))."""
        return self.scal / (8 * self.n * (self.n + 2))

    def frame_defect(self) -> float:
        eye = np.eye(self.dim)
        J = self.frame
        worst = 0.0
        for a in range(3):
            worst = max(worst, np.abs(J[a] @ J[a] + eye).max(), np.abs(J[a].T @ J[a] - eye).max())
        for a in range(3):
            b, c = (a + 1) % 3, (a + 2) % 3
            worst = max(worst, np.abs(J[a] @ J[b] - J[c]).max())
        return float(worst)

    def einstein_defect(self) -> float:
        """Relative deviation of Ric from (scal/4n) g."""
        lam = self.scal / self.dim
        return float(np.abs(self.R.ricci() - lam * np.eye(self.dim)).max() / abs(lam))

    def invariant_defects(self) -> dict[str, float]:
        scale = float(np.abs(self.R.matrix).max())
        return {
            "frame": self.frame_defect(),
            "pair_symmetry": self.R.pair_symmetry_defect / scale,
            "bianchi": self.R.bianchi_defect_norm / self.R.norm(),
            "einstein": self.einstein_defect(),
            "scal": abs(self.R.scal() - self.scal) / self.scal,
            "commutator": commutator_identity_defect(self),
        }

    def to_json(self) -> dict:
        return {
            "schema": "qkcurv.tensor/1",
            "kind": "qk-point",
            "family": self.family,
            "n": self.n,
            "scal": self.scal,
            "curvature": self.R.to_json(),
            "frame": [J.ravel().tolist() for J in self.frame],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "QKPoint":
        d = 4 * int(payload["n"])
        frame = np.array([np.reshape(J, (d, d)) for J in payload["frame"]])
        return cls(int(payload["n"]), float(payload["scal"]), CurvTensor.from_json(payload["curvature"]),
                   frame, payload.get("family", "custom"))


def _check_params(n: int, scal: float):
    if int(n) != n or n < 2:
        raise ModelError(f"quaternionic dimension must satisfy 4n >= 8, got n={n}")
    if not scal > 0:
        raise ModelError(f"scal must be positive, got {scal}")


def _require_valid(p: QKPoint, tol: float = IDENTITY_TOL) -> QKPoint:
    bad = {k: v for k, v in p.invariant_defects().items() if not v < tol}
    if bad:
        raise ModelError(f"{p.family} model failed self-checks: {bad}")
    return p


def quaternion_frame(n: int) -> np.ndarray:
    """Left multiplication by i, j, k on H^n = R^{4n}, coordinates (1, i, j, k) per block."""
    Li = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
    Lj = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=float)
    Lk = Li @ Lj
    eye = np.eye(n)
    return np.array([np.kron(eye, L) for L in (Li, Lj, Lk)])


def hpn_curvature(frame: np.ndarray, c: float) -> CurvTensor:
    g = np.eye(frame.shape[1])
    full = np.einsum("yz,xw->xyzw", g, g) - np.einsum("xz,yw->xyzw", g, g)
    for J in frame:
        # <J e_y, e_z> = J[z, y]
        full = full + (np.einsum("zy,wx->xyzw", J, J) - np.einsum("zx,wy->xyzw", J, J)
                       - 2.0 * np.einsum("yx,wz->xyzw", J, J))
    return CurvTensor.from_full(0.25 * c * full)


def build_hpn(n: int, scal: Optional[float] = None) -> QKPoint:
    """Quaternionic projective space, from its closed-form curvature tensor."""
    scal = default_scal(n) if scal is None else float(scal)
    _check_params(n, scal)
    frame = quaternion_frame(n)
    R = hpn_curvature(frame, scal / (4 * n * (n + 2)))
    return _require_valid(QKPoint(n, scal, R, frame, "hpn"))


# ---------------------------------------------------------------------------
# Lie-algebraic model of Gr_2(C^{n+2}) = SU(n+2)/S(U(2) x U(n))


def _inner(x: np.ndarray, y: np.ndarray) -> float:
    return float(-0.5 * np.real(np.trace(x @ y)))


def _bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


def _su_basis(N: int) -> list[np.ndarray]:
    out = []
    for p in range(N):
        for q in range(p + 1, N):
            e = np.zeros((N, N), complex)
            e[p, q], e[q, p] = 1.0, -1.0
            out.append(e)
            e = np.zeros((N, N), complex)
            e[p, q], e[q, p] = 1j, 1j
            out.append(e)
    for p in range(N - 1):
        e = np.zeros((N, N), complex)
        e[p, p], e[p + 1, p + 1] = 1j, -1j
        out.append(e)
    return out


def _gram_schmidt(mats: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for m in mats:
        v = m.copy()
        for u in out:
            v = v - _inner(v, u) * u
        nv = np.sqrt(_inner(v, v))
        if nv > 1e-12:
            out.append(v / nv)
    return out


@dataclass(frozen=True, eq=False)
class LieModel:
    """su(n+2) with the symmetric split k = s(u(2) + u(n)), m = off-diagonal blocks.

    Both bases are orthonormal for <X, Y> = -1/2 Re tr(XY).
    """

    n: int
    k_basis: list
    m_basis: list
    su2: list

    @classmethod
    def grassmannian(cls, n: int) -> "LieModel":
        N = n + 2
        k_raw, m = [], []
        for e in _su_basis(N):
            off = np.abs(e[:2, 2:]).max() > 0 or np.abs(e[2:, :2]).max() > 0
            (m if off else k_raw).append(e)
        m_basis = []
        for p in range(2):
            for q in range(n):
                for unit in (1.0, 1j):
                    e = np.zeros((N, N), complex)
                    e[p, 2 + q] = unit
                    e[2 + q, p] = -np.conj(unit)
                    m_basis.append(e)
        pauli = [np.array([[0, 1], [1, 0]], complex), np.array([[0, -1j], [1j, 0]]),
                 np.array([[1, 0], [0, -1]], complex)]
        su2 = []
        for s in pauli:
            a = np.zeros((N, N), complex)
            a[:2, :2] = -1j * s
            su2.append(a)
        return cls(n, _gram_schmidt(k_raw), m_basis, su2)

    def coords_m(self, x: np.ndarray) -> np.ndarray:
        return np.array([_inner(x, e) for e in self.m_basis])

    def coords_k(self, x: np.ndarray) -> np.ndarray:
        return np.array([_inner(x, e) for e in self.k_basis])

    def _residual(self, x: np.ndarray, basis: list) -> float:
        proj = sum(_inner(x, e) * e for e in basis)
        return float(np.abs(x - proj).max())

    def symmetric_space_defect(self) -> float:
        """max of the m-part of [k,k], the k-part of [k,m] and the m-part of [m,m]."""
        worst = 0.0
        k, m = self.k_basis, self.m_basis
        for a in k:
            for b in k:
                worst = max(worst, self._residual(_bracket(a, b), k))
            for b in m:
                worst = max(worst, self._residual(_bracket(a, b), m))
        for a in m:
            for b in m:
                worst = max(worst, self._residual(_bracket(a, b), k))
        return worst

    def ad_invariance_defect(self) -> float:
        """max |<[z, x], y> + <x, [z, y]>| over basis elements, z in k, x, y in m."""
        worst = 0.0
        for z in self.k_basis + self.su2:
            for x in self.m_basis:
                for y in self.m_basis:
                    worst = max(worst, abs(_inner(_bracket(z, x), y) + _inner(x, _bracket(z, y))))
        return worst

    def orthonormality_defect(self) -> float:
        basis = self.k_basis + self.m_basis
        gram = np.array([[_inner(a, b) for b in basis] for a in basis])
        return float(np.abs(gram - np.eye(len(basis))).max())

    def curvature(self) -> CurvTensor:
        """R(X, Y) Z = -[[X, Y], Z] on m, in the orthonormal basis of m."""
        m = self.m_basis
        d = len(m)
        brackets = [[_bracket(a, b) for b in m] for a in m]
        full = np.zeros((d,) * 4)
        for x in range(d):
            for y in range(x + 1, d):
                xy = brackets[x][y]
                for z in range(d):
                    full[x, y, z] = -self.coords_m(_bracket(xy, m[z]))
                full[y, x] = -full[x, y]
        # full[x, y, z, w] = <R(e_x, e_y) e_z, e_w>
        return CurvTensor.from_full(full)

    def bracket_curvature_defect(self, samples: int = 32, seed: int = 0) -> float:
        """Largest relative gap between ``R(X, Y, Y, X)`` and ``|[X, Y]|^2`` for random X, Y in m."""
        rng = np.random.default_rng(seed)
        R = self.curvature()
        worst = 0.0
        for _ in range(samples):
            x, y = rng.standard_normal((2, len(self.m_basis)))
            X = sum(c * e for c, e in zip(x, self.m_basis))
            Y = sum(c * e for c, e in zip(y, self.m_basis))
            b = _bracket(X, Y)
            sq = _inner(b, b)
            worst = max(worst, abs(R(x, y, y, x) - sq) / max(sq, 1.0))
        return worst

    def ad_on_m(self, a: np.ndarray) -> np.ndarray:
        """Matrix of ad(a) restricted to m, acting on column vectors."""
        return np.array([self.coords_m(_bracket(a, e)) for e in self.m_basis]).T

    def bracket_table_m(self) -> np.ndarray:
        """``T[x, y]`` = coordinates in k of [e_x, e_y] for the m-basis."""
        m = self.m_basis
        return np.array([[self.coords_k(_bracket(a, b)) for b in m] for a in m])


def build_gr2c(n: int, scal: Optional[float] = None) -> QKPoint:
    """Complex Grassmannian of 2-planes, with curvature from Lie brackets."""
    scal = default_scal(n) if scal is None else float(scal)
    _check_params(n, scal)
    lie = LieModel.grassmannian(n)
    R = lie.curvature()
    frame = []
    for a in lie.su2:
        J = lie.ad_on_m(a)
        lam = -np.trace(J @ J) / J.shape[0]
        frame.append(J / np.sqrt(lam))
    frame = np.array(frame)
    if np.abs(frame[0] @ frame[1] + frame[2]).max() < 1e-10:
        frame[2] = -frame[2]
    if np.abs(frame[0] @ frame[1] - frame[2]).max() > 1e-10:
        raise ModelError("su(2) frame does not close up to a quaternionic triple; bracket table is inconsistent")
    R = R * (scal / R.scal())
    p = QKPoint(n, scal, R, frame, "gr2c", lie)
    return _require_valid(p)


def build_model(family: str, n: int, scal: Optional[float] = None) -> QKPoint:
    if family == "hpn":
        return build_hpn(n, scal)
    if family == "gr2c":
        return build_gr2c(n, scal)
    raise ModelError(f"unknown model family {family!r}; expected one of {FAMILIES}")


# ---------------------------------------------------------------------------
# structural checks


def curvature_endomorphism(R: CurvTensor, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Matrix of R(X, Y) acting on column vectors."""
    return np.einsum("ijkl,i,j->lk", R.full, x, y)


def commutator_identity_defect(p: QKPoint, samples: int = 32, seed: int = 0) -> float:
    """Largest violation of ``[R(X,Y), I] = c4 (-<KX,Y> J + <JX,Y> K)`` over random unit X, Y.

    All three cyclic relabellings of the frame are tested; the defect is
    reported relative to the coefficient c4 = scal/(4n(n+2)).
    """
    rng = np.random.default_rng(seed)
    c4 = p.c4
    worst = 0.0
    for _ in range(samples):
        x, y = rng.standard_normal((2, p.dim))
        x /= np.linalg.norm(x)
        y /= np.linalg.norm(y)
        Rxy = curvature_endomorphism(p.R, x, y)
        for a in range(3):
            I, J, K = p.frame[a], p.frame[(a + 1) % 3], p.frame[(a + 2) % 3]
            lhs = Rxy @ I - I @ Rxy
            rhs = c4 * (-(K @ x) @ y * J + (J @ x) @ y * K)
            worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst / c4


def quaternionic_span(p: QKPoint, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases (as rows) of the quaternionic line L(X) and of Q(X) = span{IX, JX, KX}."""
    x = np.asarray(x, dtype=float)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise ValueError("quaternionic span of the zero vector")
    u = x / nx
    q = np.array([J @ u for J in p.frame])
    return np.vstack([u, q]), q


def with_artificial_frame(R: CurvTensor, n: int, scal: float) -> QKPoint:
    """Attach the standard quaternionic frame to an arbitrary tensor (no validation)."""
    return QKPoint(n, scal, R, quaternion_frame(n), "custom")


def sphere_with_frame(n: int, kappa: float = 1.0) -> QKPoint:
    """Round-sphere curvature with a quaternionic frame bolted on; not quaternion-Kähler."""
    R = constant_curvature(4 * n, kappa)
    return with_artificial_frame(R, n, R.scal())
