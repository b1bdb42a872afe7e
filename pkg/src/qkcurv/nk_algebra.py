"""Curvature algebra of a nearly Kähler tangent space with its canonical connection.

Inputs are a complex structure ``J``, the totally skew torsion ``tau`` (as a
full 3-array) and the canonical curvature ``Rbar``.  The module builds the
4-form ``sigma = sum_i tau_i ^ tau_i``, its two quadratic pieces, the split of
``Rbar`` into a Kähler-type part and a parallel remainder, and the residuals
used to test the Weitzenböck identity on symmetric models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .tensor_core import (
    CurvTensor,
    FourForm,
    SymTensor,
    bianchi_map,
    endo_action,
    q_endomorphism,
    symmetrize,
    wedge_2forms,
)
from .twistor import TwistorPoint

KAHLER_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class NKAlgebraData:
    J: np.ndarray
    tau: np.ndarray
    Rbar: CurvTensor

    def __post_init__(self):
        d = self.J.shape[0]
        if self.J.shape != (d, d) or self.tau.shape != (d, d, d) or self.Rbar.dim != d:
            raise DimensionError("J, tau and Rbar must live on the same space")

    @classmethod
    def from_twistor(cls, t: TwistorPoint) -> "NKAlgebraData":
        if t.tau is None or t.Rbar is None:
            raise ValueError("twistor point carries no torsion; build it with eps=-1")
        return cls(t.Jz, t.tau, t.Rbar)

    @property
    def dim(self) -> int:
        return self.J.shape[0]

    def invariant_defects(self) -> dict[str, float]:
        J, tau = self.J, self.tau
        eye = np.eye(self.dim)
        skew = max(
            np.abs(tau + np.transpose(tau, (1, 0, 2))).max(),
            np.abs(tau + np.transpose(tau, (0, 2, 1))).max(),
        )
        # tau(X, JY, JZ) = -tau(X, Y, Z)
        typed = np.einsum("xbc,by,cz->xyz", tau, J, J)
        return {
            "orthogonal": float(np.abs(J.T @ J - eye).max()),
            "square": float(np.abs(J @ J + eye).max()),
            "torsion_skew": float(skew),
            "torsion_type": float(np.abs(typed + tau).max()),
        }


@dataclass(frozen=True, eq=False)
class SigmaParts:
    """``sigma = 2 minus - 2 plus`` with ``minus(X,Y,Z,W) = sum tau_i(X,Y) tau_i(Z,W)``
    and ``plus_{X,Y} = sum tau_i X ^ tau_i Y``."""

    sigma: FourForm
    plus: CurvTensor
    minus: CurvTensor


def sigma_forms(d: NKAlgebraData) -> SigmaParts:
    tau = d.tau
    sigma = sum(wedge_2forms(tau[i], tau[i]) for i in range(d.dim))
    minus = np.einsum("iab,icd->abcd", tau, tau)
    plus = np.einsum("iac,ibd->abcd", tau, tau) - np.einsum("iad,ibc->abcd", tau, tau)
    return SigmaParts(FourForm.from_full(sigma), CurvTensor.from_full(plus), CurvTensor.from_full(minus))


def conjugate_first_pair(full: np.ndarray, J: np.ndarray) -> np.ndarray:
    """``T(JX, JY, Z, W)`` for a full 4-array ``T``."""
    return np.einsum("pqcd,pa,qb->abcd", full, J, J)


def split_curvature(d: NKAlgebraData) -> tuple[CurvTensor, CurvTensor]:
    """``Rbar = RK + R0`` with ``R0 = -2 sigma_plus``, which is also ``(sigma + sigma(J., J., ., .)) / 2``."""
    parts = sigma_forms(d)
    R0 = parts.plus * -2.0
    return d.Rbar - R0, R0


def j_invariance_defect(R: CurvTensor, J: np.ndarray) -> float:
    """Largest deviation of ``R(JX, JY, Z, W)`` or ``R(X, Y, JZ, JW)`` from ``R``."""
    full = R.full
    first = conjugate_first_pair(full, J)
    second = np.einsum("abpq,pc,qd->abcd", full, J, J)
    return float(max(np.abs(first - full).max(), np.abs(second - full).max()))


def kahler_type_defects(R: CurvTensor, J: np.ndarray) -> dict[str, float]:
    return {
        "bianchi": R.bianchi_defect_norm,
        "pair_symmetry": R.pair_symmetry_defect,
        "j_invariance": j_invariance_defect(R, J),
    }


def is_kahler_type(R: CurvTensor, J: np.ndarray, tol: float = KAHLER_TOL) -> bool:
    scale = max(R.norm(), 1.0)
    return all(v <= tol * scale for v in kahler_type_defects(R, J).values())


def q_residual(R: CurvTensor, K: CurvTensor) -> float:
    """Scale-free size ``|q(R) K| / |K|^2`` (0 for ``K = 0``)."""
    nk = K.norm()
    if nk == 0.0:
        return 0.0
    return q_endomorphism(R, K).norm() / nk**2


def weitzenboeck_residual(d: NKAlgebraData) -> float:
    return q_residual(d.Rbar, d.Rbar)


def hol_sect_tensor(RK: CurvTensor, J: np.ndarray, tol: float = KAHLER_TOL) -> SymTensor:
    """Symmetric 4-tensor ``S`` with ``S(X, X, X, X) = RK(X, JX, JX, X)``."""
    if not is_kahler_type(RK, J, tol):
        raise ValueError(f"tensor is not of Kähler type: {kahler_type_defects(RK, J)}")
    # RK(X, JY, JZ, W) = sum R[x, p, q, w] J[p, y] J[q, z]
    t = np.einsum("xpqw,py,qz->xyzw", RK.full, J, J)
    return SymTensor.from_full(symmetrize(t))


def contraction_lhs(R: CurvTensor) -> np.ndarray:
    """Sym^2-projection of ``e_j ^ e_i -| R_{e_i, e_j} R``, the products acting on the first pair only."""
    full = R.full
    ends = R.endomorphisms()
    d = R.dim
    out = np.zeros_like(full)
    for i in range(d):
        for j in range(d):
            acted = endo_action(ends[i, j], full)
            # e_i -| on the first pair gives acted[i, b, c, d]; e_j ^ that 1-form
            out[j] += acted[i]
            out[:, j] -= acted[i]
    return 0.5 * (out + np.transpose(out, (2, 3, 0, 1)))


def contraction_identity_defect(R: CurvTensor) -> float:
    """Relative gap between the contraction above and ``q(R) R / 2``."""
    lhs = contraction_lhs(R)
    rhs = 0.5 * q_endomorphism(R, R).full
    scale = max(R.norm() ** 2, 1e-300)
    return float(np.linalg.norm(lhs - rhs) / scale)


def torsion_bianchi_tensor(d: NKAlgebraData) -> np.ndarray:
    """Cyclic sum over the first three slots of ``Rbar(X,Y,Z,W) - 4 <tau_X Y, tau_Z W>``."""
    t = d.Rbar.full - 4.0 * np.einsum("abi,cdi->abcd", d.tau, d.tau)
    return t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))


def torsion_bianchi_defect(d: NKAlgebraData, samples: int = 1000, seed: int = 0) -> float:
    """Largest cyclic-sum defect over random unit quadruples, relative to ``|Rbar|``."""
    rng = np.random.default_rng(seed)
    vecs = rng.standard_normal((4, samples, d.dim))
    vecs /= np.linalg.norm(vecs, axis=2, keepdims=True)
    vals = np.einsum("abcd,na,nb,nc,nd->n", torsion_bianchi_tensor(d), *vecs)
    return float(np.abs(vals).max() / max(d.Rbar.norm(), 1.0))


def bianchi_relations(d: NKAlgebraData) -> dict[str, float]:
    """Norms of ``b(Rbar) - 8 sigma``, ``b(minus) - 2 sigma``, ``b(plus) + 4 sigma`` and
    ``b(2 minus + plus)``, each relative to ``|sigma|`` (absolute when ``sigma = 0``)."""
    parts = sigma_forms(d)
    sigma = parts.sigma
    scale = sigma.norm() or 1.0
    return {
        "rbar": (bianchi_map(d.Rbar) - sigma * 8.0).norm() / scale,
        "minus": (bianchi_map(parts.minus) - sigma * 2.0).norm() / scale,
        "plus": (bianchi_map(parts.plus) + sigma * 4.0).norm() / scale,
        "tilde": bianchi_map(parts.minus * 2.0 + parts.plus).norm() / scale,
    }
