"""Exterior and symmetric tensor algebra over a Euclidean space with an orthonormal frame.

Every tensor is expressed in frame coordinates, so the metric is the identity
and no index raising or lowering ever happens.  Conventions used throughout
the package:

* ``R(X, Y, Z, W) = <R(X, Y) Z, W>`` and the sectional curvature of the plane
  spanned by ``X, Y`` is ``R(X, Y, Y, X) / |X ^ Y|^2`` (the round sphere is
  positive).
* A 2-form ``w`` acts on vectors as the skew endomorphism
  ``Z -> sum_l w(Z, e_l) e_l``; in particular ``(e_i ^ e_j)_* Z = <e_i, Z> e_j - <e_j, Z> e_i``.
  On 2-forms this is ``e_j ^ (e_i -| .) - e_i ^ (e_j -| .)``, and on tensors of
  any degree it acts as a derivation.
* A curvature tensor is stored as the symmetric bilinear form it induces on
  ``Lambda^2`` with the lexicographic orthonormal basis ``e_i ^ e_j``, ``i < j``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Union

import numpy as np

from .errors import DegeneratePlaneError, DimensionError, EigenSolverError

TENSOR_SCHEMA = "qkcurv.tensor/1"


@dataclass(frozen=True)
class EuclSpace:
    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise DimensionError(f"dimension must be >= 2, got {self.dim}")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return lex_pairs(self.dim)


@lru_cache(maxsize=None)
def lex_pairs(dim: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(dim), 2))


@lru_cache(maxsize=None)
def _pair_index(dim: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.array(lex_pairs(dim), dtype=int)
    return idx[:, 0], idx[:, 1]


def _perm_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def alternate(t: np.ndarray) -> np.ndarray:
    """Alternation ``Alt(t) = 1/p! sum_pi sgn(pi) t o pi`` of a full degree-p array."""
    p = t.ndim
    out = np.zeros_like(t)
    for perm in itertools.permutations(range(p)):
        out += _perm_sign(perm) * np.transpose(t, perm)
    return out / math.factorial(p)


def symmetrize(t: np.ndarray) -> np.ndarray:
    p = t.ndim
    out = np.zeros_like(t)
    for perm in itertools.permutations(range(p)):
        out += np.transpose(t, perm)
    return out / math.factorial(p)


# ---------------------------------------------------------------------------
# forms


@dataclass(frozen=True)
class TwoForm:
    """A 2-form with coefficients on ``e_i ^ e_j`` (``i < j``, lexicographic)."""

    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.dim * (self.dim - 1) // 2,):
            raise DimensionError(f"2-form on R^{self.dim} needs {self.dim * (self.dim - 1) // 2} coefficients")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_matrix(cls, w: np.ndarray) -> "TwoForm":
        w = np.asarray(w, dtype=float)
        i, j = _pair_index(w.shape[0])
        return cls(w.shape[0], w[i, j])

    @classmethod
    def basis(cls, dim: int, i: int, j: int) -> "TwoForm":
        """``e_i ^ e_j`` for any ``i != j``."""
        w = np.zeros((dim, dim))
        w[i, j], w[j, i] = 1.0, -1.0
        return cls.from_matrix(w)

    @classmethod
    def wedge(cls, x: np.ndarray, y: np.ndarray) -> "TwoForm":
        x, y = np.asarray(x, float), np.asarray(y, float)
        return cls.from_matrix(np.outer(x, y) - np.outer(y, x))

    @property
    def matrix(self) -> np.ndarray:
        """Antisymmetric array ``w[a, b] = w(e_a, e_b)``."""
        w = np.zeros((self.dim, self.dim))
        i, j = _pair_index(self.dim)
        w[i, j] = self.coeffs
        w[j, i] = -self.coeffs
        return w


@dataclass(frozen=True)
class FourForm:
    """A 4-form with coefficients on ``e_i ^ e_j ^ e_k ^ e_l`` (``i < j < k < l``)."""

    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (math.comb(self.dim, 4),):
            raise DimensionError(f"4-form on R^{self.dim} needs {math.comb(self.dim, 4)} coefficients")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_full(cls, arr: np.ndarray) -> "FourForm":
        """Read the ``i<j<k<l`` components of an array that is assumed alternating."""
        arr = np.asarray(arr, dtype=float)
        d = arr.shape[0]
        idx = np.array(list(itertools.combinations(range(d), 4)), dtype=int).reshape(-1, 4)
        return cls(d, arr[idx[:, 0], idx[:, 1], idx[:, 2], idx[:, 3]])

    @classmethod
    def zero(cls, dim: int) -> "FourForm":
        return cls(dim, np.zeros(math.comb(dim, 4)))

    def full(self) -> np.ndarray:
        d = self.dim
        out = np.zeros((d,) * 4)
        for c, quad in zip(self.coeffs, itertools.combinations(range(d), 4)):
            if c == 0.0:
                continue
            for perm in itertools.permutations(range(4)):
                out[tuple(quad[p] for p in perm)] = _perm_sign(perm) * c
        return out

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other: "FourForm") -> "FourForm":
        _check_dims(self.dim, other.dim)
        return FourForm(self.dim, self.coeffs + other.coeffs)

    def __sub__(self, other: "FourForm") -> "FourForm":
        _check_dims(self.dim, other.dim)
        return FourForm(self.dim, self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "FourForm":
        return FourForm(self.dim, s * self.coeffs)

    __rmul__ = __mul__


def wedge_2forms(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full array of ``a ^ b`` for antisymmetric matrices ``a, b`` (determinant normalisation)."""
    return (
        np.einsum("ab,cd->abcd", a, b)
        - np.einsum("ac,bd->abcd", a, b)
        + np.einsum("ad,bc->abcd", a, b)
        + np.einsum("bc,ad->abcd", a, b)
        - np.einsum("bd,ac->abcd", a, b)
        + np.einsum("cd,ab->abcd", a, b)
    )


# ---------------------------------------------------------------------------
# curvature tensors


@dataclass(frozen=True, eq=False)
class CurvTensor:
    """A (0,4) tensor antisymmetric in each pair, stored as a form on ``Lambda^2``.

    ``matrix[alpha, beta] = R(e_i, e_j, e_k, e_l)`` with ``alpha = (i, j)`` and
    ``beta = (k, l)`` running over the lexicographic pairs.
    """

    matrix: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError("curvature matrix must be square")
        d = int(round((1 + math.sqrt(1 + 8 * m.shape[0])) / 2))
        if d * (d - 1) // 2 != m.shape[0]:
            raise DimensionError(f"{m.shape[0]} is not a dimension of Lambda^2")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", d)

    @classmethod
    def from_full(cls, arr: np.ndarray) -> "CurvTensor":
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 4 or len(set(arr.shape)) != 1:
            raise DimensionError(f"expected a (d, d, d, d) array, got {arr.shape}")
        i, j = _pair_index(arr.shape[0])
        return cls(arr[i[:, None], j[:, None], i[None, :], j[None, :]])

    @classmethod
    def zero(cls, dim: int) -> "CurvTensor":
        n = dim * (dim - 1) // 2
        return cls(np.zeros((n, n)))

    @cached_property
    def full(self) -> np.ndarray:
        d = self.dim
        i, j = _pair_index(d)
        m = self.matrix
        out = np.zeros((d,) * 4)
        I, J = i[:, None], j[:, None]
        K, L = i[None, :], j[None, :]
        out[I, J, K, L] = m
        out[J, I, K, L] = -m
        out[I, J, L, K] = -m
        out[J, I, L, K] = m
        out.setflags(write=False)
        return out

    def __call__(self, x, y, z, w) -> float:
        return float(np.einsum("abcd,a,b,c,d->", self.full, x, y, z, w))

    def endomorphisms(self) -> np.ndarray:
        """``E[i, j]`` is the matrix of ``R(e_i, e_j)``: ``R(e_i, e_j) e_k = sum_l E[i, j, l, k] e_l``."""
        return np.transpose(self.full, (0, 1, 3, 2))

    def norm(self) -> float:
        """Frobenius norm of the full 4-index array."""
        return float(np.linalg.norm(self.full))

    @cached_property
    def pair_symmetry_defect(self) -> float:
        return float(np.linalg.norm(self.matrix - self.matrix.T))

    @property
    def pair_symmetric(self) -> bool:
        return self.pair_symmetry_defect <= 1e-12 * max(1.0, float(np.abs(self.matrix).max(initial=0.0)))

    @cached_property
    def bianchi_defect_norm(self) -> float:
        return bianchi_map(self).norm()

    def ricci(self) -> np.ndarray:
        """``Ric(X, Y) = sum_i R(e_i, X, Y, e_i)``."""
        return np.einsum("iabi->ab", self.full)

    def scal(self) -> float:
        return float(np.trace(self.ricci()))

    def __add__(self, other: "CurvTensor") -> "CurvTensor":
        _check_dims(self.dim, other.dim)
        return CurvTensor(self.matrix + other.matrix)

    def __sub__(self, other: "CurvTensor") -> "CurvTensor":
        _check_dims(self.dim, other.dim)
        return CurvTensor(self.matrix - other.matrix)

    def __neg__(self) -> "CurvTensor":
        return CurvTensor(-self.matrix)

    def __mul__(self, s: float) -> "CurvTensor":
        return CurvTensor(s * self.matrix)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        return {
            "schema": TENSOR_SCHEMA,
            "kind": "curvature",
            "dim": self.dim,
            "index_order": "lex-pairs x lex-pairs, row-major",
            "coefficients": self.matrix.ravel().tolist(),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "CurvTensor":
        if payload.get("schema") != TENSOR_SCHEMA or payload.get("kind") != "curvature":
            raise ValueError("not a curvature tensor payload")
        d = int(payload["dim"])
        n = d * (d - 1) // 2
        return cls(np.asarray(payload["coefficients"], dtype=float).reshape(n, n))


def constant_curvature(dim: int, kappa: float) -> CurvTensor:
    """Curvature tensor with sectional curvature ``kappa`` on every plane."""
    g = np.eye(dim)
    return CurvTensor.from_full(kappa * (np.einsum("bc,ad->abcd", g, g) - np.einsum("ac,bd->abcd", g, g)))


# ---------------------------------------------------------------------------
# symmetric tensors


@lru_cache(maxsize=None)
def sym_multi_indices(dim: int, degree: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations_with_replacement(range(dim), degree))


def _multinomial(m: tuple[int, ...]) -> int:
    out = math.factorial(len(m))
    for k in set(m):
        out //= math.factorial(m.count(k))
    return out


@lru_cache(maxsize=None)
def sym_basis(dim: int, degree: int) -> np.ndarray:
    """Orthonormal basis of ``Sym^p``, rows are flattened full tensors."""
    idx = sym_multi_indices(dim, degree)
    out = np.zeros((len(idx), dim**degree))
    strides = [dim ** (degree - 1 - s) for s in range(degree)]
    for row, m in enumerate(idx):
        perms = set(itertools.permutations(m))
        val = 1.0 / math.sqrt(len(perms))
        for p in perms:
            out[row, sum(a * s for a, s in zip(p, strides))] = val
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SymTensor:
    """Fully symmetric tensor stored by sorted multi-index.

    ``coeffs[k]`` is the common value ``t(e_{m_1}, ..., e_{m_p})`` of all
    permutations of the k-th sorted multi-index; the inner product weights each
    coefficient by its number of distinct permutations so that it agrees with
    the Frobenius product of the full arrays.
    """

    dim: int
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (len(sym_multi_indices(self.dim, self.degree)),):
            raise DimensionError("wrong number of symmetric coefficients")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_full(cls, arr: np.ndarray) -> "SymTensor":
        arr = np.asarray(arr, dtype=float)
        d, p = arr.shape[0], arr.ndim
        return cls(d, p, np.array([arr[m] for m in sym_multi_indices(d, p)]))

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([_multinomial(m) for m in sym_multi_indices(self.dim, self.degree)], dtype=float)

    def full(self) -> np.ndarray:
        out = np.zeros((self.dim,) * self.degree)
        for c, m in zip(self.coeffs, sym_multi_indices(self.dim, self.degree)):
            for p in set(itertools.permutations(m)):
                out[p] = c
        return out

    def inner(self, other: "SymTensor") -> float:
        _check_dims(self.dim, other.dim)
        if self.degree != other.degree:
            raise DimensionError("symmetric tensors of different degree")
        return float(np.sum(self.weights * self.coeffs * other.coeffs))

    def __call__(self, *vectors) -> float:
        t = self.full()
        for v in vectors:
            t = np.tensordot(v, t, axes=(0, 0))
        return float(t)


# ---------------------------------------------------------------------------
# actions


def _check_dims(a: int, b: int):
    if a != b:
        raise DimensionError(f"dimension mismatch: {a} vs {b}")


def _as_matrix(omega: Union[TwoForm, np.ndarray]) -> np.ndarray:
    if isinstance(omega, TwoForm):
        return omega.matrix
    w = np.asarray(omega, dtype=float)
    if w.ndim == 1:
        d = int(round((1 + math.sqrt(1 + 8 * w.shape[0])) / 2))
        return TwoForm(d, w).matrix
    return w


def skew_endomorphism(omega: Union[TwoForm, np.ndarray]) -> np.ndarray:
    """Matrix of the skew endomorphism ``Z -> sum_l w(Z, e_l) e_l`` of a 2-form."""
    return _as_matrix(omega).T.copy()


def endo_action(a: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Derivation action of a skew endomorphism (matrix) on a full tensor of any degree."""
    a = np.asarray(a, dtype=float)
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        return np.zeros_like(t)
    if any(s != a.shape[0] for s in t.shape):
        raise DimensionError(f"endomorphism on R^{a.shape[0]} cannot act on tensor of shape {t.shape}")
    out = np.zeros_like(t)
    for s in range(t.ndim):
        out += np.moveaxis(np.tensordot(a, t, axes=(1, s)), 0, s)
    return out


def skew_action(omega: Union[TwoForm, np.ndarray], t) -> np.ndarray:
    """``omega_* t``: the 2-form acting on a tensor of any degree as a derivation."""
    w = _as_matrix(omega)
    if isinstance(t, TwoForm):
        _check_dims(w.shape[0], t.dim)
        return TwoForm.from_matrix(endo_action(w.T, t.matrix))
    return endo_action(w.T, t)


def bianchi_map(R: CurvTensor) -> FourForm:
    """``b(R) = e_i ^ e_j ^ R(e_i ^ e_j)``, i.e. ``12 Alt(R)``."""
    return FourForm.from_full(12.0 * alternate(R.full))


def iota_embed(s: FourForm) -> CurvTensor:
    """``iota(s)(X ^ Y) = s(X, Y, ., .)``."""
    return CurvTensor.from_full(s.full())


def _q_apply(R: CurvTensor, t: np.ndarray, batch: bool = False) -> np.ndarray:
    """q(R) on full tensors; with ``batch`` the leading axis indexes independent tensors."""
    full = R.full
    ric = np.einsum("baeb->ae", full)
    # two-slot kernel: (q t)_{..a..b..} += sum_{c,e} R[c, a, e, b] t_{..c..e..}
    two = np.transpose(full, (1, 3, 0, 2))
    off = 1 if batch else 0
    p = t.ndim - off
    out = np.zeros_like(t)
    for s in range(p):
        out += np.moveaxis(np.tensordot(ric, t, axes=(1, s + off)), 0, s + off)
    for s in range(p):
        for s2 in range(p):
            if s == s2:
                continue
            moved = np.moveaxis(t, (s + off, s2 + off), (-2, -1))
            res = np.tensordot(moved, two, axes=([-2, -1], [2, 3]))
            out += np.moveaxis(res, (-2, -1), (s + off, s2 + off))
    return out


def q_endomorphism(R: CurvTensor, K):
    """Curvature endomorphism ``q(R) K = 1/2 (e_i ^ e_j)_* R(e_i, e_j)_* K``.

    ``K`` may be a CurvTensor, a SymTensor or a full ndarray of any degree; the
    result has the same kind.
    """
    if isinstance(K, CurvTensor):
        _check_dims(R.dim, K.dim)
        return CurvTensor.from_full(_q_apply(R, K.full))
    if isinstance(K, SymTensor):
        _check_dims(R.dim, K.dim)
        return SymTensor.from_full(_q_apply(R, K.full()))
    K = np.asarray(K, dtype=float)
    if any(s != R.dim for s in K.shape):
        raise DimensionError(f"cannot apply q(R) on R^{R.dim} to shape {K.shape}")
    return _q_apply(R, K)


def q_matrix_on_sym(R: CurvTensor, degree: int) -> np.ndarray:
    """Matrix of q(R) on ``Sym^degree`` in the orthonormal basis of :func:`sym_basis`."""
    d = R.dim
    basis = sym_basis(d, degree)
    tensors = basis.reshape((-1,) + (d,) * degree)
    images = _q_apply(R, tensors, batch=True).reshape(basis.shape[0], -1)
    return basis @ images.T


def min_eig_on_sym(R: CurvTensor, degree: int) -> float:
    """Smallest eigenvalue of q(R) restricted to symmetric tensors of the given degree."""
    if degree not in (2, 4):
        raise ValueError(f"degree must be 2 or 4, got {degree}")
    q = q_matrix_on_sym(R, degree)
    q = 0.5 * (q + q.T)
    try:
        return float(np.linalg.eigvalsh(q)[0])
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc


def wedge_norm_sq(x: np.ndarray, y: np.ndarray) -> float:
    """``|X ^ Y|^2 = |X|^2 |Y|^2 - <X, Y>^2``."""
    return float(np.dot(x, x) * np.dot(y, y) - np.dot(x, y) ** 2)


def sectional(R: CurvTensor, x: np.ndarray, y: np.ndarray, rtol: float = 1e-12) -> float:
    """Sectional curvature ``R(X, Y, Y, X) / |X ^ Y|^2`` of ``span{X, Y}``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape != (R.dim,) or y.shape != (R.dim,):
        raise DimensionError(f"vectors must live in R^{R.dim}")
    area = wedge_norm_sq(x, y)
    if area <= rtol * np.dot(x, x) * np.dot(y, y) or area == 0.0:
        raise DegeneratePlaneError("vectors are collinear")
    return R(x, y, y, x) / area
