import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qkcurv.errors import DegeneratePlaneError, DimensionError, EigenSolverError
from qkcurv.tensor_core import (
    CurvTensor,
    EuclSpace,
    FourForm,
    SymTensor,
    TwoForm,
    alternate,
    bianchi_map,
    constant_curvature,
    endo_action,
    iota_embed,
    lex_pairs,
    min_eig_on_sym,
    q_endomorphism,
    q_matrix_on_sym,
    sectional,
    skew_action,
    sym_basis,
    symmetrize,
    wedge_2forms,
)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def random_curv(rng, dim, symmetric=True):
    n = dim * (dim - 1) // 2
    a = rng.standard_normal((n, n))
    return CurvTensor(0.5 * (a + a.T) if symmetric else a)


def random_fourform(rng, dim):
    return FourForm(dim, rng.standard_normal(math.comb(dim, 4)))


# brute-force exterior algebra on antisymmetric arrays


def interior(i, form):
    """e_i -| form for a full antisymmetric array (contracts the first slot)."""
    return form[i]


def ext_vec(j, alpha):
    """e_j ^ alpha for a 1-form alpha, as an antisymmetric matrix."""
    e = np.eye(alpha.shape[0])[j]
    return np.outer(e, alpha) - np.outer(alpha, e)


def oracle_two_form_action(i, j, form):
    """(e_i ^ e_j)_* acting on 2-forms as e_j ^ e_i -| - e_i ^ e_j -|."""
    return ext_vec(j, interior(i, form)) - ext_vec(i, interior(j, form))


class TestSpaces:
    def test_dimension_floor(self):
        with pytest.raises(DimensionError):
            EuclSpace(1)

    def test_pairs_are_lexicographic(self):
        assert EuclSpace(4).pairs == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


class TestForms:
    def test_twoform_matrix_round_trip(self, rng):
        w = TwoForm(5, rng.standard_normal(10))
        assert np.allclose(TwoForm.from_matrix(w.matrix).coeffs, w.coeffs)
        assert np.allclose(w.matrix, -w.matrix.T)

    def test_twoform_rejects_bad_length(self):
        with pytest.raises(DimensionError):
            TwoForm(4, np.zeros(5))

    def test_basis_orientation(self):
        assert TwoForm.basis(4, 1, 0).coeffs[0] == -1.0

    def test_wedge_of_vectors(self, rng):
        x, y = rng.standard_normal((2, 5))
        w = TwoForm.wedge(x, y)
        assert np.allclose(w.matrix, np.outer(x, y) - np.outer(y, x))

    def test_fourform_full_is_alternating(self, rng):
        s = random_fourform(rng, 6)
        full = s.full()
        assert np.allclose(alternate(full), full)
        assert np.allclose(FourForm.from_full(full).coeffs, s.coeffs)

    def test_fourform_arithmetic(self, rng):
        a, b = random_fourform(rng, 5), random_fourform(rng, 5)
        assert np.allclose((a + b - b).coeffs, a.coeffs)
        assert np.allclose((2.0 * a).coeffs, 2 * a.coeffs)
        with pytest.raises(DimensionError):
            a + FourForm.zero(6)

    def test_wedge_2forms_matches_alternation(self, rng):
        a = TwoForm(6, rng.standard_normal(15)).matrix
        b = TwoForm(6, rng.standard_normal(15)).matrix
        brute = 6.0 * alternate(np.einsum("ab,cd->abcd", a, b))
        assert np.allclose(wedge_2forms(a, b), brute)

    def test_wedge_of_basis_forms(self):
        e12, e34 = TwoForm.basis(4, 0, 1).matrix, TwoForm.basis(4, 2, 3).matrix
        assert wedge_2forms(e12, e34)[0, 1, 2, 3] == pytest.approx(1.0)


class TestCurvTensor:
    def test_full_round_trip(self, rng):
        R = random_curv(rng, 5, symmetric=False)
        assert np.allclose(CurvTensor.from_full(R.full).matrix, R.matrix)
        full = R.full
        assert np.allclose(full, -np.transpose(full, (1, 0, 2, 3)))
        assert np.allclose(full, -np.transpose(full, (0, 1, 3, 2)))

    def test_rejects_bad_shapes(self):
        with pytest.raises(DimensionError):
            CurvTensor(np.zeros((4, 4)))
        with pytest.raises(DimensionError):
            CurvTensor.from_full(np.zeros((3, 3, 3)))

    def test_pair_symmetry_flag(self, rng):
        assert random_curv(rng, 4).pair_symmetric
        assert not random_curv(rng, 4, symmetric=False).pair_symmetric

    def test_constant_curvature(self):
        R = constant_curvature(5, 1.5)
        assert R.bianchi_defect_norm == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(R.ricci(), 4 * 1.5 * np.eye(5))
        assert R.scal() == pytest.approx(5 * 4 * 1.5)

    def test_evaluation_convention(self):
        R = constant_curvature(3, 1.0)
        e = np.eye(3)
        # R(X, Y, Y, X) = |X ^ Y|^2 on the unit sphere
        assert R(e[0], e[1], e[1], e[0]) == pytest.approx(1.0)
        # R(e_0, e_1) e_1 = e_0
        assert np.allclose(R.endomorphisms()[0, 1] @ e[1], e[0])

    def test_json_round_trip(self, rng):
        R = random_curv(rng, 4)
        payload = json.loads(json.dumps(R.to_json()))
        assert payload["dim"] == 4 and payload["schema"] == "qkcurv.tensor/1"
        assert np.array_equal(CurvTensor.from_json(payload).matrix, R.matrix)

    def test_json_rejects_other_kinds(self):
        with pytest.raises(ValueError):
            CurvTensor.from_json({"schema": "qkcurv.tensor/1", "kind": "qk-point"})

    def test_arithmetic_dimension_check(self):
        with pytest.raises(DimensionError):
            constant_curvature(3, 1.0) + constant_curvature(4, 1.0)


class TestSkewAction:
    def test_vector_basis_cases(self):
        e = np.eye(4)
        w = TwoForm.basis(4, 0, 1)
        assert np.allclose(skew_action(w, e[0]), e[1])
        assert np.allclose(skew_action(w, e[1]), -e[0])

    def test_own_generator_fixes_form(self):
        w = TwoForm.basis(4, 0, 1)
        assert np.allclose(skew_action(w, w).coeffs, 0.0)

    def test_rotates_neighbouring_form(self):
        out = skew_action(TwoForm.basis(4, 0, 1), TwoForm.basis(4, 0, 2))
        assert np.allclose(out.coeffs, TwoForm.basis(4, 1, 2).coeffs)

    @settings(max_examples=30, deadline=None)
    @given(arrays(float, 15, elements=finite), st.integers(0, 5), st.integers(0, 5))
    def test_matches_interior_exterior_oracle(self, coeffs, i, j):
        form = TwoForm(6, coeffs).matrix
        expected = oracle_two_form_action(i, j, form)
        got = skew_action(TwoForm.basis(6, i, j) if i != j else np.zeros((6, 6)), form)
        assert np.allclose(got, expected, atol=1e-12)

    def test_derivation_on_products(self, rng):
        w = TwoForm(5, rng.standard_normal(10))
        x, y = rng.standard_normal((2, 5))
        lhs = skew_action(w, np.outer(x, y))
        rhs = np.outer(skew_action(w, x), y) + np.outer(x, skew_action(w, y))
        assert np.allclose(lhs, rhs)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            skew_action(TwoForm.basis(4, 0, 1), np.zeros(5))
        with pytest.raises(DimensionError):
            endo_action(np.eye(3), np.zeros((4, 4)))


class TestBianchiMap:
    def test_kills_riemannian_tensors(self):
        assert bianchi_map(constant_curvature(6, -2.0)).norm() == pytest.approx(0.0, abs=1e-12)

    def test_iota_of_basis_form(self):
        s = FourForm(4, np.array([1.0]))
        R = iota_embed(s)
        e = np.eye(4)
        assert R(e[0], e[1], e[2], e[3]) == pytest.approx(1.0)
        assert R.pair_symmetric
        # direct enumeration: every nonzero entry is a signed permutation of (0, 1, 2, 3)
        for idx in itertools.product(range(4), repeat=4):
            val = R.full[idx]
            if len(set(idx)) < 4:
                assert val == 0.0
            else:
                assert abs(val) == 1.0

    def test_iota_zero(self):
        assert iota_embed(FourForm.zero(5)).norm() == 0.0

    @pytest.mark.parametrize("dim", [4, 6, 10])
    def test_b_iota_is_twelve(self, rng, dim):
        for _ in range(10):
            s = random_fourform(rng, dim)
            assert np.allclose(bianchi_map(iota_embed(s)).coeffs, 12 * s.coeffs)

    def test_projection_is_idempotent(self, rng):
        R = random_curv(rng, 6)
        proj = iota_embed(bianchi_map(R) * (1 / 12))
        again = iota_embed(bianchi_map(proj) * (1 / 12))
        assert np.allclose(proj.matrix, again.matrix)


def literal_q(R, K):
    """Frame sum 1/2 sum_{i,j} (e_i ^ e_j)_* R(e_i, e_j)_* K with both actions as derivations."""
    ends = R.endomorphisms()
    d = R.dim
    out = np.zeros_like(K)
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            out += 0.5 * skew_action(TwoForm.basis(d, i, j), endo_action(ends[i, j], K))
    return out


def basis_q(R, K):
    """sum_alpha (w_alpha)_* (R(w_alpha))_* K over the orthonormal basis of Lambda^2."""
    out = np.zeros_like(K)
    for a in range(R.matrix.shape[0]):
        w = TwoForm(R.dim, np.eye(R.matrix.shape[0])[a])
        Rw = TwoForm(R.dim, R.matrix[a])
        out += skew_action(w, skew_action(Rw, K))
    return out


class TestCurvatureEndomorphism:
    def test_zero_input(self, rng):
        R = random_curv(rng, 5)
        assert q_endomorphism(R, CurvTensor.zero(5)).norm() == 0.0

    @pytest.mark.parametrize("degree", [1, 2, 3, 4])
    def test_matches_frame_sum(self, rng, degree):
        R = random_curv(rng, 4)
        K = rng.standard_normal((4,) * degree)
        fast = q_endomorphism(R, K)
        assert np.allclose(fast, literal_q(R, K), atol=1e-12)
        assert np.allclose(fast, basis_q(R, K), atol=1e-12)

    def test_curvtensor_and_symtensor_kinds(self, rng):
        R = random_curv(rng, 4)
        K = random_curv(rng, 4)
        assert isinstance(q_endomorphism(R, K), CurvTensor)
        S = SymTensor.from_full(symmetrize(rng.standard_normal((4, 4))))
        out = q_endomorphism(R, S)
        assert isinstance(out, SymTensor) and out.degree == 2

    def test_on_vectors_is_ricci(self, rng):
        R = random_curv(rng, 5)
        v = rng.standard_normal(5)
        assert np.allclose(q_endomorphism(R, v), R.ricci() @ v)

    def test_sphere_on_vectors(self):
        R = constant_curvature(6, 1.0)
        v = np.arange(6.0)
        assert np.allclose(q_endomorphism(R, v), 5 * v)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_symmetric_for_pair_symmetric_tensors(self, seed):
        rng = np.random.default_rng(seed)
        R, A, B = (random_curv(rng, 5) for _ in range(3))
        lhs = np.sum(q_endomorphism(R, A).full * B.full)
        rhs = np.sum(A.full * q_endomorphism(R, B).full)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            q_endomorphism(random_curv(rng, 4), np.zeros((5, 5)))
        with pytest.raises(DimensionError):
            q_endomorphism(random_curv(rng, 4), random_curv(rng, 5))


class TestSymmetric:
    def test_basis_is_orthonormal(self):
        B = sym_basis(4, 3)
        assert np.allclose(B @ B.T, np.eye(B.shape[0]))
        assert B.shape[0] == math.comb(4 + 3 - 1, 3)

    def test_inner_matches_frobenius(self, rng):
        a = SymTensor.from_full(symmetrize(rng.standard_normal((4,) * 3)))
        b = SymTensor.from_full(symmetrize(rng.standard_normal((4,) * 3)))
        assert a.inner(b) == pytest.approx(np.sum(a.full() * b.full()))

    @settings(max_examples=25, deadline=None)
    @given(arrays(float, (3, 3, 3, 3), elements=finite), st.permutations(range(4)))
    def test_evaluation_symmetric(self, arr, perm):
        S = SymTensor.from_full(symmetrize(arr))
        vs = [np.array([1.0, 2.0, -1.0]), np.array([0.5, 0.0, 1.0]), np.array([-1.0, 1.0, 1.0]),
              np.array([2.0, -0.5, 0.0])]
        assert S(*vs) == pytest.approx(S(*[vs[p] for p in perm]), abs=1e-9)

    def test_degree_mismatch(self):
        a = SymTensor.from_full(np.zeros((3, 3)))
        b = SymTensor.from_full(np.zeros((3, 3, 3)))
        with pytest.raises(DimensionError):
            a.inner(b)


class TestMinEig:
    def test_zero_tensor(self):
        assert min_eig_on_sym(CurvTensor.zero(4), 2) == 0.0

    def test_negative_curvature_is_detected(self):
        R = constant_curvature(4, -1.0)
        # Rayleigh quotient on X . Y
        x, y = np.eye(4)[0], np.eye(4)[1]
        sym = SymTensor.from_full(0.5 * (np.outer(x, y) + np.outer(y, x)))
        qsym = q_endomorphism(R, sym)
        rayleigh = qsym.inner(sym) / sym.inner(sym)
        assert rayleigh < 0
        assert min_eig_on_sym(R, 2) <= rayleigh + 1e-12

    def test_sphere_is_nonnegative(self):
        assert min_eig_on_sym(constant_curvature(4, 1.0), 4) >= -1e-10

    def test_matrix_is_symmetric(self, rng):
        Q = q_matrix_on_sym(random_curv(rng, 4), 2)
        assert np.allclose(Q, Q.T)

    def test_rejects_degree(self):
        with pytest.raises(ValueError):
            min_eig_on_sym(CurvTensor.zero(4), 3)

    def test_solver_failure_is_distinct(self, monkeypatch):
        def boom(_):
            raise np.linalg.LinAlgError("no convergence")

        monkeypatch.setattr(np.linalg, "eigvalsh", boom)
        with pytest.raises(EigenSolverError):
            min_eig_on_sym(constant_curvature(4, 1.0), 2)


class TestSectional:
    def test_constant_curvature(self, rng):
        R = constant_curvature(5, 0.7)
        x, y = rng.standard_normal((2, 5))
        assert sectional(R, x, y) == pytest.approx(0.7)

    @settings(max_examples=30, deadline=None)
    @given(arrays(float, (2, 2), elements=st.floats(-2, 2)), st.integers(0, 1000))
    def test_basis_change_invariance(self, g, seed):
        assume(abs(g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]) >= 1e-2)
        rng = np.random.default_rng(seed)
        R = random_curv(rng, 5)
        x, y = rng.standard_normal((2, 5))
        x2, y2 = g[0, 0] * x + g[0, 1] * y, g[1, 0] * x + g[1, 1] * y
        assert sectional(R, x2, y2) == pytest.approx(sectional(R, x, y), rel=1e-8, abs=1e-9)

    def test_degenerate(self):
        R = constant_curvature(3, 1.0)
        with pytest.raises(DegeneratePlaneError):
            sectional(R, np.array([1.0, 0, 0]), np.array([2.0, 0, 0]))

    def test_dimension(self):
        with pytest.raises(DimensionError):
            sectional(constant_curvature(3, 1.0), np.ones(4), np.ones(4))


def test_lex_pairs_count():
    assert len(lex_pairs(10)) == 45
