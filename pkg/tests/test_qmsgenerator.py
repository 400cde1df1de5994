import numpy as np
import pytest

from conftest import random_positive_model
from qmsfock import build_space
from qmsgenerator import (build_lindbladian, build_operators, dissipator_from_kossakowski, export_triplets,
                          kraus_dissipator, minus2G0_quadratic_identity, quadratic_form_apply, vec, unvec)
from qmsmodel import GaussianModel, build_kossakowski
from qmsutils import BoundaryContaminationError


def _interior_density(space, rng):
    idx = space.interior_indices
    A = rng.standard_normal((len(idx), len(idx))) + 1j * rng.standard_normal((len(idx), len(idx)))
    block = A @ A.conj().T
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    rho[np.ix_(idx, idx)] = block / np.trace(block)
    return rho


def _interior_observable(space, rng):
    idx = space.interior_indices
    A = rng.standard_normal((len(idx), len(idx))) + 1j * rng.standard_normal((len(idx), len(idx)))
    x = np.zeros((space.dim, space.dim), dtype=complex)
    x[np.ix_(idx, idx)] = A
    return x


def _interior_vector(space, rng):
    v = np.zeros(space.dim, dtype=complex)
    idx = space.interior_indices
    v[idx] = rng.standard_normal(len(idx)) + 1j * rng.standard_normal(len(idx))
    return v / np.linalg.norm(v)


class TestBuildOperators:
    def test_damping_operators(self, damping_model):
        """L = a gives G0 = G = -N/2"""
        space = build_space(1, 5)
        ops = build_operators(damping_model, space)
        np.testing.assert_allclose(ops.L[0].toarray(), ops.ladders.a[0].toarray())
        np.testing.assert_allclose(ops.G0.toarray(), -0.5 * ops.N.toarray(), atol=1e-14)
        np.testing.assert_allclose(ops.G.toarray(), -0.5 * ops.N.toarray(), atol=1e-14)

    def test_number_hamiltonian(self):
        omega = 0.7
        model = GaussianModel.from_kraus([[1.0]], [[0.0]], omega=[[omega]])
        space = build_space(1, 5)
        ops = build_operators(model, space)
        N = ops.N.toarray()
        np.testing.assert_allclose(ops.H.toarray(), omega * N, atol=1e-14)
        np.testing.assert_allclose(ops.G.toarray(), -1j * omega * N - 0.5 * N, atol=1e-14)

    def test_linear_hamiltonian_term(self):
        model = GaussianModel.from_kraus(np.eye(2), np.zeros((2, 2)), zeta=[1.0, 0.0])
        space = build_space(2, 4)
        ops = build_operators(model, space)
        expected = 0.5 * (ops.ladders.adag[0] + ops.ladders.a[0])
        np.testing.assert_allclose(ops.H.toarray(), expected.toarray(), atol=1e-14)

    def test_structural_invariants(self):
        for seed in range(5):
            model = random_positive_model(2, seed)
            ops = build_operators(model, build_space(2, 5))
            residuals = ops.check_invariants()
            assert residuals["hamiltonian_hermiticity"] <= 1e-10
            assert residuals["g0_kraus_residual"] <= 1e-10
            assert residuals["g_residual"] <= 1e-10
            assert residuals["g0_max_eig"] <= 1e-10

    def test_grade_locality(self):
        model = random_positive_model(2, 11)
        space = build_space(2, 5)
        ops = build_operators(model, space)
        for matrix in (ops.H, ops.G, ops.G0):
            coo = matrix.tocoo()
            assert np.all(np.abs(space.grades[coo.row] - space.grades[coo.col]) <= 2)

    def test_space_mismatch(self, damping_model):
        with pytest.raises(ValueError):
            build_operators(damping_model, build_space(2, 3))


class TestLindbladian:
    def test_amplitude_damping_example(self, damping_model):
        space = build_space(1, 4)
        ops = build_operators(damping_model, space)
        lindblad = build_lindbladian(ops, "schrodinger")
        rho = np.outer(space.basis_vector((1,)), space.basis_vector((1,)))
        expected = np.diag([1.0, -1.0, 0, 0, 0])
        np.testing.assert_allclose(lindblad.apply(rho), expected, atol=1e-14)

    def test_unitality_and_trace_preservation(self, rng):
        model = random_positive_model(2, 21)
        space = build_space(2, 5)
        ops = build_operators(model, space)
        heisenberg = build_lindbladian(ops, "heisenberg")
        schrodinger = build_lindbladian(ops, "schrodinger")
        image = heisenberg.apply(np.eye(space.dim))
        assert np.max(np.abs(space.compress(image))) <= 1e-10
        for _ in range(10):
            rho = _interior_density(space, rng)
            out = schrodinger.apply(rho)
            assert abs(np.trace(out)) <= 1e-10
            assert np.max(np.abs(out - out.conj().T)) <= 1e-10

    def test_duality(self, rng):
        """tr(L_*(rho) x) = tr(rho L(x)) on interior pairs"""
        model = random_positive_model(1, 4)
        space = build_space(1, 8)
        ops = build_operators(model, space)
        heisenberg = build_lindbladian(ops, "heisenberg")
        schrodinger = build_lindbladian(ops, "schrodinger")
        for _ in range(100):
            rho = _interior_density(space, rng)
            x = _interior_observable(space, rng)
            left = np.trace(schrodinger.apply(rho) @ x)
            right = np.trace(rho @ heisenberg.apply(x))
            assert abs(left - right) <= 1e-9

    def test_vectorization_is_column_stacking(self):
        x = np.arange(4).reshape(2, 2)
        np.testing.assert_array_equal(vec(x), [0, 2, 1, 3])
        np.testing.assert_array_equal(unvec(vec(x), 2), x)

    def test_unknown_picture(self, damping_model):
        with pytest.raises(ValueError):
            build_lindbladian(build_operators(damping_model, build_space(1, 3)), "interaction")


class TestQuadraticForm:
    def test_identity_observable_vanishes(self, rng):
        model = random_positive_model(1, 8)
        space = build_space(1, 7)
        ops = build_operators(model, space)
        for _ in range(5):
            v, u = _interior_vector(space, rng), _interior_vector(space, rng)
            assert abs(quadratic_form_apply(ops, np.eye(space.dim), v, u)) <= 1e-12

    def test_number_observable_under_damping(self, damping_model):
        space = build_space(1, 5)
        ops = build_operators(damping_model, space)
        e1 = space.basis_vector((1,))
        value = quadratic_form_apply(ops, ops.N.toarray(), e1, e1)
        assert abs(value + 1.0) <= 1e-12

    def test_matches_heisenberg_generator(self, rng):
        model = random_positive_model(2, 2)
        space = build_space(2, 5)
        ops = build_operators(model, space)
        heisenberg = build_lindbladian(ops, "heisenberg")
        for _ in range(10):
            x = _interior_observable(space, rng)
            v, u = _interior_vector(space, rng), _interior_vector(space, rng)
            expected = np.vdot(v, heisenberg.apply(x) @ u)
            assert abs(quadratic_form_apply(ops, x, v, u) - expected) <= 1e-9

    def test_conjugate_symmetry(self, rng):
        model = random_positive_model(1, 6)
        space = build_space(1, 7)
        ops = build_operators(model, space)
        x = _interior_observable(space, rng)
        v, u = _interior_vector(space, rng), _interior_vector(space, rng)
        forward = quadratic_form_apply(ops, x, v, u)
        backward = quadratic_form_apply(ops, x.conj().T, u, v)
        assert abs(forward - np.conj(backward)) <= 1e-10

    def test_boundary_vector_rejected(self, damping_model):
        space = build_space(1, 4)
        ops = build_operators(damping_model, space)
        e4 = space.basis_vector((4,))
        with pytest.raises(BoundaryContaminationError):
            quadratic_form_apply(ops, np.eye(space.dim), e4, e4)


class TestMinus2G0Identity:
    def test_vacuum_example(self, identity_k_model):
        space = build_space(1, 4)
        ops = build_operators(identity_k_model, space)
        K = build_kossakowski(identity_k_model.V, identity_k_model.U)
        lhs, rhs = minus2G0_quadratic_identity(ops, K, space.basis_vector((0,)))
        assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0)

    def test_zero_vector(self, identity_k_model):
        space = build_space(1, 4)
        ops = build_operators(identity_k_model, space)
        assert minus2G0_quadratic_identity(ops, np.eye(2), np.zeros(space.dim)) == (0.0, 0.0)

    def test_random_interior_vectors(self, rng):
        model = random_positive_model(2, 13)
        space = build_space(2, 6)
        ops = build_operators(model, space)
        K = build_kossakowski(model.V, model.U)
        for _ in range(20):
            lhs, rhs = minus2G0_quadratic_identity(ops, K, _interior_vector(space, rng))
            assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))

    def test_rejects_boundary_vector(self, identity_k_model):
        space = build_space(1, 4)
        ops = build_operators(identity_k_model, space)
        with pytest.raises(BoundaryContaminationError):
            minus2G0_quadratic_identity(ops, np.eye(2), space.basis_vector((3,)))


class TestKossakowskiDissipator:
    def test_agrees_with_kraus_form(self, rng):
        model = random_positive_model(2, 17, hamiltonian=0.0)
        space = build_space(2, 4)
        ops = build_operators(model, space)
        K = build_kossakowski(model.V, model.U)
        x = _interior_observable(space, rng)
        np.testing.assert_allclose(space.compress(dissipator_from_kossakowski(ops, K, x)),
                                   space.compress(kraus_dissipator(ops, x)), atol=1e-10)

    def test_kraus_form_matches_heisenberg_without_hamiltonian(self, rng):
        model = random_positive_model(1, 3, hamiltonian=0.0)
        space = build_space(1, 6)
        ops = build_operators(model, space)
        x = _interior_observable(space, rng)
        np.testing.assert_allclose(kraus_dissipator(ops, x), build_lindbladian(ops, "heisenberg").apply(x),
                                   atol=1e-10)


class TestExport:
    def test_triplets(self, damping_model, tmp_path):
        space = build_space(1, 3)
        ops = build_operators(damping_model, space)
        path = tmp_path / "G.csv"
        export_triplets(ops.G, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "row,col,re,im"
        assert len(lines) == 1 + ops.G.nnz
        assert lines[1].split(",")[:2] == ["1", "1"]
