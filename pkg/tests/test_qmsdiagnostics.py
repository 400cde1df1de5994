import numpy as np
import pytest

from conftest import random_positive_model
from qmsdiagnostics import (BoundReport, check_lemma1, check_theorem2, interior_samples, invariant_subspace_search,
                            minimal_kossakowski_eig, positivity_improving_probe, sector_estimate)
from qmsfock import build_space
from qmsgenerator import build_lindbladian, build_operators
from qmsmodel import GaussianModel, TwoBosonParams, build_kossakowski, two_boson_model
from qmsutils import ConstraintError


def _setup(model, n_max, **kwargs):
    space = build_space(model.d, n_max, **kwargs)
    return build_operators(model, space)


class TestInteriorSamples:
    def test_shape_and_support(self):
        space = build_space(2, 5)
        samples = interior_samples(space, 7, seed=3)
        assert samples.shape == (7, space.dim)
        outside = space.grades > space.interior_cutoff
        assert np.all(samples[:, outside] == 0)
        np.testing.assert_allclose(np.linalg.norm(samples, axis=1), 1.0)

    def test_seeded(self):
        space = build_space(1, 6)
        np.testing.assert_array_equal(interior_samples(space, 5, 11), interior_samples(space, 5, 11))


class TestCoercivityBound:
    def test_two_boson_identity(self, two_boson_identity):
        ops = _setup(two_boson_identity, 6)
        K = build_kossakowski(two_boson_identity.V, two_boson_identity.U)
        report = check_lemma1(ops, K, n_samples=1000, seed=0)
        assert report.samples == 1000
        assert report.violations == 0 and report.passed
        assert report.identity_residual <= 1e-10
        assert report.witness is None

    def test_equality_when_k_is_identity(self, identity_k_model):
        ops = _setup(identity_k_model, 8)
        K = build_kossakowski(identity_k_model.V, identity_k_model.U)
        report = check_lemma1(ops, K, n_samples=50, seed=1)
        assert report.passed
        assert abs(report.min_slack) <= 1e-10

    def test_degenerate_k_gives_trivial_bound(self, damping_model):
        ops = _setup(damping_model, 6)
        report = check_lemma1(ops, build_kossakowski([[1.0]], [[0.0]]), n_samples=50, seed=2)
        assert report.passed
        assert report.min_slack >= 0

    @pytest.mark.parametrize("seed", range(3))
    def test_random_positive_models(self, seed):
        model = random_positive_model(2, seed)
        ops = _setup(model, 5)
        report = check_lemma1(ops, build_kossakowski(model.V, model.U), n_samples=200, seed=seed)
        assert report.passed
        assert report.identity_residual <= 1e-10

    def test_report_json(self, identity_k_model):
        ops = _setup(identity_k_model, 4)
        data = check_lemma1(ops, np.eye(2), n_samples=10, seed=0).to_json()
        assert data["name"] == "lemma1"
        assert data["passed"] is True
        assert "witness" not in data

    def test_sample_count_is_honoured(self, two_boson_identity):
        ops = _setup(two_boson_identity, 4)
        K = build_kossakowski(two_boson_identity.V, two_boson_identity.U)
        assert check_lemma1(ops, K, n_samples=1, seed=0).samples == 1
        with pytest.raises(ValueError):
            check_lemma1(ops, K, n_samples=0)
        with pytest.raises(ValueError):
            check_theorem2(ops, n_samples=0)
        with pytest.raises(ValueError):
            sector_estimate(ops, n_samples=0)


class TestRelativeBounds:
    def test_identity_k_needs_no_constant(self, identity_k_model):
        ops = _setup(identity_k_model, 6)
        g0_report, g_report = check_theorem2(ops, n_samples=100, seed=0)
        assert g0_report.constant == 0.0 and g_report.constant == 0.0
        assert g0_report.passed and g_report.passed

    def test_two_boson_constants(self, two_boson_identity):
        ops = _setup(two_boson_identity, 6)
        g0_report, g_report = check_theorem2(ops, n_samples=1000, seed=0)
        assert g0_report.constant is not None and g_report.constant is not None
        assert g0_report.passed and g_report.passed

    def test_no_grid_value_suffices(self, identity_k_model):
        ops = _setup(identity_k_model, 6)
        g0_report, _ = check_theorem2(ops, n_samples=20, seed=0, c_grid=[-100.0])
        assert g0_report.constant is None
        assert g0_report.violations == 20
        assert g0_report.witness is not None


class TestPositivityImprovingProbe:
    def test_damping_stays_on_vacuum(self, damping_model):
        ops = _setup(damping_model, 6)
        reports = positivity_improving_probe(build_lindbladian(ops, "schrodinger"),
                                             [ops.space.basis_vector((0,))], [0.05, 0.1, 1.0])
        assert [r.t for r in reports] == [0.05, 0.1, 1.0]
        assert all(r.rank == 1 and not r.full for r in reports)

    def test_positive_model_reaches_full_rank(self):
        model = GaussianModel.from_kraus([[2.0], [0.0]], [[0.0], [2.0]])
        ops = _setup(model, 6)
        reports = positivity_improving_probe(build_lindbladian(ops, "schrodinger"),
                                             [ops.space.basis_vector((0,)), ops.space.basis_vector((1,))], [0.5])
        assert [r.psi_index for r in reports] == [0, 1]
        assert all(r.full and r.rank == ops.space.interior_dim for r in reports)

    def test_two_boson_vacuum_fills_interior(self, two_boson_identity):
        ops = _setup(two_boson_identity, 6)
        [report] = positivity_improving_probe(build_lindbladian(ops, "schrodinger"),
                                              [ops.space.basis_vector((0, 0))], [0.1])
        assert report.full is True
        assert report.rank == ops.space.interior_dim == 15
        assert report.min_interior_eig > 0

    @pytest.mark.parametrize("seed", range(10))
    def test_irreducibility_chain(self, seed):
        d = 1 + seed % 2
        model = random_positive_model(d, seed)
        ops = _setup(model, 8 if d == 1 else 6)
        space = ops.space
        assert build_kossakowski(model.V, model.U).eps0 >= 0.1
        report = invariant_subspace_search(ops, n_seeds=2, seed=seed)
        assert report.irreducible
        assert report.min_closure_dim == space.interior_dim
        starts = [space.basis_vector((0,) * d), space.basis_vector((1,) + (0,) * (d - 1))]
        probes = positivity_improving_probe(build_lindbladian(ops, "schrodinger"), starts, [0.05, 0.1])
        assert len(probes) == 4
        assert all(p.min_interior_eig > 0 for p in probes)


class TestInvariantSubspaceSearch:
    def test_annihilation_only_vacuum(self, damping_model):
        ops = _setup(damping_model, 8)
        report = invariant_subspace_search(ops, start_vectors=[ops.space.basis_vector((0,))])
        assert report.min_closure_dim == 1
        assert not report.irreducible
        assert len(report.reducible_witness) == 1
        assert report.to_json()["witness_dim"] == 1

    def test_damping_contrast_probe(self, damping_model):
        ops = _setup(damping_model, 8)
        reports = positivity_improving_probe(build_lindbladian(ops, "schrodinger"),
                                             [ops.space.basis_vector((0,))], [0.05, 0.1, 0.5])
        assert all(r.rank == 1 for r in reports)

    def test_two_level_space(self, identity_k_model):
        ops = _setup(identity_k_model, 1, interior_margin=0)
        report = invariant_subspace_search(ops, start_vectors=[ops.space.basis_vector((0,))])
        assert report.interior_dim == 2
        assert report.closure_dims == [2]
        assert report.reducible_witness is None

    def test_random_starts_are_seeded(self, two_boson_identity):
        ops = _setup(two_boson_identity, 5)
        first = invariant_subspace_search(ops, n_seeds=3, seed=4)
        second = invariant_subspace_search(ops, n_seeds=3, seed=4)
        assert first.closure_dims == second.closure_dims
        assert first.seed_count == 3 and first.irreducible


class TestSectorEstimate:
    def test_self_adjoint_part(self):
        ops = _setup(random_positive_model(2, 5), 5)
        estimate = sector_estimate(ops, n_samples=200, seed=0, shift_grid=[0.0], operator="G0")
        assert estimate.theta_hat <= 1e-6

    def test_number_hamiltonian_ray(self):
        omega = 0.75
        model = GaussianModel.from_kraus([[1.0]], [[0.0]], omega=[[omega]])
        ops = _setup(model, 6)
        theta, shift = sector_estimate(ops, n_samples=50, seed=1, shift_grid=[0.0])
        assert shift == 0.0
        assert theta == pytest.approx(np.arctan(2 * omega), abs=1e-10)

    def test_sector_widens_with_hamiltonian(self):
        thetas = []
        for w in (0.0, 0.5, 1.0, 2.0):
            params = TwoBosonParams(gamma_minus=np.eye(2), gamma_plus=np.eye(2), omega=w * np.eye(2))
            ops = _setup(two_boson_model(params), 5)
            estimate = sector_estimate(ops, n_samples=200, seed=0)
            assert estimate.theta_hat < np.pi / 2
            thetas.append(estimate.theta_hat)
        assert all(b > a for a, b in zip(thetas, thetas[1:]))

    def test_points_and_json(self, damping_model):
        ops = _setup(damping_model, 5)
        estimate = sector_estimate(ops, n_samples=30, seed=0, shift_grid=[0.0, 1.0])
        assert estimate.points.shape == (30,)
        assert np.all(estimate.points.real <= 0)
        assert [entry["shift"] for entry in estimate.to_json()["per_shift"]] == [0.0, 1.0]

    def test_unknown_operator(self, damping_model):
        with pytest.raises(ValueError):
            sector_estimate(_setup(damping_model, 4), operator="H")


class TestMinimalKossakowskiEig:
    def test_identity(self):
        assert minimal_kossakowski_eig(np.eye(4)) == pytest.approx(1.0)

    def test_rank_one(self):
        assert minimal_kossakowski_eig(np.array([[1.0, 1.0], [1.0, 1.0]])) == pytest.approx(0.0, abs=1e-15)

    def test_block_diagonal(self):
        gamma_minus = np.array([[2.0, 0.5], [0.5, 1.0]])
        gamma_plus = np.array([[0.7, 0.1j], [-0.1j, 0.9]])
        K = np.block([[gamma_minus, np.zeros((2, 2))], [np.zeros((2, 2)), gamma_plus]])
        expected = min(np.linalg.eigvalsh(gamma_minus)[0], np.linalg.eigvalsh(gamma_plus)[0])
        assert minimal_kossakowski_eig(K) == pytest.approx(expected)

    def test_conjugation_symmetry(self):
        K = np.array([[1.0, 0.3j], [-0.3j, 2.0]])
        assert minimal_kossakowski_eig(K) == pytest.approx(minimal_kossakowski_eig(K.conj()))

    def test_accepts_kossakowski_matrix(self, identity_k_model):
        K = build_kossakowski(identity_k_model.V, identity_k_model.U)
        assert minimal_kossakowski_eig(K) == pytest.approx(1.0)

    def test_non_hermitian(self):
        with pytest.raises(ConstraintError):
            minimal_kossakowski_eig(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_bound_report_passed():
    assert BoundReport(name="x", samples=1, min_slack=0.0, violations=0).passed
    assert not BoundReport(name="x", samples=1, min_slack=-1.0, violations=1).passed
