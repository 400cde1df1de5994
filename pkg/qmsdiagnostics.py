"""
Sampled checks of the coercivity bound, the N-relative bounds of G0 and G, the
positivity-improving probe, the invariant-subspace search and a numerical-range
sector heuristic. Every spectrum and rank is taken on the interior compression.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from qmsevolution import evolve_density, pure_state
from qmsgenerator import minus2G0_quadratic_identity
from qmsmodel import build_kossakowski
from qmsutils import (settings, ConstraintError, hermiticity_error, orthonormal_extend,
                      random_unit_vectors, relative_rank, sample_count, to_jsonable)

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

if settings.DEBUG:
    logger.setLevel(logging.DEBUG)


@dataclass(frozen=True, eq=False)
class BoundReport:
    name: str
    samples: int
    min_slack: float
    violations: int
    witness: np.ndarray = None
    constant: float = None
    identity_residual: float = None

    @property
    def passed(self):
        return self.violations == 0

    def to_json(self):
        data = {
            "name": self.name,
            "samples": self.samples,
            "min_slack": self.min_slack,
            "violations": self.violations,
            "passed": self.passed,
            "constant": self.constant,
            "identity_residual": self.identity_residual,
        }
        if self.witness is not None:
            data["witness"] = to_jsonable(self.witness)
        return data


@dataclass(frozen=True, eq=False)
class SupportReport:
    t: float
    rank: int
    min_interior_eig: float
    full: bool
    psi_index: int = 0

    def to_json(self):
        return {"t": self.t, "rank": self.rank, "min_interior_eig": self.min_interior_eig,
                "full": self.full, "psi_index": self.psi_index}


@dataclass(frozen=True, eq=False)
class InvariantSubspaceReport:
    seed_count: int
    min_closure_dim: int
    interior_dim: int
    closure_dims: list = field(default_factory=list)
    reducible_witness: list = None

    @property
    def irreducible(self):
        return self.min_closure_dim == self.interior_dim

    def to_json(self):
        return {
            "seed_count": self.seed_count,
            "min_closure_dim": self.min_closure_dim,
            "interior_dim": self.interior_dim,
            "closure_dims": list(self.closure_dims),
            "irreducible": self.irreducible,
            "witness_dim": len(self.reducible_witness) if self.reducible_witness else 0,
        }


@dataclass(frozen=True, eq=False)
class SectorEstimate:
    theta_hat: float
    shift: float
    per_shift: list = field(default_factory=list)
    points: np.ndarray = None

    def __iter__(self):
        return iter((self.theta_hat, self.shift))

    def to_json(self):
        return {"theta_hat": self.theta_hat, "shift": self.shift, "per_shift": to_jsonable(self.per_shift)}


def interior_samples(space, n_samples, seed):
    '''Seeded complex-Gaussian unit vectors supported on the interior, shape (n_samples, D).'''
    rng = np.random.default_rng(seed)
    interior = space.interior_indices
    coefficients = random_unit_vectors(rng, n_samples, len(interior))
    samples = np.zeros((n_samples, space.dim), dtype=complex)
    samples[:, interior] = coefficients
    return samples


def _eps0(K):
    if hasattr(K, "eps0"):
        return K.eps0
    return max(minimal_kossakowski_eig(K), 0.0)


def minimal_kossakowski_eig(K, tol=1e-10):
    '''Smallest eigenvalue of a Hermitian Kossakowski matrix.'''
    K = np.asarray(getattr(K, "K", K), dtype=complex)
    if hermiticity_error(K) > tol:
        raise ConstraintError("Kossakowski matrix is not Hermitian")
    return float(np.linalg.eigvalsh(0.5 * (K + K.conj().T))[0])


def check_lemma1(ops, K, n_samples=None, seed=0):
    """
    Sample <xi, -2 G0 xi> >= eps0 <xi, (2N + d) xi> over random interior unit vectors.

    The report also carries the largest relative residual of
    <xi, -2 G0 xi> = <a#xi, K a#xi> over the same samples.
    """
    n_samples = sample_count(n_samples)
    eps0 = _eps0(K)
    d = ops.space.d
    min_slack, violations, witness, residual = math.inf, 0, None, 0.0
    for xi in interior_samples(ops.space, n_samples, seed):
        lhs, rhs = minus2G0_quadratic_identity(ops, K, xi)
        bound = eps0 * (2.0 * np.vdot(xi, ops.N @ xi).real + d * np.vdot(xi, xi).real)
        slack = lhs - bound
        residual = max(residual, abs(lhs - rhs) / (1.0 + abs(lhs)))
        if slack < -1e-10 * np.vdot(xi, xi).real:
            violations += 1
        if slack < min_slack:
            min_slack = slack
            witness = xi
    logger.debug(f"lemma1: {n_samples} samples, min slack {min_slack:.3e}, identity residual {residual:.3e}")
    return BoundReport(name="lemma1", samples=n_samples, min_slack=float(min_slack), violations=violations,
                       witness=witness if violations else None, identity_residual=float(residual))


def _empirical_bound(name, excess, c_grid, witnesses):
    '''Smallest grid constant c with excess <= c for every sample; the report uses it for the slack.'''
    worst = float(np.max(excess))
    constant = next((c for c in sorted(c_grid) if c >= worst - 1e-10 * max(1.0, abs(worst))), None)
    used = constant if constant is not None else max(c_grid)
    slack = used - excess
    violations = int(np.sum(slack < -1e-10 * max(1.0, abs(worst))))
    witness = witnesses[int(np.argmin(slack))] if violations else None
    return BoundReport(name=name, samples=len(excess), min_slack=float(np.min(slack)), violations=violations,
                       witness=witness, constant=constant)


def check_theorem2(ops, n_samples=None, seed=0, c_grid=None):
    """
    Empirical constants for
        eps0^2 ||N xi||^2 <= 2 ||G0 xi||^2 + c0 ||xi||^2
        eps0^2 ||N xi||^2 <= 2 ||G xi||^2 + c ||xi||^2
    over seeded interior unit vectors. The constant is the smallest grid value that covers
    every sample, or None when no grid value does.

    Returns:
        tuple: (BoundReport for G0, BoundReport for G)
    """
    n_samples = sample_count(n_samples)
    c_grid = list(settings.THEOREM2_C_GRID if c_grid is None else c_grid)
    eps0 = build_kossakowski(ops.model.V, ops.model.U).eps0
    samples = interior_samples(ops.space, n_samples, seed)
    excess_g0, excess_g = [], []
    for xi in samples:
        n_term = eps0 ** 2 * np.linalg.norm(ops.N @ xi) ** 2
        excess_g0.append(n_term - 2.0 * np.linalg.norm(ops.G0 @ xi) ** 2)
        excess_g.append(n_term - 2.0 * np.linalg.norm(ops.G @ xi) ** 2)
    g0_report = _empirical_bound("theorem2_g0", np.array(excess_g0), c_grid, samples)
    g_report = _empirical_bound("theorem2_g", np.array(excess_g), c_grid, samples)
    logger.debug(f"theorem2: c0={g0_report.constant} c={g_report.constant}")
    return g0_report, g_report


def positivity_improving_probe(superop, psis, times, interior=True, method="auto", rel_tol=None):
    '''Evolve |psi><psi| for each psi and report the support rank at every requested time.'''
    rel_tol = settings.SUPPORT_EIG_RELATIVE_TOL if rel_tol is None else rel_tol
    space = superop.space
    reports = []
    for index, psi in enumerate(psis):
        result = evolve_density(superop, pure_state(psi), times, method=method, support_tol=rel_tol)
        for t in times:
            rho = result.state_at(float(t)).rho
            herm = 0.5 * (rho + rho.conj().T)
            block = space.compress(herm) if (interior and space is not None) else herm
            eigs = np.linalg.eigvalsh(block)
            rank = relative_rank(eigs, rel_tol)
            min_eig = float(eigs[0])
            full = rank == block.shape[0] and min_eig > rel_tol * float(eigs[-1])
            reports.append(SupportReport(t=float(t), rank=rank, min_interior_eig=min_eig,
                                         full=bool(full), psi_index=index))
    return reports


def _closure(generators, start, max_rounds, stable_rounds):
    basis, reference = [], None
    _, reference = orthonormal_extend(basis, [start], reference=reference)
    stable = 0
    for _ in range(max_rounds):
        candidates = [A @ q for q in list(basis) for A in generators]
        added, reference = orthonormal_extend(basis, candidates, reference=reference)
        if added:
            stable = 0
        else:
            stable += 1
            if stable >= stable_rounds:
                break
    return basis


def invariant_subspace_search(ops, n_seeds=1, seed=0, start_vectors=None, stable_rounds=None):
    """
    Smallest subspace containing a start vector and invariant under G and every L_l,
    built on the interior compression. Start vectors are seeded random interior vectors,
    or the given interior-indexed vectors. Full closure for every start is irreducibility
    evidence; a smaller closure is emitted as a reducibility witness.
    """
    space = ops.space
    stable_rounds = settings.CLOSURE_STABLE_ROUNDS if stable_rounds is None else stable_rounds
    generators = [space.compress(ops.G)] + [space.compress(op) for op in ops.L]
    interior_dim = space.interior_dim
    if start_vectors is None:
        rng = np.random.default_rng(seed)
        starts = list(random_unit_vectors(rng, n_seeds, interior_dim))
    else:
        interior = space.interior_indices
        starts = [np.asarray(v, dtype=complex)[interior] if len(v) == space.dim else np.asarray(v, dtype=complex)
                  for v in start_vectors]
    dims, witness = [], None
    for start in starts:
        basis = _closure(generators, start, 4 * space.dim, stable_rounds)
        dims.append(len(basis))
        if len(basis) < interior_dim and (witness is None or len(basis) < len(witness)):
            witness = basis
        logger.debug(f"closure dimension {len(basis)} of {interior_dim}")
    return InvariantSubspaceReport(seed_count=len(starts), min_closure_dim=min(dims), interior_dim=interior_dim,
                                   closure_dims=dims, reducible_witness=witness)


def sector_estimate(ops, n_samples=None, seed=0, shift_grid=None, operator="G"):
    """
    Numerical-range heuristic for the sector of the semigroup generated by G (or G0).

    Samples z = <xi, A xi> / ||xi||^2 over seeded interior xi. For a shift w the half-angle is
    the largest arctan(|Im z| / (w - Re z)) over the samples, i.e. the numerical range lies in
    w - {|Arg| <= theta}. The best (theta, w) over the grid is reported. This is evidence
    only and proves nothing about analyticity of the untruncated semigroup.
    """
    if operator not in ("G", "G0"):
        raise ValueError(f"operator must be 'G' or 'G0', got {operator!r}")
    n_samples = sample_count(n_samples)
    shift_grid = list(settings.SECTOR_SHIFT_GRID if shift_grid is None else shift_grid)
    A = ops.G if operator == "G" else ops.G0
    points = np.array([np.vdot(xi, A @ xi) / np.vdot(xi, xi).real
                       for xi in interior_samples(ops.space, n_samples, seed)])
    per_shift = []
    for shift in shift_grid:
        angles = np.arctan2(np.abs(points.imag), shift - points.real)
        per_shift.append({"shift": float(shift), "theta": float(np.max(angles))})
    best = min(per_shift, key=lambda entry: entry["theta"])
    return SectorEstimate(theta_hat=best["theta"], shift=best["shift"], per_shift=per_shift, points=points)
