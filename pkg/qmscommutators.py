"""
Linear forms c0*1 + sum_k alpha_k a_k + sum_k beta_k a_k^dagger and the adjoint action
form -> [G, form] of a quadratic generator G, which maps linear forms to linear forms.

Coefficient vectors are ordered (c0, alpha_1..alpha_d, beta_1..beta_d).
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from qmsevolution import evolve_vector
from qmsutils import settings, ConstraintError, orthonormal_extend, to_jsonable

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

if settings.DEBUG:
    logger.setLevel(logging.DEBUG)


@dataclass(frozen=True, eq=False)
class LinearForm:
    c0: complex
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def d(self):
        return len(self.alpha)

    def to_vector(self):
        return np.concatenate([[self.c0], self.alpha, self.beta]).astype(complex)

    @classmethod
    def from_vector(cls, coefficients):
        coefficients = np.asarray(coefficients, dtype=complex)
        d = (len(coefficients) - 1) // 2
        return cls(c0=complex(coefficients[0]), alpha=coefficients[1:d + 1].copy(),
                   beta=coefficients[d + 1:].copy())

    def to_matrix(self, ladders):
        '''Truncated matrix of the form on the space of the given ladder operators.'''
        dim = ladders.number.shape[0]
        matrix = self.c0 * sparse.identity(dim, dtype=complex, format="csr")
        for k in range(self.d):
            if self.alpha[k] != 0:
                matrix = matrix + self.alpha[k] * ladders.a[k]
            if self.beta[k] != 0:
                matrix = matrix + self.beta[k] * ladders.adag[k]
        return matrix.tocsr()

    def is_zero(self, tol=0.0):
        return bool(np.all(np.abs(self.to_vector()) <= tol))


@dataclass(frozen=True, eq=False)
class AdjointActionMatrix:
    M: np.ndarray
    model: object = None

    @property
    def d(self):
        return (self.M.shape[0] - 1) // 2

    def apply(self, form):
        return LinearForm.from_vector(self.M @ form.to_vector())


def kraus_form(model, ell):
    '''L_ell as a linear form: alpha = conj(v_ell), beta = u_ell (ell is 1-based).'''
    if not 1 <= ell <= model.m:
        raise IndexError(f"Kraus index {ell} outside 1..{model.m}")
    return LinearForm(c0=0j, alpha=model.V[ell - 1].conj().copy(), beta=model.U[ell - 1].copy())


def adjoint_action(model):
    """
    Matrix of form -> [G, form] from the canonical commutation relations.

    With G = -iH - 1/2 sum_l L_l^dagger L_l, [a_j, a_k^dagger] = delta_jk:
        [G, a_m]   = i zeta_m/2 + sum_k ( i Omega_mk + 1/2 sum_l (u_lm conj(u_lk) + v_lm conj(v_lk)) ) a_k
                     + sum_k ( i kappa_mk + 1/2 sum_l (u_lm v_lk + v_lm u_lk) ) a_k^dagger
        [G, a_m^+] = -i conj(zeta_m)/2
                     - sum_k ( i conj(kappa_mk) + 1/2 sum_l (conj(v_lm u_lk) + conj(u_lm v_lk)) ) a_k
                     - sum_k ( i Omega_km + 1/2 sum_l (conj(v_lm) v_lk + conj(u_lm) u_lk) ) a_k^dagger
    Column j of M holds the coefficients of [G, basis_j], basis = (1, a_1..a_d, a_1^+..a_d^+).
    """
    d = model.d
    V, U = model.V, model.U
    M = np.zeros((2 * d + 1, 2 * d + 1), dtype=complex)
    for m in range(d):
        col = 1 + m
        M[0, col] = 0.5j * model.zeta[m]
        M[1:d + 1, col] = 1j * model.omega[m, :] + 0.5 * (U[:, m] @ U.conj() + V[:, m] @ V.conj())
        M[d + 1:, col] = 1j * model.kappa[m, :] + 0.5 * (U[:, m] @ V + V[:, m] @ U)

        col = 1 + d + m
        M[0, col] = -0.5j * np.conj(model.zeta[m])
        M[1:d + 1, col] = -1j * model.kappa[m, :].conj() \
            - 0.5 * (V[:, m].conj() @ U.conj() + U[:, m].conj() @ V.conj())
        M[d + 1:, col] = -1j * model.omega[:, m] - 0.5 * (V[:, m].conj() @ V + U[:, m].conj() @ U)
    return AdjointActionMatrix(M=M, model=model)


def iterated_commutator(action, ell, m):
    '''The m-fold commutator [G, [G, ..., [G, L_ell]]] as a linear form; m = 0 gives L_ell.'''
    if action.model is None:
        raise ValueError("adjoint action carries no model to read L_ell from")
    if m < 0:
        raise ValueError(f"commutator order must be >= 0, got {m}")
    coefficients = kraus_form(action.model, ell).to_vector()
    for _ in range(m):
        coefficients = action.M @ coefficients
    return LinearForm.from_vector(coefficients)


def validate_action_oracle(model, space, action, ops=None):
    '''Largest interior entry of G F - F G - matrix([G, f]) over the basis forms f = 1, a_k, a_k^+.'''
    if ops is None:
        from qmsgenerator import build_operators
        ops = build_operators(model, space)
    size = action.M.shape[0]
    worst = 0.0
    for j in range(size):
        basis = np.zeros(size, dtype=complex)
        basis[j] = 1.0
        F = LinearForm.from_vector(basis).to_matrix(ops.ladders)
        image = LinearForm.from_vector(action.M[:, j]).to_matrix(ops.ladders)
        residual = space.compress(ops.G @ F - F @ ops.G - image)
        if residual.size:
            worst = max(worst, float(np.max(np.abs(residual))))
    logger.debug(f"adjoint action oracle error {worst:.3e}")
    return worst


def kraus_inversion(model):
    """
    Coefficients with a_j = sum_k lambda_jk L_k and a_j^+ = sum_k mu_jk L_k.

    Needs m = 2d and an invertible coefficient matrix C with L = C (a; a^+).

    Returns:
        tuple: (lambda d x 2d, mu d x 2d, condition number of C)
    """
    d = model.d
    if model.m != 2 * d:
        raise ConstraintError(f"inversion needs m = 2d = {2 * d} Kraus operators, got {model.m}")
    C = np.hstack([model.V.conj(), model.U])
    cond = float(np.linalg.cond(C))
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise ConstraintError(f"Kraus coefficient matrix is singular (condition number {cond:.3e})")
    inverse = np.linalg.inv(C)
    return inverse[:d], inverse[d:], cond


@dataclass(frozen=True, eq=False)
class SupportSpan:
    basis: list
    census: list = field(default_factory=list)
    contaminated_levels: list = field(default_factory=list)
    full_dim: int = 0

    @property
    def rank(self):
        return len(self.basis)

    def to_json(self):
        return {
            "rank": self.rank,
            "full_dim": self.full_dim,
            "census": to_jsonable(self.census),
            "contaminated_levels": list(self.contaminated_levels),
        }


def support_span(ops, action, psi, t, max_order=2, max_word=None, drop_tol=None):
    """
    Span of phi = P_t psi and of the products form_1 ... form_n phi, n <= max_word, where each
    form is an iterated commutator of G with some L_l of order <= max_order.

    Levels are built breadth-first: level n applies every form to the directions that level
    n-1 added, which spans all words of length n. The returned basis is an orthonormal basis
    of the interior projections. Levels longer than the interior margin are flagged in
    contaminated_levels when they carry weight outside the interior.
    """
    space = ops.space
    if t <= 0:
        raise ValueError("support_span needs t > 0")
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    if max_word is None:
        max_word = 2 * (space.interior_cutoff + 1)
    if max_word < 0:
        raise ValueError("max_word must be >= 0")

    phi = evolve_vector(ops, psi, [t]).state_at(t)
    forms = []
    for ell in range(1, ops.model.m + 1):
        for order in range(max_order + 1):
            form = iterated_commutator(action, ell, order)
            if not form.is_zero():
                forms.append(form.to_matrix(ops.ladders))

    full_basis = []
    frontier, reference = orthonormal_extend(full_basis, [phi], drop_tol=drop_tol)
    census = [{"level": 0, "candidates": 1, "added": len(frontier),
               "boundary_weight": space.boundary_weight(phi) / max(np.linalg.norm(phi), 1e-300)}]
    contaminated = []
    for level in range(1, max_word + 1):
        if not frontier:
            break
        candidates = [F @ q for q in frontier for F in forms]
        weight = max((space.boundary_weight(w) / max(np.linalg.norm(w), 1e-300)
                      for w in candidates if np.linalg.norm(w) > 0), default=0.0)
        frontier, reference = orthonormal_extend(full_basis, candidates, drop_tol=drop_tol,
                                                 reference=reference)
        census.append({"level": level, "candidates": len(candidates), "added": len(frontier),
                       "boundary_weight": weight})
        if level > space.interior_margin and weight > 0:
            contaminated.append(level)
        logger.debug(f"support level {level}: {len(candidates)} words, {len(frontier)} new directions")
    if contaminated:
        logger.warning(f"support span levels {contaminated} reach the truncation boundary")

    interior = space.interior_indices
    interior_basis = []
    projections = []
    for q in full_basis:
        projected = np.zeros_like(q)
        projected[interior] = q[interior]
        projections.append(projected)
    orthonormal_extend(interior_basis, projections, drop_tol=drop_tol)
    return SupportSpan(basis=interior_basis, census=census, contaminated_levels=contaminated,
                       full_dim=len(full_basis))
