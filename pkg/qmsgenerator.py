"""
Truncated matrices of H, L_l, G, G0, N and the Lindblad superoperators.

Vectorization is column-stacking throughout: vec(A X B) = (B^T kron A) vec(X).
The Kraus sums run over l = 1..m (the number of rows of V and U).
"""
import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from qmsfock import build_ladders
from qmsutils import settings, BoundaryContaminationError, hermiticity_error

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

if settings.DEBUG:
    logger.setLevel(logging.DEBUG)

SCHRODINGER = "schrodinger"
HEISENBERG = "heisenberg"


@dataclass(frozen=True, eq=False)
class TruncatedOperators:
    H: sparse.csr_matrix
    G: sparse.csr_matrix
    G0: sparse.csr_matrix
    N: sparse.csr_matrix
    L: list
    space: object
    ladders: object
    model: object

    def check_invariants(self):
        '''Residuals of the structural identities on the interior compression.'''
        space = self.space
        h_int = space.compress(self.H)
        g0_int = space.compress(self.G0)
        kraus_sum = sum((l.conj().T @ l for l in self.L), sparse.csr_matrix(self.H.shape, dtype=complex))
        g0_err = np.max(np.abs(space.compress(self.G0 + 0.5 * kraus_sum)), initial=0.0)
        g_err = np.max(np.abs(space.compress(self.G - (-1j * self.H + self.G0))), initial=0.0)
        g0_max_eig = float(np.max(np.linalg.eigvalsh(0.5 * (g0_int + g0_int.conj().T)), initial=-np.inf))
        return {
            "hamiltonian_hermiticity": hermiticity_error(h_int),
            "g0_kraus_residual": float(g0_err),
            "g_residual": float(g_err),
            "g0_max_eig": g0_max_eig,
        }


@dataclass(frozen=True, eq=False)
class Superoperator:
    matrix: sparse.csr_matrix
    picture: str
    space: object = None

    def apply(self, x):
        '''Apply the superoperator to a D x D matrix.'''
        x = np.asarray(x, dtype=complex)
        return unvec(self.matrix @ vec(x), x.shape[0])


def vec(x):
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, dim):
    return np.asarray(v).reshape((dim, dim), order="F")


def build_operators(model, space):
    """
    Assemble H, L_l, G = -iH + G0 and G0 = -(1/2) sum_l L_l^dagger L_l on the truncated space.

    H = sum_jk ( Omega_jk a_j^+ a_k + kappa_jk/2 a_j^+ a_k^+ + conj(kappa_jk)/2 a_j a_k )
        + sum_j ( zeta_j/2 a_j^+ + conj(zeta_j)/2 a_j )
    L_l = sum_k ( conj(V_lk) a_k + U_lk a_k^+ )
    """
    if model.d != space.d:
        raise ValueError(f"model has d={model.d} modes, the space has d={space.d}")
    ladders = build_ladders(space)
    a, adag = ladders.a, ladders.adag
    dim = space.dim
    H = sparse.csr_matrix((dim, dim), dtype=complex)
    for j in range(model.d):
        for k in range(model.d):
            if model.omega[j, k] != 0:
                H = H + model.omega[j, k] * (adag[j] @ a[k])
            if model.kappa[j, k] != 0:
                H = H + 0.5 * model.kappa[j, k] * (adag[j] @ adag[k]) \
                    + 0.5 * np.conj(model.kappa[j, k]) * (a[j] @ a[k])
        if model.zeta[j] != 0:
            H = H + 0.5 * model.zeta[j] * adag[j] + 0.5 * np.conj(model.zeta[j]) * a[j]

    L = []
    for row in range(model.m):
        op = sparse.csr_matrix((dim, dim), dtype=complex)
        for k in range(model.d):
            if model.V[row, k] != 0:
                op = op + np.conj(model.V[row, k]) * a[k]
            if model.U[row, k] != 0:
                op = op + model.U[row, k] * adag[k]
        L.append(op.tocsr())

    G0 = sparse.csr_matrix((dim, dim), dtype=complex)
    for op in L:
        G0 = G0 - 0.5 * (op.conj().T @ op)
    G0 = G0.tocsr()
    H = H.tocsr()
    G = (-1j * H + G0).tocsr()
    logger.debug(f"built operators D={dim} m={model.m} nnz(G)={G.nnz}")
    return TruncatedOperators(H=H, G=G, G0=G0, N=ladders.number, L=L,
                              space=space, ladders=ladders, model=model)


def build_lindbladian(ops, picture=SCHRODINGER):
    """
    Superoperator on column-stacked D x D matrices.

    schrodinger: rho -> -i[H, rho] + sum_l ( L rho L^+ - 1/2 {L^+ L, rho} )
    heisenberg:  x -> i[H, x] - 1/2 sum_l ( L^+ L x - 2 L^+ x L + x L^+ L )
    """
    if picture not in (SCHRODINGER, HEISENBERG):
        raise ValueError(f"unknown picture {picture!r}")
    dim = ops.space.dim
    eye = sparse.identity(dim, dtype=complex, format="csr")
    H = ops.H
    if picture == SCHRODINGER:
        total = -1j * (sparse.kron(eye, H) - sparse.kron(H.T, eye))
        for op in ops.L:
            op_dag = op.conj().T
            lhl = op_dag @ op
            total = total + sparse.kron(op.conj(), op) \
                - 0.5 * sparse.kron(eye, lhl) - 0.5 * sparse.kron(lhl.T, eye)
    else:
        total = 1j * (sparse.kron(eye, H) - sparse.kron(H.T, eye))
        for op in ops.L:
            op_dag = op.conj().T
            lhl = op_dag @ op
            total = total - 0.5 * sparse.kron(eye, lhl) + sparse.kron(op.T, op_dag) \
                - 0.5 * sparse.kron(lhl.T, eye)
    return Superoperator(matrix=total.tocsr(), picture=picture, space=ops.space)


def _require_interior(space, vector, name):
    vector = np.asarray(vector, dtype=complex)
    scale = max(np.linalg.norm(vector), 1.0)
    if space.boundary_weight(vector) > 1e-14 * scale:
        raise BoundaryContaminationError(f"{name} has weight outside the interior subspace")
    return vector


def quadratic_form_apply(ops, x, v, u):
    """
    Evaluate the form
        i<Hv, xu> - i<v, xHu> - 1/2 sum_l ( <v, x L^+L u> - 2 <L v, x L u> + <L^+L v, x u> )
    for interior vectors v, u. Equals <v, L(x) u> with the Heisenberg generator.
    """
    space = ops.space
    v = _require_interior(space, v, "v")
    u = _require_interior(space, u, "u")
    x = np.asarray(x, dtype=complex)
    H = ops.H
    value = 1j * np.vdot(H @ v, x @ u) - 1j * np.vdot(v, x @ (H @ u))
    for op in ops.L:
        lv, lu = op @ v, op @ u
        lhl_u = op.conj().T @ lu
        lhl_v = op.conj().T @ lv
        value -= 0.5 * (np.vdot(v, x @ lhl_u) - 2 * np.vdot(lv, x @ lu) + np.vdot(lhl_v, x @ u))
    return complex(value)


def ladder_stack(ops, xi):
    '''a#xi = (a_1 xi, ..., a_d xi, a_1^+ xi, ..., a_d^+ xi) as the columns of a D x 2d array.'''
    columns = [a @ xi for a in ops.ladders.a] + [adag @ xi for adag in ops.ladders.adag]
    return np.column_stack(columns)


def minus2G0_quadratic_identity(ops, K, xi):
    '''Return (<xi, -2 G0 xi>, <a#xi, K a#xi>) for an interior vector xi.'''
    xi = _require_interior(ops.space, xi, "xi")
    K = getattr(K, "K", K)
    lhs = np.vdot(xi, -2.0 * (ops.G0 @ xi)).real
    W = ladder_stack(ops, xi)
    gram = W.conj().T @ W
    rhs = np.sum(K * gram).real
    return float(lhs), float(rhs)


def dissipator_from_kossakowski(ops, K, x):
    '''L0(x) = 1/2 sum_pq K_pq ( [X_p^+, x] X_q + X_p^+ [x, X_q] ) over X = (a_1..a_d, a_1^+..a_d^+).'''
    K = getattr(K, "K", K)
    x = np.asarray(x, dtype=complex)
    X = [op.toarray() for op in list(ops.ladders.a) + list(ops.ladders.adag)]
    result = np.zeros_like(x)
    for p, xp in enumerate(X):
        xp_dag = xp.conj().T
        for q, xq in enumerate(X):
            if K[p, q] == 0:
                continue
            term = (xp_dag @ x - x @ xp_dag) @ xq + xp_dag @ (x @ xq - xq @ x)
            result = result + 0.5 * K[p, q] * term
    return result


def kraus_dissipator(ops, x):
    '''L0(x) = 1/2 sum_l ( [L^+, x] L + L^+ [x, L] ), the Hamiltonian-free Heisenberg generator.'''
    x = np.asarray(x, dtype=complex)
    result = np.zeros_like(x)
    for op in ops.L:
        op_dag = op.conj().T
        dense = op.toarray()
        dense_dag = op_dag.toarray()
        result = result + 0.5 * ((dense_dag @ x - x @ dense_dag) @ dense + dense_dag @ (x @ dense - dense @ x))
    return result


def export_triplets(matrix, path):
    '''Write a sparse matrix as (row, col, re, im) text triplets, one nonzero per line.'''
    coo = sparse.coo_matrix(matrix)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["row", "col", "re", "im"])
        for r, c, value in sorted(zip(coo.row, coo.col, coo.data)):
            writer.writerow([int(r), int(c), repr(float(value.real)), repr(float(value.imag))])
    logger.debug(f"exported {coo.nnz} triplets to {path}")
