"""
Finite-dimensional GKLS generators written with a Kossakowski matrix c over a
traceless orthonormal basis F_1..F_{n^2-1} of M_n(C):

    L(x)   = i[H, x] + 1/2 sum_kj c_kj ( [F_j^+, x] F_k + F_j^+ [x, F_k] )
    L_*(r) = -i[H, r] + 1/2 sum_kj c_kj ( [F_k, r F_j^+] + [F_k r, F_j^+] )
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import expm

from qmsgenerator import Superoperator, vec, unvec, HEISENBERG, SCHRODINGER
from qmsutils import (settings, ConstraintError, DimensionCapError, as_complex_array,
                      hermiticity_error, random_unit_vectors, sample_count, to_jsonable)

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

if settings.DEBUG:
    logger.setLevel(logging.DEBUG)


def gellmann_basis(n):
    """
    Generalized Gell-Mann matrices of M_n(C) scaled to tr(F_j F_k^+) = delta_jk.

    Order: symmetric (E_jk + E_kj), antisymmetric (-i E_jk + i E_kj) for j < k,
    then the diagonal family sqrt(2 / (l (l + 1))) diag(1, .., 1, -l, 0, .., 0).
    """
    if n < 2:
        raise ValueError(f"Gell-Mann basis needs n >= 2, got {n}")
    symmetric, antisymmetric, diagonal = [], [], []
    for j in range(n):
        for k in range(j + 1, n):
            s = np.zeros((n, n), dtype=complex)
            s[j, k] = s[k, j] = 1.0
            symmetric.append(s)
            a = np.zeros((n, n), dtype=complex)
            a[j, k] = -1j
            a[k, j] = 1j
            antisymmetric.append(a)
    for l in range(1, n):
        entries = [1.0] * l + [-float(l)] + [0.0] * (n - l - 1)
        diagonal.append(np.sqrt(2.0 / (l * (l + 1))) * np.diag(entries).astype(complex))
    return [m / np.sqrt(2.0) for m in symmetric + antisymmetric + diagonal]


@dataclass(frozen=True, eq=False)
class FiniteGKLSModel:
    n: int
    H: np.ndarray
    c: np.ndarray
    F: tuple = None

    def __post_init__(self):
        n = self.n
        if n < 2:
            raise ConstraintError(f"Hilbert dimension must be >= 2, got {n}")
        if n > settings.FD_MAX_DIM:
            raise DimensionCapError(f"n={n} is above FD_MAX_DIM={settings.FD_MAX_DIM}")
        H = np.asarray(self.H, dtype=complex)
        c = np.asarray(self.c, dtype=complex)
        F = tuple(gellmann_basis(n)) if self.F is None else tuple(np.asarray(f, dtype=complex) for f in self.F)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "F", F)

        size = n * n - 1
        if H.shape != (n, n) or hermiticity_error(H) > settings.HERMITIAN_TOL:
            raise ConstraintError("H must be a Hermitian n x n matrix")
        if c.shape != (size, size):
            raise ConstraintError(f"c must be {size}x{size}, got {c.shape}")
        if hermiticity_error(c) > settings.HERMITIAN_TOL:
            raise ConstraintError("Kossakowski matrix c is not Hermitian")
        if np.min(np.linalg.eigvalsh(0.5 * (c + c.conj().T))) < -1e-10:
            raise ConstraintError("Kossakowski matrix c is not positive semidefinite")
        if len(F) != size:
            raise ConstraintError(f"need {size} basis matrices, got {len(F)}")
        gram = np.array([[np.trace(fk @ fj.conj().T) for fj in F] for fk in F])
        if np.max(np.abs(gram - np.eye(size))) > 1e-12 or max(abs(np.trace(f)) for f in F) > 1e-12:
            raise ConstraintError("basis matrices must be traceless and orthonormal")

    @classmethod
    def from_json(cls, data):
        '''Read {"n", "H", "c", "basis": "gellmann"}.'''
        basis = data.get("basis", "gellmann")
        if basis != "gellmann":
            raise ConstraintError(f"unknown basis {basis!r}")
        n = int(data["n"])
        H = as_complex_array(data.get("H", np.zeros((n, n))), 2, "H")
        c = as_complex_array(data["c"], 2, "c")
        return cls(n=n, H=H, c=c)

    def to_json(self):
        return {"n": self.n, "H": to_jsonable(self.H), "c": to_jsonable(self.c), "basis": "gellmann"}

    def damping_operator(self):
        '''sum_kj c_kj F_j^+ F_k, the anticommutator part of the generator.'''
        A = np.zeros((self.n, self.n), dtype=complex)
        for k, fk in enumerate(self.F):
            for j, fj in enumerate(self.F):
                if self.c[k, j] != 0:
                    A += self.c[k, j] * fj.conj().T @ fk
        return A

    def no_jump_generator(self):
        '''G = -iH - 1/2 sum_kj c_kj F_j^+ F_k.'''
        return -1j * self.H - 0.5 * self.damping_operator()


def build_fd_generators(model):
    '''Heisenberg and Schrodinger superoperators on column-stacked n x n matrices.'''
    n = model.n
    eye = np.eye(n, dtype=complex)
    A = model.damping_operator()
    heis = 1j * (np.kron(eye, model.H) - np.kron(model.H.T, eye)) \
        - 0.5 * (np.kron(eye, A) + np.kron(A.T, eye))
    schr = -1j * (np.kron(eye, model.H) - np.kron(model.H.T, eye)) \
        - 0.5 * (np.kron(eye, A) + np.kron(A.T, eye))
    for k, fk in enumerate(model.F):
        for j, fj in enumerate(model.F):
            ckj = model.c[k, j]
            if ckj == 0:
                continue
            heis = heis + ckj * np.kron(fk.T, fj.conj().T)
            schr = schr + ckj * np.kron(fj.conj(), fk)
    return (Superoperator(matrix=sparse.csr_matrix(heis), picture=HEISENBERG),
            Superoperator(matrix=sparse.csr_matrix(schr), picture=SCHRODINGER))


def heisenberg_semigroup(model, t, generator=None):
    '''Dense matrix of T_t = exp(t L) on column-stacked matrices.'''
    if generator is None:
        generator, _ = build_fd_generators(model)
    return expm(t * generator.matrix.toarray())


def _expectation(propagator, u, v):
    x = np.outer(u, u.conj())
    image = unvec(propagator @ vec(x), len(u))
    return float(np.vdot(v, image @ v).real)


def _check_unit(vector, name):
    vector = np.asarray(vector, dtype=complex)
    if abs(np.linalg.norm(vector) - 1.0) > 1e-10:
        raise ConstraintError(f"{name} must be a unit vector")
    return vector


def initial_derivative(model, u, v, step=None):
    """
    d/dt <v, T_t(|u><u|) v> at t = 0 for orthogonal unit u, v.

    Returns:
        tuple: (analytic sum_kj c_kj conj(w_j) w_k with w_k = <u, F_k v>,
                numeric second-order one-sided difference with step h)
    """
    u = _check_unit(u, "u")
    v = _check_unit(v, "v")
    if abs(np.vdot(u, v)) > 1e-10:
        raise ConstraintError("u and v must be orthogonal")
    h = settings.FD_DIFF_STEP if step is None else step
    w = np.array([np.vdot(u, fk @ v) for fk in model.F])
    analytic = float(np.real(w.conj() @ model.c.T @ w))
    generator, _ = build_fd_generators(model)
    values = [_expectation(heisenberg_semigroup(model, s, generator), u, v) for s in (0.0, h, 2 * h)]
    numeric = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
    return analytic, float(numeric)


def _sample_pairs(rng, count, n):
    '''Unit pairs (u, v); every second pair has v orthogonal to u.'''
    us = random_unit_vectors(rng, count, n)
    vs = random_unit_vectors(rng, count, n)
    pairs = []
    for index, (u, v) in enumerate(zip(us, vs)):
        if index % 2 == 1:
            v = v - u * np.vdot(u, v)
            v = v / np.linalg.norm(v)
        pairs.append((u, v))
    return pairs


def fd_positivity_probe(model, t_grid, sample_grid=None, seed=0):
    '''Smallest <v, T_t(|u><u|) v> over seeded unit pairs and the times in t_grid (all > 0).'''
    t_grid = [float(t) for t in t_grid]
    if not t_grid or min(t_grid) <= 0:
        raise ValueError("fd_positivity_probe needs times t > 0")
    count = sample_count(sample_grid)
    pairs = _sample_pairs(np.random.default_rng(seed), count, model.n)
    generator, _ = build_fd_generators(model)
    smallest = np.inf
    for t in t_grid:
        propagator = heisenberg_semigroup(model, t, generator)
        for u, v in pairs:
            smallest = min(smallest, _expectation(propagator, u, v))
    logger.debug(f"fd probe: {count} pairs x {len(t_grid)} times, min {smallest:.3e}")
    return float(smallest)


def no_jump_bound(model, u, v, t):
    '''(<v, T_t(|u><u|) v>, |<v, P_t^* u>|^2) with P_t = exp(tG); the first is never below the second.'''
    u = _check_unit(u, "u")
    v = _check_unit(v, "v")
    value = _expectation(heisenberg_semigroup(model, t), u, v)
    P = expm(t * model.no_jump_generator())
    bound = float(abs(np.vdot(v, P.conj().T @ u)) ** 2)
    return value, bound


def uniform_floor(model, t, n_samples=None, seed=0):
    '''min over seeded unit u of the smallest eigenvalue of T_t(|u><u|).'''
    if t <= 0:
        raise ValueError("uniform_floor needs t > 0")
    n_samples = sample_count(n_samples)
    propagator = heisenberg_semigroup(model, t)
    floor = np.inf
    for u in random_unit_vectors(np.random.default_rng(seed), n_samples, model.n):
        image = unvec(propagator @ vec(np.outer(u, u.conj())), model.n)
        floor = min(floor, float(np.linalg.eigvalsh(0.5 * (image + image.conj().T))[0]))
    return floor


def rotate_basis(model, r, tol=None):
    '''Basis F'_k = sum_j r_kj F_j with c' = conj(r) c r^T; the generator is unchanged.'''
    r = np.asarray(r, dtype=complex)
    size = len(model.F)
    tol = settings.UNITARY_TOL if tol is None else tol
    if r.shape != (size, size) or np.max(np.abs(r.conj().T @ r - np.eye(size))) > tol:
        raise ConstraintError(f"rotation must be a unitary {size}x{size} matrix")
    F_new = [sum(r[k, j] * model.F[j] for j in range(size)) for k in range(size)]
    c_new = r.conj() @ model.c @ r.T
    c_new = 0.5 * (c_new + c_new.conj().T)
    return FiniteGKLSModel(n=model.n, H=model.H, c=c_new, F=tuple(F_new))


def diagonalize_kossakowski(model):
    '''Rotate the basis so that c becomes diagonal; returns (model, eigenvalues of c).'''
    eigenvalues, W = np.linalg.eigh(0.5 * (model.c + model.c.conj().T))
    return rotate_basis(model, W.T), eigenvalues
