"""
Gaussian model data (Omega, kappa, zeta, V, U), the Kossakowski matrix and the
transformations that act on it.

Kraus operators are L_l = sum_k ( conj(V[l, k]) a_k + U[l, k] a_k^dagger ),
so row l of V and U holds v_l and u_l.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from qmsutils import settings, ConstraintError, as_complex_array, to_jsonable

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

if settings.DEBUG:
    logger.setLevel(logging.DEBUG)


@dataclass(frozen=True, eq=False)
class GaussianModel:
    d: int
    omega: np.ndarray
    kappa: np.ndarray
    zeta: np.ndarray
    V: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        for name in ("omega", "kappa", "zeta", "V", "U"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex))
        d = self.d
        if d < 1:
            raise ConstraintError(f"mode count must be positive, got {d}")
        for name, shape in (("omega", (d, d)), ("kappa", (d, d)), ("zeta", (d,))):
            if np.shape(getattr(self, name)) != shape:
                raise ConstraintError(f"{name} has shape {np.shape(getattr(self, name))}, expected {shape}")
        _check_kraus_shapes(self.V, self.U, d)
        tol = settings.HERMITIAN_TOL
        if np.max(np.abs(self.omega - self.omega.conj().T)) > tol:
            raise ConstraintError("Omega is not Hermitian")
        if np.max(np.abs(self.kappa - self.kappa.T)) > tol:
            raise ConstraintError("kappa is not symmetric")
        if not (np.any(self.V != 0) or np.any(self.U != 0)):
            raise ConstraintError("either U or V must be non-zero")

    @property
    def m(self):
        return self.V.shape[0]

    @classmethod
    def from_kraus(cls, V, U, omega=None, kappa=None, zeta=None):
        '''Build a model from Kraus coefficient rows, zero Hamiltonian parts by default.'''
        V = np.atleast_2d(np.asarray(V, dtype=complex))
        U = np.atleast_2d(np.asarray(U, dtype=complex))
        d = V.shape[1]
        omega = np.zeros((d, d), dtype=complex) if omega is None else np.asarray(omega, dtype=complex)
        kappa = np.zeros((d, d), dtype=complex) if kappa is None else np.asarray(kappa, dtype=complex)
        zeta = np.zeros(d, dtype=complex) if zeta is None else np.asarray(zeta, dtype=complex).reshape(-1)
        return cls(d=d, omega=omega, kappa=kappa, zeta=zeta, V=V, U=U)

    @classmethod
    def from_json(cls, data):
        '''Read the JSON model schema {"d", "omega", "kappa", "zeta", "V", "U"}.'''
        d = int(data["d"])
        omega = as_complex_array(data.get("omega", np.zeros((d, d))), 2, "omega")
        kappa = as_complex_array(data.get("kappa", np.zeros((d, d))), 2, "kappa")
        zeta = as_complex_array(data.get("zeta", np.zeros(d)), 1, "zeta")
        V = as_complex_array(data["V"], 2, "V")
        U = as_complex_array(data["U"], 2, "U")
        return cls(d=d, omega=omega, kappa=kappa, zeta=zeta, V=V, U=U)

    def to_json(self):
        return {
            "d": self.d,
            "omega": to_jsonable(self.omega),
            "kappa": to_jsonable(self.kappa),
            "zeta": to_jsonable(self.zeta),
            "V": to_jsonable(self.V),
            "U": to_jsonable(self.U),
        }


@dataclass(frozen=True, eq=False)
class KossakowskiMatrix:
    K: np.ndarray
    eps0: float
    rank: int
    strictly_positive: bool
    eigenvalues: np.ndarray

    def to_json(self):
        return {
            "K": to_jsonable(self.K),
            "eps0": self.eps0,
            "rank": self.rank,
            "strictly_positive": self.strictly_positive,
            "eigenvalues": to_jsonable(self.eigenvalues),
        }


@dataclass(frozen=True, eq=False)
class BogoliubovPair:
    E: np.ndarray
    F: np.ndarray

    def residuals(self):
        '''Residuals of E*E - F*F = 1 and E^T F - F^T E = 0 (max-abs norm).'''
        d = self.E.shape[0]
        first = self.E.conj().T @ self.E - self.F.conj().T @ self.F - np.eye(d)
        second = self.E.T @ self.F - self.F.T @ self.E
        return float(np.max(np.abs(first))), float(np.max(np.abs(second)))

    def mixing_matrix(self):
        '''M with [a; a^dagger] = M [b; b^dagger], i.e. [[E^T, F^T], [F^*, E^*]].'''
        return np.block([[self.E.T, self.F.T], [self.F.conj().T, self.E.conj().T]])


@dataclass(frozen=True, eq=False)
class TwoBosonParams:
    gamma_minus: np.ndarray
    gamma_plus: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        for name in ("gamma_minus", "gamma_plus", "omega"):
            value = np.asarray(getattr(self, name), dtype=complex)
            object.__setattr__(self, name, value)
            if value.shape != (2, 2):
                raise ConstraintError(f"{name} must be 2x2")
            if np.max(np.abs(value - value.conj().T)) > settings.HERMITIAN_TOL:
                raise ConstraintError(f"{name} is not Hermitian")
        for name in ("gamma_minus", "gamma_plus"):
            if np.min(np.linalg.eigvalsh(getattr(self, name))) < -settings.EIG_RELATIVE_TOL:
                raise ConstraintError(f"{name} is not positive semidefinite")


def _check_kraus_shapes(V, U, d=None):
    if np.ndim(V) != 2 or np.ndim(U) != 2 or np.shape(V) != np.shape(U):
        raise ConstraintError(f"V and U must be m x d matrices of equal shape, got {np.shape(V)} and {np.shape(U)}")
    if d is not None and np.shape(V)[1] != d:
        raise ConstraintError(f"V and U have {np.shape(V)[1]} columns, the model has d={d}")


def kraus_factor(V, U):
    '''B = [V^T; U^*], the 2d x m factor with K = B B^dagger.'''
    return np.vstack([np.asarray(V).T, np.asarray(U).conj().T])


def build_kossakowski(V, U, rel_tol=None):
    """
    Kossakowski matrix K = [[V^T conj(V), V^T U], [U^* conj(V), U^* U]].

    Eigenvalues below rel_tol * ||K|| (default settings.EIG_RELATIVE_TOL) count as zero
    for the rank and for the strict-positivity verdict.
    """
    V = np.asarray(V, dtype=complex)
    U = np.asarray(U, dtype=complex)
    _check_kraus_shapes(V, U)
    if not (np.any(V != 0) or np.any(U != 0)):
        raise ConstraintError("either U or V must be non-zero")
    if rel_tol is None:
        rel_tol = settings.EIG_RELATIVE_TOL

    B = kraus_factor(V, U)
    K = B @ B.conj().T
    K = 0.5 * (K + K.conj().T)
    eigenvalues = np.linalg.eigvalsh(K)
    threshold = rel_tol * max(np.linalg.norm(K, 2), np.finfo(float).tiny)
    rank = int(np.sum(eigenvalues > threshold))
    smallest = float(eigenvalues[0])
    logger.debug(f"Kossakowski matrix: 2d={K.shape[0]} m={V.shape[0]} rank={rank} min eig={smallest:.3e}")
    return KossakowskiMatrix(K=K, eps0=max(smallest, 0.0), rank=rank,
                             strictly_positive=bool(smallest > threshold),
                             eigenvalues=eigenvalues)


def hamiltonian_matrix(model):
    '''Block matrix [[Omega, kappa], [conj(kappa), Omega^T]] of the quadratic part of H.'''
    return np.block([[model.omega, model.kappa], [model.kappa.conj(), model.omega.T]])


def check_minimality(V, U, rel_tol=None):
    """
    Minimal GKLS representation test: ker(V^*) and ker(U^T) intersect only in 0.

    Equivalent to the 2d x m matrix [V^*; U^T] having rank m. Its squared singular
    values are the eigenvalues of K, so the same relative threshold is applied to
    them; the verdict then agrees with rank(K) == m.
    """
    V = np.asarray(V, dtype=complex)
    U = np.asarray(U, dtype=complex)
    _check_kraus_shapes(V, U)
    if rel_tol is None:
        rel_tol = settings.EIG_RELATIVE_TOL
    stacked = np.vstack([V.conj().T, U.T])
    singular = np.linalg.svd(stacked, compute_uv=False)
    if singular.size == 0 or singular[0] == 0:
        return False
    rank = int(np.sum(singular ** 2 > rel_tol * singular[0] ** 2))
    return rank == V.shape[0]


def mix_kraus(model, r, tol=None):
    '''Kraus operators L'_l = sum_j r[l, j] L_j for a unitary r: V' = conj(r) V, U' = r U.'''
    r = np.asarray(r, dtype=complex)
    if tol is None:
        tol = settings.UNITARY_TOL
    if r.shape != (model.m, model.m):
        raise ConstraintError(f"mixing matrix must be {model.m}x{model.m}, got {r.shape}")
    if np.max(np.abs(r.conj().T @ r - np.eye(model.m))) > tol:
        raise ConstraintError("mixing matrix is not unitary")
    return GaussianModel(d=model.d, omega=model.omega, kappa=model.kappa, zeta=model.zeta,
                         V=r.conj() @ model.V, U=r @ model.U)


def bogoliubov_transform(model, pair, tol=None):
    """
    Rewrite the model in Bogoliubov-transformed modes b, with [a; a^dagger] = M [b; b^dagger].

    Kraus rows follow [conj(V'), U'] = [conj(V), U] M, so the Kossakowski matrix becomes
    T K T^dagger with T = M^dagger = [[conj(E), F], [conj(F), E]]. The Hamiltonian block
    matrix follows the same congruence and zeta' = F conj(zeta) + conj(E) zeta;
    additive constants are dropped.
    """
    if tol is None:
        tol = settings.UNITARY_TOL
    first, second = pair.residuals()
    if first > tol or second > tol:
        raise ConstraintError(
            f"(E, F) violates the Bogoliubov constraints: residuals {first:.2e}, {second:.2e}")
    d = model.d
    if pair.E.shape != (d, d) or pair.F.shape != (d, d):
        raise ConstraintError("Bogoliubov pair does not match the mode count")

    M = pair.mixing_matrix()
    rows = np.hstack([model.V.conj(), model.U]) @ M
    V_new = rows[:, :d].conj()
    U_new = rows[:, d:]

    T = M.conj().T
    hmat = T @ hamiltonian_matrix(model) @ T.conj().T
    omega_new = 0.5 * (hmat[:d, :d] + hmat[:d, :d].conj().T)
    kappa_new = 0.5 * (hmat[:d, d:] + hmat[:d, d:].T)
    zeta_new = pair.F @ model.zeta.conj() + pair.E.conj() @ model.zeta
    return GaussianModel(d=d, omega=omega_new, kappa=kappa_new, zeta=zeta_new, V=V_new, U=U_new)


def generate_bogoliubov(d, seed, rotation=1.0, squeeze=0.5):
    """
    Random Bogoliubov pair from a random quadratic Hamiltonian.

    The mixing matrix is M = expm(-i Sz Hq), Sz = diag(1, -1) blockwise, with
    Hq = [[A, B], [conj(B), A^T]], A Hermitian (scaled by rotation) and B symmetric
    (scaled by squeeze). M preserves Sz, which is exactly the Bogoliubov constraint; squeeze=0 gives F=0.
    """
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    A = rotation * 0.5 * (A + A.conj().T)
    B = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    B = squeeze * 0.5 * (B + B.T)
    hq = np.block([[A, B], [B.conj(), A.T]])
    sz = np.diag(np.concatenate([np.ones(d), -np.ones(d)]))
    M = expm(-1j * sz @ hq)
    return BogoliubovPair(E=M[:d, :d].T.copy(), F=M[:d, d:].T.copy())


def _descending_eigh(matrix):
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    order = np.argsort(eigenvalues)[::-1]
    return np.clip(eigenvalues[order], 0.0, None), eigenvectors[:, order]


def two_boson_model(params):
    """
    Two bosons in a common bath: d = 2, m = 4, kappa = zeta = 0.

    L1, L2 are annihilation-type with weights from the spectral decomposition of
    gamma_minus, L3, L4 creation-type from gamma_plus (eigenpairs in descending
    order, zero eigenvalues still emit a zero row). Rows use the conjugated
    eigenvectors so that K = block-diag(gamma_minus, gamma_plus) also for complex
    gammas; for real gammas this is the plain spectral form.
    """
    lam_minus, vec_minus = _descending_eigh(params.gamma_minus)
    lam_plus, vec_plus = _descending_eigh(params.gamma_plus)

    V = np.zeros((4, 2), dtype=complex)
    U = np.zeros((4, 2), dtype=complex)
    for i in range(2):
        V[i] = np.sqrt(lam_minus[i]) * vec_minus[:, i]
        U[2 + i] = np.sqrt(lam_plus[i]) * vec_plus[:, i].conj()
    omega = 0.5 * (params.omega + params.omega.conj().T)
    return GaussianModel(d=2, omega=omega, kappa=np.zeros((2, 2), dtype=complex),
                         zeta=np.zeros(2, dtype=complex), V=V, U=U)
