"""
Truncated bosonic Fock space of d modes.

The space keeps every number vector e(n_1,...,n_d) with total excitation
|n| = n_1 + ... + n_d <= N_max. Basis order is graded lexicographic: by |n|,
then lexicographically inside a grade, so each grade is a contiguous block.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import gammaln

from qmsutils import settings, DimensionCapError, EmptyInteriorError

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

if settings.DEBUG:
    logger.setLevel(logging.DEBUG)


@dataclass(frozen=True, eq=False)
class TruncatedFockSpace:
    d: int
    n_max: int
    basis: tuple
    index_of: dict
    interior_margin: int = 2
    grades: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self):
        return len(self.basis)

    @property
    def interior_cutoff(self):
        return self.n_max - self.interior_margin

    @property
    def interior_indices(self):
        '''Indices of the basis vectors with |n| <= N_max - interior_margin.'''
        if self.interior_margin > self.n_max:
            raise EmptyInteriorError(
                f"interior margin {self.interior_margin} exceeds N_max={self.n_max}")
        return np.flatnonzero(self.grades <= self.interior_cutoff)

    @property
    def interior_dim(self):
        return len(self.interior_indices)

    def basis_vector(self, n):
        '''The number vector e(n) as a dense complex D-vector.'''
        n = tuple(int(x) for x in n)
        if n not in self.index_of:
            raise KeyError(f"{n} is not a basis vector of the truncated space")
        vector = np.zeros(self.dim, dtype=complex)
        vector[self.index_of[n]] = 1.0
        return vector

    def grade_slice(self, k):
        '''Contiguous index range of grade k.'''
        start = math.comb(k - 1 + self.d, self.d) if k > 0 else 0
        return slice(start, math.comb(k + self.d, self.d))

    def compress(self, operator):
        '''Dense interior block of a D x D operator.'''
        idx = self.interior_indices
        if sparse.issparse(operator):
            return operator.tocsr()[idx][:, idx].toarray()
        return np.asarray(operator)[np.ix_(idx, idx)]

    def boundary_weight(self, vector):
        '''Norm of the part of a vector outside the interior subspace.'''
        outside = self.grades > self.interior_cutoff
        return float(np.linalg.norm(np.asarray(vector)[outside]))


@dataclass(frozen=True, eq=False)
class LadderOperators:
    a: list
    adag: list
    number: sparse.csr_matrix


def _compositions(k, d):
    # first entry ascending, so tuples come out in lexicographic order
    if d == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, d - 1):
            yield (first,) + rest


def _graded_multi_indices(d, n_max):
    for k in range(n_max + 1):
        yield from _compositions(k, d)


def build_space(d, n_max, interior_margin=None, dimension_cap=None):
    """
    Enumerate the truncated Fock space of d modes with total excitation <= n_max.

    Args:
        d (int): number of modes, >= 1.
        n_max (int): total-excitation cutoff, >= 1.
        interior_margin (int): grades excluded from the interior (default settings.INTERIOR_MARGIN).
        dimension_cap (int): largest allowed dimension (default settings.DIMENSION_CAP).

    Returns:
        TruncatedFockSpace
    """
    if d < 1 or n_max < 1:
        raise ValueError(f"need d >= 1 and N_max >= 1, got d={d}, N_max={n_max}")
    if interior_margin is None:
        interior_margin = settings.INTERIOR_MARGIN
    if interior_margin < 0:
        raise ValueError("interior margin must be non-negative")
    if dimension_cap is None:
        dimension_cap = settings.DIMENSION_CAP

    dim = math.comb(n_max + d, d)
    if dim > dimension_cap:
        raise DimensionCapError(
            f"d={d}, N_max={n_max} gives D={dim} above the cap of {dimension_cap}")

    basis = tuple(_graded_multi_indices(d, n_max))
    index_of = {n: i for i, n in enumerate(basis)}
    grades = np.array([sum(n) for n in basis], dtype=int)
    logger.debug(f"built Fock space d={d} N_max={n_max} D={dim} margin={interior_margin}")
    return TruncatedFockSpace(d=d, n_max=n_max, basis=basis, index_of=index_of,
                              interior_margin=interior_margin, grades=grades)


def build_ladders(space):
    '''Sparse annihilation, creation and number operators on the truncated space.
    Creation rows leaving the cutoff are dropped (hard truncation).'''
    dim = space.dim
    a_ops, adag_ops = [], []
    for j in range(space.d):
        rows, cols, vals = [], [], []
        up_rows, up_cols, up_vals = [], [], []
        for i, n in enumerate(space.basis):
            if n[j] > 0:
                lowered = n[:j] + (n[j] - 1,) + n[j + 1:]
                rows.append(space.index_of[lowered])
                cols.append(i)
                vals.append(np.sqrt(n[j]))
            if sum(n) + 1 <= space.n_max:
                raised = n[:j] + (n[j] + 1,) + n[j + 1:]
                up_rows.append(space.index_of[raised])
                up_cols.append(i)
                up_vals.append(np.sqrt(n[j] + 1))
        a_ops.append(sparse.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(dim, dim)))
        adag_ops.append(sparse.csr_matrix((np.array(up_vals, dtype=complex), (up_rows, up_cols)), shape=(dim, dim)))

    number = sparse.diags(space.grades.astype(complex), format="csr")
    return LadderOperators(a=a_ops, adag=adag_ops, number=number)


def coherent_vector(space, g):
    '''Unnormalized truncation of the coherent vector e_g:
    the component at n is prod_j g_j^n_j / sqrt(n_j!), evaluated in log space.'''
    g = np.asarray(g, dtype=complex).reshape(-1)
    if g.size != space.d:
        raise ValueError(f"g has {g.size} entries, the space has {space.d} modes")
    occupations = np.array(space.basis, dtype=int)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_powers = np.where(occupations == 0, 0.0, occupations * np.log(np.abs(g))[np.newaxis, :])
    log_modulus = log_powers.sum(axis=1) - 0.5 * gammaln(occupations + 1).sum(axis=1)
    phase = occupations @ np.angle(g)
    return np.exp(log_modulus + 1j * phase)


def interior_projector(space):
    '''Orthogonal projection onto span{e(n) : |n| <= N_max - interior_margin}.'''
    diagonal = np.zeros(space.dim, dtype=complex)
    diagonal[space.interior_indices] = 1.0
    return sparse.diags(diagonal, format="csr")
