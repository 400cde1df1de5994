"""
Time evolution on the truncated space: density matrices under the Schrodinger-picture
Lindbladian and vectors under the contraction semigroup P_t = e^{tG}.
"""
import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import expm

from qmsgenerator import vec, unvec
from qmsutils import (settings, ConstraintError, DimensionCapError, EmptyInteriorError,
                      IntegrationError, hermiticity_error, relative_rank)

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

if settings.DEBUG:
    logger.setLevel(logging.DEBUG)

METHODS = ("auto", "expm", "rk4")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    rho: np.ndarray
    t: float = 0.0

    def check(self, herm_tol=1e-10, trace_tol=1e-8, eig_tol=1e-8):
        '''Raise ConstraintError unless rho is Hermitian, unit trace and positive up to drift.'''
        rho = np.asarray(self.rho)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ConstraintError(f"density matrix must be square, got shape {rho.shape}")
        if hermiticity_error(rho) > herm_tol:
            raise ConstraintError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > trace_tol:
            raise ConstraintError(f"density matrix has trace {np.trace(rho).real:.6g}, expected 1")
        if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -eig_tol:
            raise ConstraintError("density matrix has a negative eigenvalue")
        return self


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    times: list
    states: list
    stats: list = field(default_factory=list)
    method: str = "expm"

    def state_at(self, t, tol=1e-12):
        for time, state in zip(self.times, self.states):
            if abs(time - t) <= tol:
                return state
        raise KeyError(f"no state stored at t={t}")


def pure_state(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def _output_times(times):
    times = [float(t) for t in times]
    if not times:
        raise ValueError("need at least one output time")
    if times[0] < 0:
        raise ValueError("output times must be non-negative")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("output times must be strictly increasing")
    if times[0] != 0.0:
        times = [0.0] + times
    return times


def _pick_method(method, superdim):
    if method not in METHODS:
        raise ValueError(f"unknown integration method {method!r}, expected one of {METHODS}")
    if method == "auto":
        return "expm" if superdim <= settings.EXPM_MAX_SUPERDIM else "rk4"
    if method == "expm" and superdim > settings.EXPM_MAX_SUPERDIM:
        raise DimensionCapError(
            f"dense expm needs side {superdim} above EXPM_MAX_SUPERDIM={settings.EXPM_MAX_SUPERDIM}")
    return method


def _rk4(matrix, y, duration, step):
    '''Classical RK4 over [0, duration] with n = ceil(duration / step) equal substeps.'''
    if duration <= 0:
        return y
    n_steps = max(1, math.ceil(duration / step - 1e-9))
    h = duration / n_steps
    for _ in range(n_steps):
        k1 = matrix @ y
        k2 = matrix @ (y + 0.5 * h * k1)
        k3 = matrix @ (y + 0.5 * h * k2)
        k4 = matrix @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


class _Propagator:
    '''Steps a vector between output times with dense expm (cached per time step) or RK4.'''
    def __init__(self, matrix, method, step):
        self.matrix = matrix.tocsr() if sparse.issparse(matrix) else sparse.csr_matrix(matrix)
        self.method = method
        self.step = step
        self._cache = {}
        self._dense = None

    def advance(self, y, duration):
        if duration == 0:
            return y
        if self.method == "rk4":
            return _rk4(self.matrix, y, duration, self.step)
        key = round(duration, 15)
        if key not in self._cache:
            if self._dense is None:
                self._dense = self.matrix.toarray()
            self._cache[key] = expm(duration * self._dense)
        return self._cache[key] @ y


def _density_stats(rho, t, space, support_tol):
    herm = 0.5 * (rho + rho.conj().T)
    stats = {
        "t": t,
        "trace_err": float(abs(np.trace(rho) - 1.0)),
        "herm_err": hermiticity_error(rho),
        "min_eig": float(np.min(np.linalg.eigvalsh(herm))),
    }
    block = space.compress(herm) if space is not None else herm
    interior_eigs = np.linalg.eigvalsh(block)
    stats["support_rank"] = relative_rank(interior_eigs, support_tol)
    stats["min_interior_eig"] = float(np.min(interior_eigs))
    return stats


def evolve_density(superop, rho0, times, method="auto", step=None, support_tol=None):
    """
    Integrate d(rho)/dt = L_*(rho) and record rho at each output time.

    Args:
        superop (Superoperator): Schrodinger-picture generator.
        rho0 (array or DensityMatrix): initial state, Hermitian with unit trace.
        times (list): strictly increasing output times; 0 is prepended when missing.
        method (str): "auto", "expm" (dense, side D^2 <= EXPM_MAX_SUPERDIM) or "rk4".
        step (float): RK4 step, default settings.RK4_STEP.
        support_tol (float): relative eigenvalue threshold for the interior support rank.

    Returns:
        EvolutionResult with one stats dict per output time. The trace is never renormalized.
    """
    if isinstance(rho0, DensityMatrix):
        rho0 = rho0.rho
    rho0 = np.asarray(rho0, dtype=complex)
    DensityMatrix(rho0).check()
    if superop.picture != "schrodinger":
        raise ValueError("evolve_density needs the Schrodinger-picture generator")
    dim = rho0.shape[0]
    if superop.matrix.shape[0] != dim * dim:
        raise ValueError(f"state of dimension {dim} does not match superoperator of side {superop.matrix.shape[0]}")
    times = _output_times(times)
    method = _pick_method(method, dim * dim)
    step = settings.RK4_STEP if step is None else step
    support_tol = settings.SUPPORT_EIG_RELATIVE_TOL if support_tol is None else support_tol
    propagator = _Propagator(superop.matrix, method, step)
    logger.debug(f"evolve_density D={dim} method={method} outputs={len(times)}")

    y = vec(rho0)
    states, stats = [], []
    previous = 0.0
    for t in times:
        y = propagator.advance(y, t - previous)
        previous = t
        if not np.all(np.isfinite(y)):
            logger.error(f"non-finite state at t={t}")
            raise IntegrationError(f"integration produced non-finite values at t={t}")
        rho = unvec(y, dim).copy()
        entry = _density_stats(rho, t, superop.space, support_tol)
        if entry["trace_err"] > settings.TRACE_ABORT_TOL:
            logger.error(f"trace drift {entry['trace_err']:.3e} at t={t}")
            raise IntegrationError(
                f"trace error {entry['trace_err']:.3e} above {settings.TRACE_ABORT_TOL} at t={t}")
        if entry["min_eig"] < -1e-8:
            logger.warning(f"positivity drift at t={t}: min eigenvalue {entry['min_eig']:.3e}")
        states.append(DensityMatrix(rho=rho, t=t))
        stats.append(entry)
    return EvolutionResult(times=times, states=states, stats=stats, method=method)


def evolve_vector(ops, psi0, times, method="auto", step=None, slack=None):
    '''Approximate P_t psi0 = e^{tG} psi0 at each output time, checking that the norm never grows.'''
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ConstraintError("initial vector must be normalized")
    times = _output_times(times)
    dim = psi0.shape[0]
    method = _pick_method(method, dim * dim)
    slack = settings.CONTRACTION_SLACK if slack is None else slack
    propagator = _Propagator(ops.G, method, settings.RK4_STEP if step is None else step)

    y = psi0
    states, stats = [], []
    previous, last_norm = 0.0, 1.0
    for t in times:
        y = propagator.advance(y, t - previous)
        previous = t
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"integration produced non-finite values at t={t}")
        norm = float(np.linalg.norm(y))
        if norm > last_norm + slack:
            logger.error(f"norm grew from {last_norm:.12f} to {norm:.12f} at t={t}")
            raise IntegrationError(f"contraction violated at t={t}: norm {norm} after {last_norm}")
        last_norm = norm
        states.append(y.copy())
        stats.append({"t": t, "norm": norm})
    return EvolutionResult(times=times, states=states, stats=stats, method=method)


def number_semigroup_limit(space, v, zero_tol=0.0):
    '''Limit of e^{n0 t} e^{-tN} v as t grows: the component of v in its lowest nonvanishing grade n0.
    Grades count as vanishing only when their norm is at most zero_tol times |v|; the default is exact.'''
    v = np.asarray(v, dtype=complex)
    scale = np.linalg.norm(v)
    if scale == 0:
        raise EmptyInteriorError("the zero vector has no lowest grade")
    for k in range(space.n_max + 1):
        block = space.grade_slice(k)
        if np.linalg.norm(v[block]) > zero_tol * scale:
            limit = np.zeros_like(v)
            limit[block] = v[block]
            return limit
    raise EmptyInteriorError("no grade carries weight above the tolerance")


def write_timeseries_csv(result, path, space=None, observables=()):
    '''CSV with columns t, trace_err, min_eig, support_rank and one population <e_n|rho_t|e_n> per observable n.'''
    indices = []
    for n in observables:
        if space is None:
            raise ValueError("observables need the Fock space to locate e(n)")
        indices.append((tuple(int(x) for x in n), space.index_of[tuple(int(x) for x in n)]))
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["t", "trace_err", "min_eig", "support_rank"]
                        + ["pop_" + "_".join(str(x) for x in n) for n, _ in indices])
        for state, entry in zip(result.states, result.stats):
            row = [repr(entry["t"]), repr(entry["trace_err"]), repr(entry["min_eig"]), entry["support_rank"]]
            row += [repr(float(state.rho[i, i].real)) for _, i in indices]
            writer.writerow(row)
    logger.debug(f"wrote {len(result.states)} rows to {path}")
