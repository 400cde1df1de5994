import logging

import numpy as np

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

try:
    import qmssettings_local as settings
except ImportError:
    logger.debug("local config not found, using default")
    import qmssettings as settings

if settings.DEBUG:
    logger.setLevel(logging.DEBUG)


class QMSError(Exception):
    """Base class for every error raised by the toolkit."""


class DimensionCapError(QMSError):
    """A truncation or superoperator is larger than the configured resource guard."""


class EmptyInteriorError(QMSError, ValueError):
    pass


class BoundaryContaminationError(QMSError, ValueError):
    """A vector that must live in the interior subspace has weight near the cutoff."""


class ConstraintError(QMSError, ValueError):
    pass


class IntegrationError(QMSError):
    pass


class ConfigError(QMSError, ValueError):
    """Scenario validation failure, carrying (json_pointer, message) pairs."""
    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{pointer or '/'}: {message}" for pointer, message in self.problems]
        super().__init__("invalid scenario:\n  " + "\n  ".join(lines))


def as_complex_array(value, ndim, name="value"):
    '''Read nested lists with ndim levels into a complex ndarray.
    Leaves are plain numbers or [re, im] pairs.'''
    def convert(item, depth):
        if depth == ndim:
            if isinstance(item, bool):
                raise ConstraintError(f"{name}: cannot read {item!r} as a complex entry")
            if isinstance(item, (int, float, complex)):
                return complex(item)
            if isinstance(item, (list, tuple)) and len(item) == 2 \
                    and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in item):
                return complex(item[0], item[1])
            raise ConstraintError(f"{name}: cannot read {item!r} as a complex entry")
        if not isinstance(item, (list, tuple)):
            raise ConstraintError(f"{name}: expected a list at depth {depth}, got {item!r}")
        return [convert(x, depth + 1) for x in item]

    if isinstance(value, np.ndarray):
        if value.ndim != ndim:
            raise ConstraintError(f"{name}: expected {ndim} dimensions, got {value.ndim}")
        return value.astype(complex)
    array = np.array(convert(value, 0), dtype=complex)
    if array.ndim != ndim:
        raise ConstraintError(f"{name}: ragged or malformed array")
    return array


def to_jsonable(value):
    '''Convert numpy values (and nested containers of them) into plain JSON data.
    Complex numbers become [re, im] pairs.'''
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return to_jsonable(value.tolist())
        return value.tolist()
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def sample_count(n_samples):
    '''n_samples, or settings.DEFAULT_SAMPLES when it is None; at least one sample is required.'''
    if n_samples is None:
        return settings.DEFAULT_SAMPLES
    if n_samples < 1:
        raise ValueError(f"need at least one sample, got {n_samples}")
    return int(n_samples)


def hermiticity_error(matrix):
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def relative_rank(eigenvalues, rel_tol):
    """Count eigenvalues above rel_tol times the largest one (in absolute value)."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if eigenvalues.size == 0:
        return 0
    scale = np.max(np.abs(eigenvalues))
    if scale == 0:
        return 0
    return int(np.sum(eigenvalues > rel_tol * scale))


def random_unit_vectors(rng, count, dim):
    '''Complex Gaussian vectors normalized to one, shape (count, dim).'''
    vectors = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def orthonormal_extend(basis, candidates, drop_tol=None, reference=None):
    """
    Extend an orthonormal basis with candidate vectors (modified Gram-Schmidt, two passes).

    Args:
        basis (list): orthonormal vectors already retained (extended in place).
        candidates (iterable): vectors to try, in order.
        drop_tol (float): relative drop tolerance, default settings.GRAM_SCHMIDT_DROP_TOL.
        reference (float): largest retained norm so far, used to scale the tolerance.

    Returns:
        tuple: (list of new orthonormal vectors, updated reference norm)
    """
    if drop_tol is None:
        drop_tol = settings.GRAM_SCHMIDT_DROP_TOL
    reference = reference or 0.0
    added = []
    for candidate in candidates:
        w = np.array(candidate, dtype=complex)
        norm0 = np.linalg.norm(w)
        if norm0 == 0:
            continue
        reference = max(reference, norm0)
        for _ in range(2):
            for q in basis:
                w = w - q * np.vdot(q, w)
        residual = np.linalg.norm(w)
        if residual <= drop_tol * reference:
            continue
        w = w / residual
        basis.append(w)
        added.append(w)
    return added, reference


def random_unitary(rng, size):
    '''Haar-distributed unitary from the QR decomposition of a complex Gaussian matrix.'''
    z = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases[np.newaxis, :]
