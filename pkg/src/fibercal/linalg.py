"""Dense real-matrix kernel of the calibration.

Every calibration equation reduces to one of two least-squares patterns: fitting a
gain matrix ``G`` from observations ``X ≈ G·B`` (:func:`lstsq_fit`) and inverting a
fitted gain for one observation ``x ≈ G·b`` (:func:`lstsq_solve`). Both go through an
SVD-based Moore-Penrose pseudoinverse with a relative singular value cutoff.

Matrices are plain 2-D ``float64`` :class:`numpy.ndarray` objects. The functions of
this module never modify their inputs and return read-only arrays.

"""

from typing import Sequence, TypeAlias

import numpy as np
import numpy.typing as npt

from fibercal.constants import PSEUDOINVERSE_RCOND
from fibercal.errors import ConfigurationError, IdentifiabilityError, ShapeError

#: 2-D ``float64`` array.
Matrix: TypeAlias = npt.NDArray[np.float64]


def as_matrix(data: npt.ArrayLike) -> Matrix:
    """Convert ``data`` into a read-only 2-D ``float64`` matrix.

    :raises: :exc:`~fibercal.errors.ShapeError` if ``data`` isn't a non-empty 2-D
        array of finite real numbers

    """
    try:
        matrix = np.array(data, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ShapeError("Matrix entries must be real numbers") from e

    if matrix.ndim != 2:
        raise ShapeError(f"Expected a 2-D matrix, got {matrix.ndim} dimension(s)")
    if matrix.size == 0:
        raise ShapeError(f"Matrix must not be empty, got shape {matrix.shape}")
    if not np.isfinite(matrix).all():
        raise ShapeError("Matrix entries must be finite")

    matrix.setflags(write=False)
    return matrix


def column(values: Sequence[float] | npt.NDArray[np.float64]) -> Matrix:
    """Stack ``values`` into a column vector."""
    return as_matrix(np.asarray(values, dtype=np.float64).reshape(-1, 1))


def matmul(a: npt.ArrayLike, b: npt.ArrayLike) -> Matrix:
    """Matrix product ``a·b``.

    :raises: :exc:`~fibercal.errors.ShapeError` on dimension mismatch

    """
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"Cannot multiply {a.shape} by {b.shape}")
    return as_matrix(a @ b)


def _singular_values(a: Matrix) -> npt.NDArray[np.float64]:
    return np.linalg.svd(a, compute_uv=False)


def _validate_rcond(rcond: float) -> None:
    if not 0.0 < rcond < 1.0:
        raise ConfigurationError(f"rcond must be in (0, 1), {rcond=} provided")


def matrix_rank(a: npt.ArrayLike, rcond: float = PSEUDOINVERSE_RCOND) -> int:
    """Number of singular values of ``a`` above ``rcond`` times the largest one."""
    _validate_rcond(rcond)
    s = _singular_values(as_matrix(a))
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rcond * s[0]))


def pseudoinverse(a: npt.ArrayLike, rcond: float = PSEUDOINVERSE_RCOND) -> Matrix:
    """Moore-Penrose pseudoinverse of ``a``.

    Singular values at or below ``rcond`` times the largest singular value are treated
    as zero, which yields the minimum-norm solution on the rank-deficient subspace.
    Rank deficiency is therefore not an error here.

    :param a: Matrix of shape ``(m, n)``
    :param rcond: Relative singular value cutoff in ``(0, 1)``

    :raises: |shape-error|

    :raises: :exc:`~fibercal.errors.ConfigurationError` on ``rcond`` outside
        ``(0, 1)``

    :returns: Pseudoinverse of shape ``(n, m)``

    """
    _validate_rcond(rcond)
    a = as_matrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)

    if s[0] == 0.0:
        return as_matrix(np.zeros((a.shape[1], a.shape[0])))

    keep = s > rcond * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return as_matrix((vt.T * s_inv) @ u.T)


def _unexcited_factors(
    a: Matrix, factor_names: Sequence[str] | None, rcond: float
) -> tuple[str, ...]:
    """Name the factors loading the null space of the rows of ``a``."""
    if factor_names is None:
        return ()

    u, s, _ = np.linalg.svd(a, full_matrices=True)
    padded = np.zeros(u.shape[1])
    padded[: s.size] = s
    null_directions = u[:, padded <= rcond * max(s[0], 0.0)]

    names = {
        factor_names[int(np.argmax(np.abs(direction)))]
        for direction in null_directions.T
    }
    return tuple(name for name in factor_names if name in names)


def require_full_rank(
    a: Matrix,
    *,
    what: str,
    factor_names: Sequence[str] | None,
    rcond: float,
) -> None:
    """Raise unless the ``m`` rows (``a`` is ``m×n``) are linearly independent."""
    expected = a.shape[0]
    rank = matrix_rank(a, rcond)
    if rank < expected:
        factors = _unexcited_factors(a, factor_names, rcond)
        named = f", unexcited: {', '.join(factors)}" if factors else ""
        raise IdentifiabilityError(
            f"{what} has rank {rank} < {expected}{named}",
            rank=rank,
            expected_rank=expected,
            factors=factors,
        )


def lstsq_fit(
    observations: npt.ArrayLike,
    regressors: npt.ArrayLike,
    *,
    factor_names: Sequence[str] | None = None,
    rcond: float = PSEUDOINVERSE_RCOND,
) -> Matrix:
    """Fit the gain ``G`` minimizing ``‖X − G·B‖_F``.

    :param observations: ``X`` of shape ``(k, n)``, one sample per column
    :param regressors: ``B`` of shape ``(m, n)``, one sample per column
    :param factor_names: Names of the ``m`` regressor rows, used in error messages
    :param rcond: Relative singular value cutoff

    :raises: :exc:`~fibercal.errors.ShapeError` if the sample counts differ

    :raises: :exc:`~fibercal.errors.IdentifiabilityError` if ``B`` has rank below
        ``m``

    :returns: ``X·B⁺`` of shape ``(k, m)``

    """
    x, b = as_matrix(observations), as_matrix(regressors)
    if x.shape[1] != b.shape[1]:
        raise ShapeError(
            f"Observations have {x.shape[1]} samples but regressors {b.shape[1]}"
        )
    require_full_rank(
        b, what="Regressor matrix", factor_names=factor_names, rcond=rcond
    )
    return matmul(x, pseudoinverse(b, rcond))


def lstsq_solve(
    gain: npt.ArrayLike,
    observation: npt.ArrayLike,
    *,
    factor_names: Sequence[str] | None = None,
    rcond: float = PSEUDOINVERSE_RCOND,
) -> Matrix:
    """Solve ``x ≈ G·b`` for ``b`` in the least-squares sense.

    :param gain: ``G`` of shape ``(k, m)``
    :param observation: ``x`` of shape ``(k, 1)``
    :param factor_names: Names of the ``m`` unknowns, used in error messages
    :param rcond: Relative singular value cutoff

    :raises: :exc:`~fibercal.errors.ShapeError` if the shapes don't agree

    :raises: :exc:`~fibercal.errors.IdentifiabilityError` if ``G`` has rank below
        ``m``

    :returns: ``G⁺·x`` of shape ``(m, 1)``

    """
    g, x = as_matrix(gain), as_matrix(observation)
    if x.shape != (g.shape[0], 1):
        raise ShapeError(
            f"Expected observation of shape {(g.shape[0], 1)}, got {x.shape}"
        )
    require_full_rank(g.T, what="Gain matrix", factor_names=factor_names, rcond=rcond)
    return matmul(pseudoinverse(g, rcond), x)


def residual_norm(
    observations: npt.ArrayLike, gain: npt.ArrayLike, regressors: npt.ArrayLike
) -> float:
    """Frobenius norm of ``X − G·B``."""
    residual = as_matrix(observations) - matmul(gain, regressors)
    return float(np.linalg.norm(residual))
