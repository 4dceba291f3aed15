"""Polynomial fit of the midpoint sequence.

Lateral midpoint position is modelled as a polynomial in the normalized
forward parameter ``p = rows_above_bottom / image_height`` (so ``p`` lies in
[0, 1)). The fit is ordinary least squares over all accepted midpoints,
solved by QR; with exactly ``degree + 1`` midpoints it reduces to solving the
square Vandermonde system, i.e. exact interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from trailnav.errors import DuplicateParams, InvalidMidline, NumericalFailure, Underdetermined
from trailnav.midline import MidlineEstimate

DEFAULT_DEGREE = 3
_RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PolyCoeffs:
    """Coefficients ordered from the constant term upward."""

    beta: np.ndarray

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float, copy=True).reshape(-1)
        if beta.size == 0:
            raise ValueError("need at least one coefficient")
        if not np.all(np.isfinite(beta)):
            raise ValueError(f"non-finite coefficients: {beta}")
        beta.flags.writeable = False
        object.__setattr__(self, "beta", beta)

    @property
    def degree(self) -> int:
        return self.beta.size - 1

    def __eq__(self, other):
        if not isinstance(other, PolyCoeffs):
            return NotImplemented
        return np.array_equal(self.beta, other.beta)

    def __hash__(self):
        return hash(self.beta.tobytes())

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(max(length, self.beta.size))
        out[: self.beta.size] = self.beta
        return out

    def __call__(self, p):
        return eval_poly(self, p)


def build_design(params, degree: int) -> np.ndarray:
    """Vandermonde matrix with columns p**0 .. p**degree."""
    params = np.asarray(params, dtype=float).reshape(-1)
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if params.size < degree + 1:
        raise Underdetermined(f"{params.size} parameters cannot determine a degree-{degree} polynomial")
    if np.unique(params).size < degree + 1:
        raise DuplicateParams(f"fewer than {degree + 1} distinct parameters")
    return np.vander(params, degree + 1, increasing=True)


def forward_params(midline: MidlineEstimate) -> np.ndarray:
    return np.array([r.row_index for r in midline.rows], dtype=float) / midline.height


def lstsq_qr(design: np.ndarray, y: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(design, mode="reduced")
    diag = np.abs(np.diag(r))
    if diag.min() <= _RANK_TOL * max(diag.max(), 1.0):
        raise NumericalFailure("design matrix is rank deficient")
    return solve_triangular(r, q.T @ y, lower=False)


def fit_points(params, values, degree: int = DEFAULT_DEGREE) -> PolyCoeffs:
    design = build_design(params, degree)
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size != design.shape[0]:
        raise ValueError("params and values differ in length")
    return PolyCoeffs(lstsq_qr(design, values))


def fit_poly(midline: MidlineEstimate, degree: int = DEFAULT_DEGREE) -> PolyCoeffs:
    if not midline.valid:
        raise InvalidMidline("cannot fit an invalid midline")
    values = [r.mid_x for r in midline.rows]
    return fit_points(forward_params(midline), values, degree)


def eval_poly(coeffs, p):
    """Horner evaluation; ``p`` may be a scalar or an array."""
    beta = coeffs.beta if isinstance(coeffs, PolyCoeffs) else np.asarray(coeffs, dtype=float)
    p = np.asarray(p, dtype=float)
    acc = np.zeros_like(p)
    for b in beta[::-1]:
        acc = acc * p + b
    return float(acc) if acc.ndim == 0 else acc
