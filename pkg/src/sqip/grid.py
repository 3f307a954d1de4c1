"""Cell-centered finite-volume grids with zero-flux boundaries.

The spatial operator is the standard second-order Laplacian stencil with
mirror ghost cells, so the matrix has exactly zero row and column sums.
That makes discrete integration of any Laplacian image vanish identically,
which is the backbone of every mass-control check in this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import ConfigError, DomainError, NumericsError

MIN_CELLS = 4

# Shifted inverse iteration defaults for the Neumann eigenvalue solver.
EIG_TOL = 1e-10
EIG_MAX_ITER = 400


@dataclass(frozen=True)
class Domain1D:
    """Interval [0, L] split into n equal cells, unknowns at cell centers."""

    length: float
    n: int

    def __post_init__(self):
        if self.length <= 0:
            raise ConfigError(f"domain length must be positive, got {self.length}")
        if self.n < MIN_CELLS:
            raise ConfigError(f"need at least {MIN_CELLS} cells, got {self.n}")

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def measure(self) -> float:
        return self.length

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,)

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h

    def x_coordinate(self) -> np.ndarray:
        """Coordinate array used by coefficient evaluators (1D: the centers)."""
        return self.cell_centers()


@dataclass(frozen=True)
class Domain2D:
    """Rectangle [0, Lx] x [0, Ly] on a tensor-product cell-centered grid."""

    length_x: float
    length_y: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.length_x <= 0 or self.length_y <= 0:
            raise ConfigError("domain lengths must be positive")
        if self.nx < MIN_CELLS or self.ny < MIN_CELLS:
            raise ConfigError(f"need at least {MIN_CELLS} cells per direction")

    @property
    def hx(self) -> float:
        return self.length_x / self.nx

    @property
    def hy(self) -> float:
        return self.length_y / self.ny

    @property
    def measure(self) -> float:
        return self.length_x * self.length_y

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nx, self.ny)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return x, y

    def x_coordinate(self) -> np.ndarray:
        """x-coordinate broadcast over the (nx, ny) field layout."""
        x, _ = self.cell_centers()
        return x[:, None]


Domain = Domain1D | Domain2D


def _axis_laplacian(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second difference along one axis with mirrored end cells."""
    f = np.moveaxis(values, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = f[:-2] - 2.0 * f[1:-1] + f[2:]
    out[0] = f[1] - f[0]
    out[-1] = f[-2] - f[-1]
    out /= h * h
    return np.moveaxis(out, 0, axis)


class DiscreteLaplacian:
    """Zero-flux Laplacian on a 1D or tensor-product 2D grid.

    Symmetric negative semidefinite; constants are in the kernel exactly.
    """

    def __init__(self, domain: Domain):
        self.domain = domain

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != self.domain.shape:
            raise DomainError(
                f"field shape {values.shape} does not match grid {self.domain.shape}"
            )
        if isinstance(self.domain, Domain1D):
            return _axis_laplacian(values, self.domain.h, axis=0)
        out = _axis_laplacian(values, self.domain.hx, axis=0)
        out += _axis_laplacian(values, self.domain.hy, axis=1)
        return out

    def __call__(self, values: np.ndarray) -> np.ndarray:
        return self.apply(values)

    def dense(self) -> np.ndarray:
        """Dense matrix form, intended for small-grid tests only."""
        size = int(np.prod(self.domain.shape))
        cols = []
        for j in range(size):
            e = np.zeros(size)
            e[j] = 1.0
            cols.append(self.apply(e.reshape(self.domain.shape)).ravel())
        return np.array(cols).T


def build_laplacian(domain: Domain) -> DiscreteLaplacian:
    """Construct the zero-flux Laplacian for a validated domain."""
    return DiscreteLaplacian(domain)


def integrate(domain: Domain, values: np.ndarray) -> float:
    """Midpoint-rule quadrature; exact for fields linear in each coordinate."""
    values = np.asarray(values, dtype=float)
    if values.shape != domain.shape:
        raise DomainError(
            f"field shape {values.shape} does not match grid {domain.shape}"
        )
    if isinstance(domain, Domain1D):
        return float(values.sum() * domain.h)
    return float(values.sum() * domain.hx * domain.hy)


def _stiffness_banded(n: int, h: float) -> np.ndarray:
    """Upper banded form of A = -Laplacian for one axis (SPD up to kernel)."""
    inv_h2 = 1.0 / (h * h)
    ab = np.zeros((2, n))
    ab[0, 1:] = -inv_h2
    ab[1, :] = 2.0 * inv_h2
    ab[1, 0] = inv_h2
    ab[1, -1] = inv_h2
    return ab


class AxisSolver:
    """Cached Cholesky solve of (I + c*A) along one axis, A = -Laplacian."""

    def __init__(self, n: int, h: float):
        self.n = n
        self.h = h
        self._ab = _stiffness_banded(n, h)
        self._factors: dict[float, np.ndarray] = {}

    def _factor(self, c: float) -> np.ndarray:
        factor = self._factors.get(c)
        if factor is None:
            ab = c * self._ab
            ab[1, :] += 1.0
            factor = cholesky_banded(ab)
            self._factors[c] = factor
        return factor

    def solve(self, c: float, rhs: np.ndarray, axis: int = 0) -> np.ndarray:
        """Solve (I + c*A) x = rhs along the given axis of rhs."""
        if c == 0.0:
            return rhs.copy()
        factor = self._factor(c)
        moved = np.moveaxis(rhs, axis, 0)
        flat = moved.reshape(self.n, -1)
        out = cho_solve_banded((factor, False), flat)
        return np.moveaxis(out.reshape(moved.shape), 0, axis)


class DiffusionSolver:
    """Backward-Euler diffusion solve on a grid.

    1D solves are exact banded Cholesky solves. 2D uses the factored
    alternating-direction form (I + c*Ax)(I + c*Ay), which is first-order
    consistent with the unsplit step and conserves the discrete integral
    exactly, factor by factor.
    """

    def __init__(self, domain: Domain):
        self.domain = domain
        if isinstance(domain, Domain1D):
            self._axes = [AxisSolver(domain.n, domain.h)]
        else:
            self._axes = [AxisSolver(domain.nx, domain.hx),
                          AxisSolver(domain.ny, domain.hy)]

    def solve(self, c: float, rhs: np.ndarray) -> np.ndarray:
        out = rhs
        for axis, solver in enumerate(self._axes):
            out = solver.solve(c, out, axis=axis)
        return out


def _smallest_positive_axis_eigenvalue(n: int, h: float, length: float,
                                       tol: float, max_iter: int) -> float:
    """Shifted inverse iteration for the smallest nonzero eigenvalue of A.

    The constant kernel vector is deflated by explicit orthogonalization
    every iteration. The shift sits below the continuum value (pi/L)^2, so
    the iteration contracts onto the first nonconstant mode.
    """
    solver = AxisSolver(n, h)
    apply_a = lambda v: -_axis_laplacian(v, h, axis=0)
    shift = 0.5 * (np.pi / length) ** 2

    x = (np.arange(n) + 0.5) * h
    v = x - x.mean()
    v /= np.linalg.norm(v)

    lam = 0.0
    for _ in range(max_iter):
        # (A + shift*I)^{-1} amplifies the low end of the deflated spectrum.
        w = solver.solve(1.0 / shift, v, axis=0) / shift
        w -= w.mean()
        w /= np.linalg.norm(w)
        av = apply_a(w)
        lam = float(w @ av)
        residual = float(np.linalg.norm(av - lam * w))
        v = w
        if residual <= tol * max(lam, 1e-300):
            return lam
    raise NumericsError(
        "Neumann eigenvalue iteration did not converge",
        residual=residual, last_value=lam,
    )


def poincare_constant(domain: Domain, n: int | None = None,
                      tol: float = EIG_TOL, max_iter: int = EIG_MAX_ITER) -> float:
    """Smallest positive eigenvalue of -Laplacian with zero-flux boundaries.

    This is the constant in the mean-zero Poincare inequality on the grid.
    On a rectangle the spectrum is the sum of the per-axis spectra, so the
    smallest positive value is the minimum of the two axis values.

    Args:
        domain: Grid description; ``n`` optionally overrides its resolution.
        n: Replacement cell count (applied per axis in 2D).
        tol: Relative residual target of the inverse iteration.
        max_iter: Iteration bound before a numeric error is raised.
    """
    if isinstance(domain, Domain1D):
        cells = domain.n if n is None else int(n)
        if cells < 8:
            raise ConfigError("eigenvalue solve needs at least 8 cells")
        return _smallest_positive_axis_eigenvalue(
            cells, domain.length / cells, domain.length, tol, max_iter)
    nx = domain.nx if n is None else int(n)
    ny = domain.ny if n is None else int(n)
    if nx < 8 or ny < 8:
        raise ConfigError("eigenvalue solve needs at least 8 cells per axis")
    lam_x = _smallest_positive_axis_eigenvalue(
        nx, domain.length_x / nx, domain.length_x, tol, max_iter)
    lam_y = _smallest_positive_axis_eigenvalue(
        ny, domain.length_y / ny, domain.length_y, tol, max_iter)
    return min(lam_x, lam_y)
