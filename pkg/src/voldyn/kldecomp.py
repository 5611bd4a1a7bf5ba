"""Karhunen-Loeve decomposition of centered return fields.

The sample covariance kernel k(x, y) of the field is estimated on the data
grid, the Fredholm eigenproblem of its integral operator is reduced with a
Galerkin projection onto (tensor) Legendre polynomials, and the resulting
generalized symmetric eigenproblem

    A d = lambda B d,    A_mn = integral k(x,y) phi_m(x) phi_n(y) dx dy,
                         B_mn = integral phi_m(x) phi_n(x) dx

is solved by Cholesky reduction plus cyclic Jacobi rotations.  Eigenfunctions
come back unit-normalized in L2 with a deterministic sign, eigenvalues sorted
descending; projections of the field on the modes are unit-variance and
mutually uncorrelated up to quadrature error.

All integrals use the composite trapezoid rule on the sample grid (tensor
product in 2-D), so results are deterministic functions of the data.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    AllZeroSpectrum,
    CholeskyFailure,
    GridMismatch,
    InputError,
    NoConvergence,
    NotCentered,
    NumericalError,
    OutOfDomain,
    SingularB,
    TooFewSamples,
    ZeroEigenvalue,
)
from .volgrid import ReturnField, _readonly

DEFAULT_BASIS_DEGREE = 8
_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100
_EIGENVALUE_CLIP = 1e-10
_SIGN_TOL = 1e-10


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Bounded interval or rectangle the field lives on."""

    bounds: tuple[tuple[float, float], ...]
    units: tuple[str, ...]

    def __post_init__(self):
        if not 1 <= len(self.bounds) <= 2 or len(self.units) != len(self.bounds):
            raise InputError("domain must be 1-D or 2-D with one unit per axis")
        for a, b in self.bounds:
            if not a < b:
                raise InputError(f"degenerate domain axis [{a}, {b}]")

    @property
    def ndim(self) -> int:
        return len(self.bounds)


@dataclass(frozen=True)
class BasisSpec:
    """Legendre basis sizes per axis; 2-D uses the tensor product."""

    degrees: tuple[int, ...]
    kind: str = "legendre"

    def __post_init__(self):
        if isinstance(self.degrees, int):
            object.__setattr__(self, "degrees", (self.degrees,))
        if self.kind != "legendre":
            raise InputError(f"unsupported basis kind {self.kind!r}")
        if any(n < 1 for n in self.degrees):
            raise InputError("basis needs at least one function per axis")

    @property
    def size(self) -> int:
        return int(np.prod(self.degrees))


@dataclass(frozen=True)
class EmpiricalKernel:
    """Sample covariance kernel evaluated at all grid point pairs.

    ``values[j, k]`` is k(x_j, x_k) over the row-major flattened grid; the
    matrix is symmetric bit-exactly by construction and positive
    semidefinite up to roundoff.
    """

    grid_axes: tuple[np.ndarray, ...]
    units: tuple[str, ...]
    values: np.ndarray
    sample_count: int

    def __post_init__(self):
        object.__setattr__(self, "grid_axes", tuple(_readonly(g) for g in self.grid_axes))
        object.__setattr__(self, "values", _readonly(self.values))
        npts = int(np.prod([len(g) for g in self.grid_axes]))
        if self.values.shape != (npts, npts):
            raise InputError("kernel matrix must be square over the flattened grid")
        if not np.array_equal(self.values, self.values.T):
            raise InputError("kernel matrix must be exactly symmetric")
        if np.any(np.diag(self.values) < 0):
            raise InputError("kernel diagonal (variances) must be non-negative")


@dataclass(frozen=True)
class EigenMode:
    """One eigenpair: variance carried plus basis coefficients of e_i."""

    eigenvalue: float
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _readonly(self.coeffs))


@dataclass(frozen=True)
class KLModel:
    """Result of a decomposition: modes sorted by decreasing eigenvalue.

    ``total_variance`` is the trace of the full Galerkin spectrum, so
    explained-variance shares stay meaningful when only the leading modes
    are retained.
    """

    domain: Domain
    basis: BasisSpec
    grid_axes: tuple[np.ndarray, ...]
    modes: tuple[EigenMode, ...]
    mean_function: np.ndarray
    total_variance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "grid_axes", tuple(_readonly(g) for g in self.grid_axes))
        object.__setattr__(self, "mean_function", _readonly(self.mean_function))

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.eigenvalue for m in self.modes])

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.grid_axes)

    def mode_values(self, i: int) -> np.ndarray:
        """Eigenfunction e_i sampled on the grid (shaped like the grid)."""
        phi = basis_matrix(self.grid_axes, self.domain, self.basis)
        return (phi @ self.modes[i].coeffs).reshape(self.grid_shape)

    def mode_matrix(self) -> np.ndarray:
        """All eigenfunctions on the flattened grid, one column per mode."""
        phi = basis_matrix(self.grid_axes, self.domain, self.basis)
        return phi @ np.column_stack([m.coeffs for m in self.modes])


@dataclass(frozen=True)
class ProjectionSeries:
    """Time series of per-mode projections xi_i(t), unit variance each."""

    dates: tuple[Date, ...]
    values: np.ndarray  # shape (n_dates, n_modes)

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.ndim != 2 or self.values.shape[0] != len(self.dates):
            raise InputError("projection values must be (n_dates, n_modes)")

    @property
    def n_modes(self) -> int:
        return self.values.shape[1]

    def mode(self, i: int) -> np.ndarray:
        return self.values[:, i]


# ---------------------------------------------------------------------------
# Quadrature and basis evaluation
# ---------------------------------------------------------------------------

def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Composite trapezoid weights for samples at ``points`` (sorted)."""
    x = np.asarray(points, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise InputError("need at least two quadrature points")
    w = np.empty_like(x)
    w[0] = (x[1] - x[0]) / 2.0
    w[-1] = (x[-1] - x[-2]) / 2.0
    if len(x) > 2:
        w[1:-1] = (x[2:] - x[:-2]) / 2.0
    return w


def grid_weights(grid_axes: tuple[np.ndarray, ...]) -> np.ndarray:
    """Flattened tensor-product trapezoid weights for a 1-D or 2-D grid."""
    w = trapezoid_weights(grid_axes[0])
    for axis in grid_axes[1:]:
        w = np.outer(w, trapezoid_weights(axis)).ravel()
    return w


def legendre_eval(n: int, z):
    """Legendre polynomial P_n at z in [-1, 1] via the three-term recurrence.

    (k+1) P_{k+1}(z) = (2k+1) z P_k(z) - k P_{k-1}(z)
    """
    if n < 0:
        raise InputError("degree must be non-negative")
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > 1.0 + 1e-12):
        raise OutOfDomain("Legendre argument outside [-1, 1]")
    z = np.clip(z, -1.0, 1.0)
    p_prev = np.ones_like(z)
    if n == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = z.copy()
    for k in range(1, n):
        p, p_prev = ((2 * k + 1) * z * p - k * p_prev) / (k + 1), p
    return p if p.ndim else float(p)


def _axis_basis(points: np.ndarray, bound: tuple[float, float], degree: int) -> np.ndarray:
    a, b = bound
    z = (2.0 * np.asarray(points, dtype=float) - (a + b)) / (b - a)
    return np.column_stack([legendre_eval(n, z) for n in range(degree)])


def basis_matrix(grid_axes, domain: Domain, basis: BasisSpec) -> np.ndarray:
    """Basis functions evaluated at the flattened grid, (n_points, n_basis).

    In 2-D the columns are tensor products phi_m(x1) phi_n(x2) with the first
    axis index varying slowest, matching row-major grid flattening.
    """
    if len(basis.degrees) != len(grid_axes):
        raise InputError("basis and grid dimensionality differ")
    mats = [_axis_basis(g, bd, n)
            for g, bd, n in zip(grid_axes, domain.bounds, basis.degrees)]
    phi = mats[0]
    for m in mats[1:]:
        phi = np.einsum("im,jn->ijmn", phi, m).reshape(phi.shape[0] * m.shape[0], -1)
    return phi


def domain_from_grid(grid_axes, units) -> Domain:
    return Domain(tuple((float(g[0]), float(g[-1])) for g in grid_axes), tuple(units))


# ---------------------------------------------------------------------------
# Pipeline stages
# ---------------------------------------------------------------------------

def estimate_kernel(rf: ReturnField) -> EmpiricalKernel:
    """Empirical covariance kernel k(x_j, x_k) = (1/T) sum_t u(t,x_j) u(t,x_k).

    Only one triangle is computed; the other is mirrored, so the result is
    symmetric bit-for-bit.
    """
    if not rf.centered:
        raise NotCentered("estimate_kernel requires a centered return field")
    u = rf.values.reshape(rf.values.shape[0], -1)
    t_count = u.shape[0]
    if t_count < 2:
        raise TooFewSamples("need at least 2 observations")
    full = u.T @ u / t_count
    lower = np.tril(full)
    k = lower + np.tril(lower, -1).T
    return EmpiricalKernel(rf.grid_axes, rf.field.units, k, t_count)


def assemble_galerkin(kernel: EmpiricalKernel, basis: BasisSpec):
    """Build the Galerkin matrices (A, B) with trapezoid quadrature.

    A_mn = sum_j sum_k w_j w_k k(x_j, x_k) phi_m(x_j) phi_n(x_k)
    B_mn = sum_j w_j phi_m(x_j) phi_n(x_j)
    """
    for n, g in zip(basis.degrees, kernel.grid_axes):
        if len(g) < 2:
            raise InputError("need at least 2 grid points per axis")
        if n > len(g):
            raise InputError("basis degree exceeds grid size")
    domain = domain_from_grid(kernel.grid_axes, kernel.units)
    phi = basis_matrix(kernel.grid_axes, domain, basis)
    w = grid_weights(kernel.grid_axes)
    g = phi * w[:, None]
    a = g.T @ kernel.values @ g
    b = phi.T @ g
    a = (a + a.T) / 2.0
    b = (b + b.T) / 2.0
    cond = np.linalg.cond(b)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularB(f"basis Gram matrix condition {cond:.3e} > 1e12; "
                        "reduce the basis degree for this grid")
    return a, b


def _jacobi_eigh(c: np.ndarray):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run in a fixed (p, q) order until the off-diagonal Frobenius norm
    falls below 1e-12 of the (rotation-invariant) full Frobenius norm.
    """
    a = c.copy()
    n = a.shape[0]
    v = np.eye(n)
    fnorm = np.linalg.norm(c)
    if n == 1 or fnorm == 0.0:
        return np.diag(a).copy(), v
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= _JACOBI_TOL * fnorm:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) if tau != 0 else 1.0
                t = t / (abs(tau) + np.sqrt(1.0 + tau * tau))
                cth = 1.0 / np.sqrt(1.0 + t * t)
                sth = t * cth
                app, aqq = a[p, p], a[q, q]
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = cth * col_p - sth * col_q
                a[:, q] = sth * col_p + cth * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = cth * row_p - sth * row_q
                a[q, :] = sth * row_p + cth * row_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                col_p, col_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = cth * col_p - sth * col_q
                v[:, q] = sth * col_p + cth * col_q
    raise NoConvergence(f"Jacobi sweep limit {_JACOBI_MAX_SWEEPS} exceeded")


def solve_gevp(a: np.ndarray, b: np.ndarray):
    """Solve A d = lambda B d for symmetric A (PSD) and B (PD).

    B is Cholesky-factored as L L^T, the problem is reduced to the standard
    symmetric form C = L^-1 A L^-T, C is diagonalized by cyclic Jacobi, and
    eigenvectors are back-transformed as d = L^-T v, which leaves them
    B-orthonormal.  Pairs are returned sorted by descending eigenvalue.
    """
    try:
        chol = np.linalg.cholesky(b)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(f"B is not positive definite: {exc}") from None
    tmp = solve_triangular(chol, a, lower=True)
    c = solve_triangular(chol, tmp.T, lower=True).T
    c = (c + c.T) / 2.0
    lam, v = _jacobi_eigh(c)
    d = solve_triangular(chol.T, v, lower=False)
    order = np.argsort(-lam, kind="stable")
    return [(float(lam[i]), d[:, i].copy()) for i in order]


def _fix_sign(values_flat: np.ndarray, weights: np.ndarray) -> float:
    """Deterministic orientation: positive integral, else positive at the
    first grid point where the eigenfunction is non-negligible."""
    integral = float(np.dot(weights, values_flat))
    if abs(integral) > _SIGN_TOL:
        return 1.0 if integral > 0 else -1.0
    nz = np.nonzero(np.abs(values_flat) > _SIGN_TOL)[0]
    if len(nz) == 0:
        return 1.0
    return 1.0 if values_flat[nz[0]] > 0 else -1.0


def decompose(rf: ReturnField, basis: BasisSpec | None = None,
              n_modes: int = 3) -> KLModel:
    """Full pipeline: kernel -> Galerkin -> eigenproblem -> oriented modes.

    ``basis`` defaults to min(8, grid size) Legendre functions per axis.
    Negative eigenvalues within roundoff of zero are clipped to 0.
    """
    if basis is None:
        basis = BasisSpec(tuple(min(DEFAULT_BASIS_DEGREE, len(g)) for g in rf.grid_axes))
    if n_modes > basis.size:
        raise InputError(f"n_modes={n_modes} exceeds basis size {basis.size}")
    kernel = estimate_kernel(rf)
    a, b = assemble_galerkin(kernel, basis)
    all_pairs = solve_gevp(a, b)
    total_variance = float(sum(max(lam, 0.0) for lam, _ in all_pairs))
    pairs = all_pairs[:n_modes]

    domain = domain_from_grid(rf.grid_axes, rf.field.units)
    phi = basis_matrix(rf.grid_axes, domain, basis)
    weights = grid_weights(rf.grid_axes)
    lam_max = max(pairs[0][0], 0.0)
    modes = []
    for lam, coeffs in pairs:
        if lam < 0:
            if lam < -_EIGENVALUE_CLIP * lam_max:
                raise NumericalError(f"eigenvalue {lam} too negative for a PSD kernel")
            lam = 0.0
        vals = phi @ coeffs
        norm = np.sqrt(np.dot(weights, vals * vals))
        if norm > 0:
            coeffs = coeffs / norm
            vals = vals / norm
        coeffs = coeffs * _fix_sign(vals, weights)
        modes.append(EigenMode(lam, coeffs))
    if rf.mean_function is None:
        raise NotCentered("decompose requires a centered return field")
    return KLModel(domain, basis, rf.grid_axes, tuple(modes), rf.mean_function,
                   total_variance)


def project(rf: ReturnField, model: KLModel) -> ProjectionSeries:
    """Unit-variance projections xi_i(t) = <u(t,.), e_i> / sqrt(lambda_i)."""
    if not rf.centered:
        raise NotCentered("project requires a centered return field")
    if len(rf.grid_axes) != len(model.grid_axes) or any(
            not np.array_equal(g, h) for g, h in zip(rf.grid_axes, model.grid_axes)):
        raise GridMismatch("return field grid differs from the model grid")
    for i, mode in enumerate(model.modes):
        if mode.eigenvalue <= 0:
            raise ZeroEigenvalue(f"mode {i + 1} has zero eigenvalue; cannot project")
    weights = grid_weights(rf.grid_axes)
    u = rf.values.reshape(rf.values.shape[0], -1)
    e = model.mode_matrix()
    raw = u @ (e * weights[:, None])
    xi = raw / np.sqrt(model.eigenvalues)
    return ProjectionSeries(rf.dates, xi)


def reconstruct(model: KLModel, xi, n_modes: int | None = None) -> np.ndarray:
    """Truncated expansion sum_i sqrt(lambda_i) xi_i e_i(x) on the grid.

    ``xi`` is one scenario vector (n_modes,) or a stack (T, n_modes); the
    stored mean function is NOT added back here.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if n_modes is None:
        n_modes = xi.shape[1]
    if n_modes > model.n_modes:
        raise InputError(f"requested {n_modes} modes, model has {model.n_modes}")
    e = model.mode_matrix()[:, :n_modes]
    scale = np.sqrt(model.eigenvalues[:n_modes])
    fields = (xi[:, :n_modes] * scale) @ e.T
    fields = fields.reshape((-1,) + model.grid_shape)
    return fields[0] if fields.shape[0] == 1 else fields


def explained_variance(model: KLModel) -> np.ndarray:
    """Share of total variance per mode, lambda_i / sum_j lambda_j.

    The denominator is the full spectrum trace, so the shares of a truncated
    model sum to at most 1.
    """
    lam = model.eigenvalues
    total = model.total_variance if model.total_variance > 0 else lam.sum()
    if total <= 0:
        raise AllZeroSpectrum("all eigenvalues are zero")
    return lam / total
