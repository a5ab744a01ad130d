"""Transverse fiber eigenproblem on the strip cross-section.

The fiber operator at momentum k is -d^2/dx^2 + (b*x - k)^2 on (-L, L)
with Dirichlet ends. It is discretised by second-order central differences
on a uniform interior grid, which keeps the matrix symmetric tridiagonal:
eigenvalues are then located by bisection on the Sturm pivot count and
eigenvectors by inverse iteration. An optional Richardson step combines
the n and 2n grids under the h^2 error model and recovers two extra
orders for the eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConvergenceError, InvalidSpecError

DEFAULT_GRID_SIZE = 2048
DEFAULT_TOL = 1e-9

_MAX_INVERSE_SWEEPS = 12
_SIGN_FLOOR = 1e-13


@dataclass(frozen=True)
class FiberSpec:
    """Parameters of one fiber problem: field strength b >= 0, strip
    half-width L > 0, momentum k."""

    b: float
    L: float
    k: float = 0.0

    def __post_init__(self):
        if not (self.L > 0.0 and math.isfinite(self.L)):
            raise InvalidSpecError(f"L must be positive and finite, got {self.L}")
        if not (self.b >= 0.0 and math.isfinite(self.b)):
            raise InvalidSpecError(f"b must be nonnegative and finite, got {self.b}")
        if not math.isfinite(self.k):
            raise InvalidSpecError(f"k must be finite, got {self.k}")


@dataclass(frozen=True)
class GridFunction1D:
    """Sampled real function: strictly increasing nodes, one value each."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        if nodes.ndim != 1 or nodes.size < 3:
            raise InvalidSpecError("GridFunction1D needs at least 3 nodes")
        if values.shape != nodes.shape:
            raise InvalidSpecError("GridFunction1D nodes/values length mismatch")
        if not np.all(np.diff(nodes) > 0):
            raise InvalidSpecError("GridFunction1D nodes must be strictly increasing")

    def trapz(self) -> float:
        return float(np.trapezoid(self.values, self.nodes))

    def norm_sq(self) -> float:
        return float(np.trapezoid(self.values**2, self.nodes))


@dataclass(frozen=True)
class Eigenpair:
    """Band index j (1-based), eigenvalue, and the normalised, sign-fixed
    Dirichlet eigenfunction sampled on [-L, L]."""

    j: int
    energy: float
    psi: GridFunction1D


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal discretisation with its interior grid."""

    diag: np.ndarray
    off: np.ndarray
    nodes: np.ndarray = field(repr=False)
    step: float

    def count_below(self, shift: float) -> int:
        return int(_kernels.sturm_count(self.diag, self.off, shift))

    def norm_bound(self) -> float:
        return float(np.max(np.abs(self.diag)) + 2.0 * np.max(np.abs(self.off)))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out


def assemble_fiber(spec: FiberSpec, n: int) -> TridiagonalOperator:
    """Central-difference matrix of the fiber operator on n interior
    points, x_i = -L + i*h with h = 2L/(n+1); Dirichlet by truncation."""
    if n < 3:
        raise InvalidSpecError(f"interior grid size must be >= 3, got {n}")
    h = 2.0 * spec.L / (n + 1)
    x = -spec.L + h * np.arange(1, n + 1)
    diag = 2.0 / h**2 + (spec.b * x - spec.k) ** 2
    off = np.full(n - 1, -1.0 / h**2)
    return TridiagonalOperator(diag=diag, off=off, nodes=x, step=h)


def _bisect_eigenvalue(op: TridiagonalOperator, j: int, lo: float, hi: float,
                       tol: float) -> float:
    """j-th lowest eigenvalue (1-based) by Sturm-count bisection."""
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _kernels.sturm_count(op.diag, op.off, mid) >= j:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _inverse_iterate(op: TridiagonalOperator, sigma: float, tol: float,
                     previous: list[np.ndarray]) -> tuple[float, np.ndarray]:
    """Eigenvector by inverse iteration at the converged shift, polished
    by a Rayleigh quotient. Deterministic start vector."""
    n = op.diag.size
    rng = np.random.default_rng(1234)
    v = rng.standard_normal(n)
    scale = op.norm_bound()
    rho = sigma
    for _ in range(_MAX_INVERSE_SWEEPS):
        for p in previous:
            v -= (p @ v) * p
        v = _kernels.solve_shifted(op.diag, op.off, sigma, v)
        v /= np.linalg.norm(v)
        rho = float(v @ op.matvec(v))
        residual = np.linalg.norm(op.matvec(v) - rho * v)
        if residual <= tol * scale:
            return rho, v
    raise ConvergenceError(
        f"inverse iteration did not reach residual {tol:g}*||T|| at shift {sigma:g}"
    )


def _lowest_eigensystem(op: TridiagonalOperator, m: int, tol: float):
    lo = float(np.min(op.diag) - 2.0 * np.max(np.abs(op.off)))
    hi = float(np.max(op.diag) + 2.0 * np.max(np.abs(op.off)))
    energies = np.empty(m)
    vectors = []
    for j in range(1, m + 1):
        e_bis = _bisect_eigenvalue(op, j, lo, hi, tol)
        e_rq, v = _inverse_iterate(op, e_bis, tol, vectors)
        # keep the certified bisection value unless the Rayleigh polish
        # stays inside the bisection bracket's uncertainty
        if abs(e_rq - e_bis) <= 10.0 * tol * max(1.0, abs(e_bis)):
            energies[j - 1] = e_rq
        else:
            energies[j - 1] = e_bis
        vectors.append(v)
    return energies, vectors


def _to_eigenpair(spec: FiberSpec, j: int, energy: float, v: np.ndarray,
                  nodes: np.ndarray, h: float) -> Eigenpair:
    full_nodes = np.concatenate(([-spec.L], nodes, [spec.L]))
    full_vals = np.concatenate(([0.0], v, [0.0]))
    # trapezoid norm with zero endpoints reduces to h * sum(v^2)
    full_vals /= math.sqrt(h * float(v @ v))
    amax = np.max(np.abs(full_vals))
    sign_idx = np.argmax(np.abs(full_vals) > _SIGN_FLOOR * amax)
    if full_vals[sign_idx] < 0:
        full_vals = -full_vals
    return Eigenpair(j=j, energy=energy,
                     psi=GridFunction1D(nodes=full_nodes, values=full_vals))


def eigen_lowest(spec: FiberSpec, n: int = DEFAULT_GRID_SIZE, m: int = 1,
                 tol: float = DEFAULT_TOL, richardson: bool = True) -> list[Eigenpair]:
    """The m lowest eigenpairs of the fiber operator.

    With richardson=True the eigenvalues from the n and 2n interior grids
    are combined under the h^2 error model (the exact step ratio
    (2n+1)/(n+1) is used); eigenfunctions come from the finer grid.
    """
    if m < 1:
        raise InvalidSpecError(f"band count m must be >= 1, got {m}")
    if not (tol > 0.0):
        raise InvalidSpecError(f"tolerance must be positive, got {tol}")
    op = assemble_fiber(spec, n)
    energies, vectors = _lowest_eigensystem(op, m, tol)
    if richardson:
        op2 = assemble_fiber(spec, 2 * n)
        energies2, vectors2 = _lowest_eigensystem(op2, m, tol)
        r2 = ((2 * n + 1) / (n + 1)) ** 2
        energies = (r2 * energies2 - energies) / (r2 - 1.0)
        op, vectors = op2, vectors2
    pairs = [
        _to_eigenpair(spec, j + 1, float(energies[j]), vectors[j], op.nodes, op.step)
        for j in range(m)
    ]
    for a, b in zip(pairs, pairs[1:]):
        if not (a.energy < b.energy):
            raise ConvergenceError(
                f"eigenvalues out of order at j={a.j}: {a.energy} >= {b.energy}"
            )
    return pairs
