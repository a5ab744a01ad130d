"""Band functions of the strip operator and the objects derived from them:
thresholds, Feynman-Hellmann derivatives, curvatures, inverse bands,
separation radii, and fiber Mourre constants.

Bands are even in k and strictly increasing on each half-line, so all
interpolation is done in the variable t = k^2, where E_j is a smooth
monotone function; inverses and window preimages come from local quadratic
interpolation in t plus bisection.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, FitError, InvalidSpecError
from .fiber import DEFAULT_GRID_SIZE, DEFAULT_TOL, Eigenpair, FiberSpec, eigen_lowest

DEFAULT_NK = 241
DEFAULT_CURVATURE_WINDOW = 0.2
_MAX_HALVINGS = 40


@dataclass(frozen=True)
class Band:
    """One sampled band: E_j on a symmetric k grid containing 0, its
    derivative samples, the threshold E_j(0), and the curvature
    coefficient mu of the small-k expansion."""

    j: int
    k_samples: np.ndarray
    E_samples: np.ndarray
    dE_samples: np.ndarray
    threshold: float
    mu: float

    def rise(self) -> float:
        """Sampled band rise above threshold, E_j(k_max) - E_j(0)."""
        return float(self.E_samples[-1] - self.threshold)


@dataclass(frozen=True)
class MourreReport:
    """Positive-commutator constant of one spectral window: the per-band
    minima of k*E_r'(k) over the window preimages, their overall minimum,
    and the interval-arithmetic disjointness certificate."""

    window: tuple[float, float]
    n: int
    per_band_constants: tuple[float, ...]
    mourre_constant: float
    preimages: tuple[tuple[float, float], ...]
    preimages_disjoint: bool


def feynman_hellmann_derivative(spec: FiberSpec, j: int,
                                n: int = DEFAULT_GRID_SIZE,
                                tol: float = DEFAULT_TOL,
                                richardson: bool = True) -> float:
    """E_j'(k) = 2 * integral of (k - b x) psi_j(x;k)^2 over the strip.

    Quadrature error follows the same h^2 model as the eigenvalues, so the
    same two-grid combination is applied.
    """
    pairs = eigen_lowest(spec, n=n, m=j, tol=tol, richardson=False)
    d1 = _fh_integral(spec, pairs[j - 1])
    if not richardson:
        return d1
    pairs2 = eigen_lowest(spec, n=2 * n, m=j, tol=tol, richardson=False)
    d2 = _fh_integral(spec, pairs2[j - 1])
    r2 = ((2 * n + 1) / (n + 1)) ** 2
    return (r2 * d2 - d1) / (r2 - 1.0)


def _fh_integral(spec: FiberSpec, pair: Eigenpair) -> float:
    x = pair.psi.nodes
    return 2.0 * float(np.trapezoid((spec.k - spec.b * x) * pair.psi.values**2, x))


def band_derivative(spec_without_k: FiberSpec, j: int, k: float,
                    n: int = DEFAULT_GRID_SIZE, tol: float = DEFAULT_TOL) -> float:
    """Feynman-Hellmann derivative at a single momentum."""
    spec = FiberSpec(b=spec_without_k.b, L=spec_without_k.L, k=k)
    return feynman_hellmann_derivative(spec, j, n=n, tol=tol)


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("MAGSTRIP_THREADS", "1")))
    except ValueError:
        return 1


def sample_bands(b: float, L: float, js: list[int], k_max: float | None = None,
                 n_k: int = DEFAULT_NK, n_grid: int = DEFAULT_GRID_SIZE,
                 tol: float = DEFAULT_TOL,
                 curvature_window: float = DEFAULT_CURVATURE_WINDOW) -> list[Band]:
    """Sample several bands in one sweep over the k grid.

    k_max defaults to 3*sqrt(threshold_max + 5b), wide enough for the
    window preimages used by the Mourre and asymptotics checks.
    """
    if not js or any(j < 1 for j in js):
        raise InvalidSpecError(f"band indices must be >= 1, got {js}")
    if n_k < 5 or n_k % 2 == 0:
        raise InvalidSpecError(f"n_k must be odd and >= 5 so that k=0 is a node, got {n_k}")
    m = max(js)
    if k_max is None:
        top = eigen_lowest(FiberSpec(b=b, L=L, k=0.0), n=n_grid, m=m, tol=tol)[m - 1]
        k_max = 3.0 * math.sqrt(top.energy + 5.0 * b)
    if not (k_max > 0):
        raise InvalidSpecError(f"k_max must be positive, got {k_max}")
    ks = np.linspace(-k_max, k_max, n_k)
    ks[n_k // 2] = 0.0

    def solve_one(k: float):
        spec = FiberSpec(b=b, L=L, k=float(k))
        pairs_c = eigen_lowest(spec, n=n_grid, m=m, tol=tol, richardson=False)
        pairs_f = eigen_lowest(spec, n=2 * n_grid, m=m, tol=tol, richardson=False)
        r2 = ((2 * n_grid + 1) / (n_grid + 1)) ** 2
        energies = [(r2 * f.energy - c.energy) / (r2 - 1.0) for c, f in zip(pairs_c, pairs_f)]
        derivs = []
        for c, f in zip(pairs_c, pairs_f):
            d1 = _fh_integral(spec, c)
            d2 = _fh_integral(spec, f)
            derivs.append((r2 * d2 - d1) / (r2 - 1.0))
        return energies, derivs

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve_one, ks))
    else:
        results = [solve_one(k) for k in ks]

    E = np.array([r[0] for r in results])  # (n_k, m)
    dE = np.array([r[1] for r in results])
    i0 = n_k // 2

    # dedicated near-zero nodes for the curvature fit: the sweep grid can
    # be coarser than the fit window when k_max is large
    kc = np.linspace(-curvature_window, curvature_window, 9)
    Ec = np.array([solve_one(k)[0] for k in kc])

    bands = []
    for j in js:
        col = j - 1
        threshold = float(E[i0, col])
        mu = curvature_mu_from_samples(kc, Ec[:, col], threshold, k_fit=curvature_window)
        bands.append(Band(j=j, k_samples=ks.copy(), E_samples=E[:, col].copy(),
                          dE_samples=dE[:, col].copy(), threshold=threshold, mu=mu))
    return bands


def sample_band(b: float, L: float, j: int, k_max: float | None = None,
                n_k: int = DEFAULT_NK, n_grid: int = DEFAULT_GRID_SIZE,
                tol: float = DEFAULT_TOL,
                curvature_window: float = DEFAULT_CURVATURE_WINDOW) -> Band:
    return sample_bands(b, L, [j], k_max=k_max, n_k=n_k, n_grid=n_grid, tol=tol,
                        curvature_window=curvature_window)[0]


def curvature_mu_from_samples(ks: np.ndarray, Es: np.ndarray, threshold: float,
                              k_fit: float = DEFAULT_CURVATURE_WINDOW) -> float:
    """Least-squares fit of E(k) - E(0) against k^2 + c*k^4 on |k| <= k_fit;
    the quartic term absorbs the next order so the k^2 coefficient is an
    unbiased curvature estimate."""
    mask = np.abs(ks) <= k_fit * (1.0 + 1e-12)
    if int(np.count_nonzero(mask)) < 5:
        raise FitError(
            f"curvature fit needs at least 5 nodes in |k| <= {k_fit}, "
            f"got {int(np.count_nonzero(mask))}"
        )
    kk = ks[mask]
    rise = Es[mask] - threshold
    A = np.column_stack([kk**2, kk**4])
    coef, *_ = np.linalg.lstsq(A, rise, rcond=None)
    mu = float(coef[0])
    # flat bands sit below the eigenvalue resolution; report the fit noise
    # floor (a positive upper bound) instead of a noise-sign curvature
    resid = float(np.max(np.abs(A @ coef - rise)))
    floor = 10.0 * resid / k_fit**2 + 1e-300
    if mu <= floor:
        if mu < -1e3 * floor:
            raise FitError(f"curvature fit produced non-positive mu = {mu}")
        mu = floor
    return mu


def curvature_mu(band: Band, k_fit: float = DEFAULT_CURVATURE_WINDOW) -> float:
    return curvature_mu_from_samples(band.k_samples, band.E_samples, band.threshold,
                                     k_fit=k_fit)


def _half_band(band: Band):
    """Nonnegative-k half of the sampled band as (t, E, k*dE) arrays with
    t = k^2 strictly increasing."""
    sel = band.k_samples >= 0.0
    ks = band.k_samples[sel]
    order = np.argsort(ks)
    ks = ks[order]
    t = ks**2
    E = band.E_samples[sel][order]
    f = ks * band.dE_samples[sel][order]
    return t, E, f


def _local_quadratic(t: np.ndarray, y: np.ndarray, cell: int):
    """Quadratic through the three samples around the given cell, as
    polynomial coefficients in (t - t[cell])."""
    i = min(max(cell, 1), t.size - 2)
    ts = t[i - 1:i + 2] - t[cell]
    ys = y[i - 1:i + 2]
    return np.polyfit(ts, ys, 2), t[cell]


def inverse_band(band: Band, s: float) -> float:
    """The unique k >= 0 with E_j(k) - E_j(0) = s, from monotone bisection
    on the local quadratic interpolant in t = k^2."""
    if s < 0:
        raise DomainError(f"inverse band argument must be >= 0, got {s}")
    if s == 0.0:
        return 0.0
    t, E, _ = _half_band(band)
    rise = E - band.threshold
    if s > rise[-1] * (1.0 + 1e-12):
        raise DomainError(
            f"inverse band argument {s:g} exceeds the sampled rise {rise[-1]:g}"
        )
    s = min(s, float(rise[-1]))
    cell = int(np.searchsorted(rise, s, side="right") - 1)
    cell = min(max(cell, 0), t.size - 2)
    coef, t0 = _local_quadratic(t, rise, cell)
    lo, hi = t[cell] - t0, t[cell + 1] - t0
    flo, fhi = np.polyval(coef, lo) - s, np.polyval(coef, hi) - s
    if flo * fhi > 0:
        # quadratic lost the bracket (flat data noise); fall back to the
        # monotone linear interpolant on the cell
        frac = (s - rise[cell]) / (rise[cell + 1] - rise[cell])
        return math.sqrt(t[cell] + frac * (t[cell + 1] - t[cell]))
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = np.polyval(coef, mid) - s
        if flo * fm <= 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return math.sqrt(max(t0 + 0.5 * (lo + hi), 0.0))


def _thresholds(bands: list[Band]) -> np.ndarray:
    bs = sorted(bands, key=lambda b: b.j)
    if [b.j for b in bs] != list(range(1, len(bs) + 1)):
        raise InvalidSpecError("bands must cover consecutive indices 1..m")
    th = np.array([b.threshold for b in bs])
    if not np.all(np.diff(th) > 0):
        raise InvalidSpecError("thresholds must be strictly increasing")
    return th


def _locate_gap(bands: list[Band], E: float, rel_tol: float = 1e-9):
    """Index n with threshold_n < E < threshold_{n+1}; requires the band
    list to cover both neighbours."""
    th = _thresholds(bands)
    scale = max(1.0, abs(E))
    dist = float(np.min(np.abs(th - E)))
    if dist <= rel_tol * scale:
        raise DomainError(f"energy {E:g} sits at a threshold (distance {dist:g})")
    n = int(np.searchsorted(th, E))
    if n == 0:
        raise DomainError(f"energy {E:g} lies below the first threshold {th[0]:g}")
    if n >= th.size:
        raise DomainError(
            f"energy {E:g} lies above the highest sampled threshold {th[-1]:g}; "
            "sample more bands"
        )
    return n, th, dist


def _preimages(bands: list[Band], E: float, delta: float, n: int):
    """Window preimage intervals [B_r] on the k >= 0 half-line, r = 1..n."""
    bs = sorted(bands, key=lambda b: b.j)
    out = []
    for r in range(1, n + 1):
        band = bs[r - 1]
        lo = inverse_band(band, E - delta - band.threshold)
        hi = inverse_band(band, E + delta - band.threshold)
        out.append((lo, hi))
    return out


def _pairwise_disjoint(intervals: list[tuple[float, float]]) -> bool:
    # bands are ordered so that higher r gives smaller preimage momenta
    for (lo_r, _), (_, hi_next) in zip(intervals, intervals[1:]):
        if not (hi_next < lo_r):
            return False
    return True


def separation_delta(bands: list[Band], E: float) -> float:
    """Largest window half-width delta <= dist(E, thresholds)/2 on a dyadic
    ladder for which the preimages of [E-delta, E+delta] under the first n
    bands are pairwise disjoint; the upper bound already keeps the window
    inside the gap."""
    n, th, dist = _locate_gap(bands, E)
    delta = 0.5 * dist
    for _ in range(_MAX_HALVINGS):
        if E + delta < th[n]:  # redundant with delta <= dist/2; kept explicit
            pre = _preimages(bands, E, delta, n)
            if _pairwise_disjoint(pre):
                return delta
        delta *= 0.5
    raise ConvergenceError(
        f"no admissible separation radius found for E = {E:g} after "
        f"{_MAX_HALVINGS} halvings"
    )


def mourre_constant(bands: list[Band], E: float, delta: float) -> MourreReport:
    """Per-band minima of k*E_r'(k) over the window preimages and their
    overall minimum; positive whenever the window avoids the thresholds."""
    if not (delta > 0):
        raise InvalidSpecError(f"delta must be positive, got {delta}")
    n, th, dist = _locate_gap(bands, E)
    if delta > dist:
        raise InvalidSpecError(
            f"delta = {delta:g} exceeds the distance {dist:g} to the threshold set"
        )
    pre = _preimages(bands, E, delta, n)
    disjoint = _pairwise_disjoint(pre)
    bs = sorted(bands, key=lambda b: b.j)
    constants = []
    for r, (k_lo, k_hi) in enumerate(pre, start=1):
        t, _, f = _half_band(bs[r - 1])
        t_lo, t_hi = k_lo**2, k_hi**2
        candidates = [_eval_t(t, f, t_lo), _eval_t(t, f, t_hi)]
        inside = (t > t_lo) & (t < t_hi)
        candidates.extend(f[inside].tolist())
        constants.append(min(candidates))
    if not constants:
        raise DomainError(f"no band meets the window around E = {E:g}")
    return MourreReport(
        window=(E - delta, E + delta),
        n=n,
        per_band_constants=tuple(constants),
        mourre_constant=min(constants),
        preimages=tuple(pre),
        preimages_disjoint=disjoint,
    )


def _eval_t(t: np.ndarray, y: np.ndarray, tq: float) -> float:
    """Evaluate the local quadratic interpolant (in t) at tq."""
    cell = int(np.searchsorted(t, tq, side="right") - 1)
    cell = min(max(cell, 0), t.size - 2)
    coef, t0 = _local_quadratic(t, y, cell)
    return float(np.polyval(coef, tq - t0))


def write_band_csv(band: Band, path: str) -> None:
    """Band export: columns k, E_j, dE_j with the index in the header."""
    with open(path, "w", newline="\n") as fh:
        fh.write(f"k,E_{band.j},dE_{band.j}\n")
        for k, e, d in zip(band.k_samples, band.E_samples, band.dE_samples):
            fh.write(f"{k:.17g},{e:.17g},{d:.17g}\n")
