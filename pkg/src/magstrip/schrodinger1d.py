"""Effective 1D Hamiltonians -mu d^2/dy^2 + w(y) on the line.

Below the essential spectrum the spectral shift function of the pair
(h, h0) is minus the counting function, obtained here from Sturm pivot
counts of a graded Dirichlet discretisation whose node density follows
the local wavenumber. Above it, the SSF is assembled from the two
half-line Dirichlet phase shifts (the left half-line by reflection),
each integrated by a shooting method and matched to a free sine wave;
the phase branch is unwrapped continuously in energy from a high-energy
anchor where the Born approximation pins the principal value. A box
counting estimate on identical grids serves as a coarse cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .errors import ConvergenceError, InvalidSpecError

DEFAULT_COUNT_PPW = 40.0
DEFAULT_SHOOT_PPW = 80.0
DEFAULT_MATCH_RTOL = 1e-4
_GEO_NODES_PER_EFOLD = 8.0
_MATCH_FIT_TOL = 5e-3
_ANCHOR_MARGIN = 1e-3
_UNWRAP_MAX_STEP = 1.2  # radians; below pi so a jump is always detectable
_MAX_RADIUS_DOUBLINGS = 60


@dataclass(frozen=True)
class EffectiveOperator:
    """Pair (h0, h) = (-mu d2/dy2, h0 + w) with a truncation radius and a
    minimum node budget for counting grids."""

    mu: float
    w: Callable[[np.ndarray], np.ndarray]
    domain_radius: float = 64.0
    n: int = 2048
    w_sup: float = 0.0
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise InvalidSpecError(f"mu must be positive and finite, got {self.mu}")
        if not (self.domain_radius > 0):
            raise InvalidSpecError("domain_radius must be positive")
        if self.n < 16:
            raise InvalidSpecError("node budget n must be at least 16")


def make_operator(mu: float, w: Callable[[np.ndarray], np.ndarray],
                  domain_radius: float = 64.0, n: int = 2048,
                  breakpoints: tuple[float, ...] = ()) -> EffectiveOperator:
    """Build an operator and cache sup|w| from a wide log-spaced sample.

    breakpoints lists locations where w jumps; shooting grids place nodes
    there so the integrator never steps across a discontinuity.
    """
    probe = np.concatenate([[0.0], np.geomspace(1e-4, 1e8, 1537)])
    probe = np.concatenate([-probe[::-1], probe])
    vals = np.abs(np.asarray(w(probe), dtype=float))
    if not np.all(np.isfinite(vals)):
        raise InvalidSpecError("w evaluates to a non-finite value")
    return EffectiveOperator(mu=mu, w=w, domain_radius=domain_radius, n=n,
                             w_sup=float(np.max(vals)),
                             breakpoints=tuple(sorted(breakpoints)))


def free_operator(mu: float = 1.0) -> EffectiveOperator:
    return EffectiveOperator(mu=mu, w=lambda y: np.zeros_like(np.asarray(y, float)),
                             w_sup=0.0)


@dataclass(frozen=True)
class PhaseShiftResult:
    lam: float
    side: int
    delta: float
    xi: float
    anchor: float


@dataclass(frozen=True)
class SsfCurve:
    """Sampled spectral shift estimates; 'phase-shift' uses counting below
    zero and half-line phases above, 'box' uses eigenvalue-count
    differences on identical grids throughout."""

    lambda_samples: np.ndarray
    xi_values: np.ndarray
    method: str
    branch_anchor: float | None = None


# ----------------------------------------------------------------------
# graded meshes and counting


def _tail_radius(w, bound: float, start: float, both_sides: bool = True) -> float:
    """Smallest dyadic radius R >= start with |w| <= bound on [R, 16R]."""
    r = max(start, 1.0)
    for _ in range(_MAX_RADIUS_DOUBLINGS):
        probe = np.geomspace(r, 16.0 * r, 65)
        m = float(np.max(np.abs(w(probe))))
        if both_sides:
            m = max(m, float(np.max(np.abs(w(-probe)))))
        if m <= bound:
            return r
        r *= 2.0
    raise ConvergenceError(
        f"could not find a radius where |w| <= {bound:g}; potential decays too slowly"
    )


def _half_mesh(op: EffectiveOperator, lam: float, radius: float,
               density_factor: float, ppw: float) -> np.ndarray:
    """Nodes on [0, radius] equidistributed w.r.t. a density built from the
    local wavenumber plus a logarithmic floor that tracks the potential's
    variation scale."""
    ref = np.concatenate([np.linspace(0.0, min(1.0, radius), 257),
                          np.geomspace(1.0, radius, 1 + int(160 * math.log10(max(radius, 1.01))))]) \
        if radius > 1.0 else np.linspace(0.0, radius, 513)
    ref = np.unique(ref)
    wmag = np.maximum(np.abs(op.w(ref)), np.abs(op.w(-ref)))
    kappa = np.sqrt((wmag + abs(lam)) / op.mu)
    dens = ppw / (2.0 * math.pi) * kappa + _GEO_NODES_PER_EFOLD / (1.0 + ref)
    dens *= density_factor
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(ref))])
    total = cum[-1]
    n_half = max(int(math.ceil(total)), op.n // 2, 64)
    targets = np.linspace(0.0, total, n_half + 1)
    nodes = np.interp(targets, cum, ref)
    nodes[0], nodes[-1] = 0.0, radius
    return np.unique(nodes)


def _dirichlet_tridiag(op: EffectiveOperator, nodes: np.ndarray):
    """Lumped-mass P1 discretisation of -mu u'' + w u with Dirichlet ends,
    reduced to a standard symmetric tridiagonal by congruence (which
    preserves eigenvalue counts)."""
    h = np.diff(nodes)
    mass = 0.5 * (h[:-1] + h[1:])
    wvals = np.asarray(op.w(nodes[1:-1]), dtype=float)
    diag = op.mu * (1.0 / h[:-1] + 1.0 / h[1:]) / mass + wvals
    off = -op.mu / h[1:-1] / np.sqrt(mass[:-1] * mass[1:])
    return diag, off


def _count_below(op: EffectiveOperator, energy: float, radius: float,
                 density_factor: float, ppw: float) -> int:
    half = _half_mesh(op, energy, radius, density_factor, ppw)
    nodes = np.concatenate([-half[::-1], half[1:]])
    diag, off = _dirichlet_tridiag(op, nodes)
    return int(_kernels.sturm_count(diag, off, energy))


def count_bound_states(op: EffectiveOperator, lam: float,
                       ppw: float = DEFAULT_COUNT_PPW,
                       check_stability: bool = True) -> int:
    """Number of eigenvalues of h strictly below -lam (lam > 0).

    The truncation radius is enlarged until |w| <= lam/10 beyond it, then
    the Sturm count is required to be stable under doubling of both the
    radius and the node density.
    """
    if not (lam > 0):
        raise InvalidSpecError(f"counting energy -lam needs lam > 0, got {lam}")
    radius = _tail_radius(op.w, lam / 10.0, op.domain_radius)
    count = _count_below(op, -lam, radius, 1.0, ppw)
    if check_stability:
        c_radius = _count_below(op, -lam, 2.0 * radius, 1.0, ppw)
        if c_radius != count:
            raise ConvergenceError(
                f"truncation-unstable count at -{lam:g}: {count} on radius "
                f"{radius:g} vs {c_radius} on {2*radius:g}"
            )
        c_dens = _count_below(op, -lam, radius, 2.0, ppw)
        if c_dens != count:
            raise ConvergenceError(
                f"truncation-unstable count at -{lam:g}: {count} vs {c_dens} "
                "after grid refinement"
            )
    return count


def count_bound_states_halfline(op: EffectiveOperator, lam: float, side: int = +1,
                                ppw: float = DEFAULT_COUNT_PPW) -> int:
    """Bound states below -lam of the half-line Dirichlet restriction."""
    if not (lam > 0):
        raise InvalidSpecError(f"counting energy -lam needs lam > 0, got {lam}")
    if side not in (+1, -1):
        raise InvalidSpecError("side must be +1 or -1")
    radius = _tail_radius(op.w, lam / 10.0, op.domain_radius)
    w_oriented = op.w if side > 0 else (lambda y: op.w(-np.asarray(y, float)))
    oriented = EffectiveOperator(mu=op.mu, w=w_oriented, domain_radius=op.domain_radius,
                                 n=op.n, w_sup=op.w_sup)
    counts = []
    for r, f in ((radius, 1.0), (2.0 * radius, 1.0), (radius, 2.0)):
        nodes = _half_mesh(oriented, lam, r, f, ppw)
        diag, off = _dirichlet_tridiag(oriented, nodes)
        counts.append(int(_kernels.sturm_count(diag, off, -lam)))
    if len(set(counts)) != 1:
        raise ConvergenceError(
            f"truncation-unstable half-line count at -{lam:g}: {counts}"
        )
    return counts[0]


def ssf_box(op: EffectiveOperator, lam: float, radius: float | None = None,
            ppw: float = DEFAULT_COUNT_PPW) -> float:
    """SSF estimate -[N(lam; h, box) - N(lam; h0, box)] with the perturbed
    and free operators discretised on the identical Dirichlet box and grid.
    For lam > 0 this oscillates within +-1 of the phase-shift value and is
    a sanity envelope only.
    """
    if lam == 0.0:
        raise InvalidSpecError("box SSF is undefined at lam = 0")
    if radius is None:
        radius = op.domain_radius
        if lam > 0:
            radius = max(radius, 100.0 * 2.0 * math.pi * math.sqrt(op.mu / lam))
        else:
            radius = _tail_radius(op.w, abs(lam) / 10.0, op.domain_radius)
    half = _half_mesh(op, lam, radius, 1.0, ppw)
    nodes = np.concatenate([-half[::-1], half[1:]])
    diag, off = _dirichlet_tridiag(op, nodes)
    n_pert = int(_kernels.sturm_count(diag, off, lam))
    wvals = np.asarray(op.w(nodes[1:-1]), dtype=float)
    n_free = int(_kernels.sturm_count(diag - wvals, off, lam))
    return -float(n_pert - n_free)


# ----------------------------------------------------------------------
# half-line phase shifts


def _wrap_angle(a: float) -> float:
    """Reduce to the principal interval (-pi, pi]."""
    out = math.fmod(a, 2.0 * math.pi)
    if out <= -math.pi:
        out += 2.0 * math.pi
    elif out > math.pi:
        out -= 2.0 * math.pi
    return out


def _shoot_nodes(op: EffectiveOperator, w, lam: float, y_end: float,
                 ppw: float, breaks: tuple[float, ...] = ()) -> np.ndarray:
    """Integration nodes on [0, y_end] resolving the local wavelength;
    discontinuity locations become nodes so no step straddles a jump."""
    if y_end <= 1.0:
        ref = np.linspace(0.0, y_end, 513)
    else:
        ref = np.unique(np.concatenate([
            np.linspace(0.0, 1.0, 257),
            np.geomspace(1.0, y_end, 1 + int(160 * math.log10(y_end)))]))
    kappa = np.sqrt((np.abs(w(ref)) + lam) / op.mu)
    dens = ppw / (2.0 * math.pi) * kappa + 4.0 / (1.0 + ref)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(ref))])
    n = max(int(math.ceil(cum[-1])), 64)
    nodes = np.interp(np.linspace(0.0, cum[-1], n + 1), cum, ref)
    nodes[0], nodes[-1] = 0.0, y_end
    inner = [b for b in breaks if 0.0 < b < y_end]
    if inner:
        nodes = np.concatenate([nodes, np.asarray(inner)])
    return np.unique(nodes)


def _sample_g(op, w, lam, nodes):
    """g = (w - lam)/mu at step starts, midpoints, and ends, with the
    endpoint samples nudged strictly inside the step so one-sided values
    are used next to a discontinuity node."""
    steps = np.diff(nodes)
    mids = nodes[:-1] + 0.5 * steps
    eps = 1e-9 * steps
    g_start = (np.asarray(w(nodes[:-1] + eps), float) - lam) / op.mu
    g_mid = (np.asarray(w(mids), float) - lam) / op.mu
    g_end = (np.asarray(w(nodes[1:] - eps), float) - lam) / op.mu
    return steps, g_start, g_mid, g_end


def _integrate(op, w, lam, nodes):
    steps, g_start, g_mid, g_end = _sample_g(op, w, lam, nodes)
    return _kernels.rk4_shoot(0.0, 1.0, steps, g_start, g_mid, g_end)


def _principal_phase(op: EffectiveOperator, w, lam: float,
                     ppw: float, match_rtol: float) -> float:
    """Principal phase in (-pi, pi] of the regular solution against the
    free sine at momentum sqrt(lam/mu), matched where the potential has
    decayed below match_rtol*lam; two extraction points a quarter
    wavelength apart guard the matching."""
    kappa = math.sqrt(lam / op.mu)
    y_match = _tail_radius(w, match_rtol * lam, 1.0, both_sides=False)
    nodes = _shoot_nodes(op, w, lam, y_match, ppw, breaks=op.breakpoints)
    u1, v1, _ = _integrate(op, w, lam, nodes)
    quarter = 0.5 * math.pi / kappa
    m = max(8, int(math.ceil(ppw / 4.0)))
    ext = y_match + np.linspace(0.0, quarter, m + 1)
    # u and u' stay continuous across the junction; the extension reuses them
    steps, gs, gm, ge = _sample_g(op, w, lam, ext)
    u2, v2, _ = _kernels.rk4_shoot(u1, v1, steps, gs, gm, ge)
    d1 = _wrap_angle(math.atan2(kappa * u1, v1) - kappa * y_match)
    d2 = _wrap_angle(math.atan2(kappa * u2, v2) - kappa * (y_match + quarter))
    mismatch = abs(_wrap_angle(d2 - d1))
    if mismatch > _MATCH_FIT_TOL:
        raise ConvergenceError(
            f"phase matching failed at lam = {lam:g}: extraction points "
            f"disagree by {mismatch:.3e} rad"
        )
    return d2


def _default_anchor(op: EffectiveOperator, lam_max: float) -> float:
    return 1e3 * max(op.w_sup, lam_max, 1e-3)


def halfline_phase_curve(op: EffectiveOperator, lams, side: int = +1,
                         anchor: float | None = None,
                         per_decade: int = 24,
                         ppw: float = DEFAULT_SHOOT_PPW,
                         match_rtol: float = DEFAULT_MATCH_RTOL) -> np.ndarray:
    """Continuously unwrapped phase shifts delta(lam) for the requested
    energies, marched down a geometric ladder from the anchor where the
    principal value is taken as the branch representative."""
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0):
        raise InvalidSpecError("phase shifts need lam > 0")
    if side not in (+1, -1):
        raise InvalidSpecError("side must be +1 or -1")
    base_w = op.w
    if side > 0:
        w = base_w
        breaks = tuple(b for b in op.breakpoints if b > 0)
    else:
        def w(y):
            return base_w(-np.asarray(y, float))
        breaks = tuple(sorted(-b for b in op.breakpoints if b < 0))
    op = EffectiveOperator(mu=op.mu, w=base_w, domain_radius=op.domain_radius,
                           n=op.n, w_sup=op.w_sup, breakpoints=breaks)
    if anchor is None:
        anchor = _default_anchor(op, float(np.max(lams)))
    anchor = max(anchor, float(np.max(lams)) * 4.0)

    memo: dict[float, float] = {}

    def principal(lam: float) -> float:
        if lam not in memo:
            memo[lam] = _principal_phase(op, w, lam, ppw, match_rtol)
        return memo[lam]

    p_anchor = principal(anchor)
    if math.pi - abs(p_anchor) < _ANCHOR_MARGIN:
        raise ConvergenceError(
            f"anchor at lam = {anchor:g} is ambiguous: principal phase "
            f"{p_anchor:.6f} sits within {_ANCHOR_MARGIN} of +-pi"
        )

    lo = float(np.min(lams))
    n_ladder = max(2, int(math.ceil(per_decade * math.log10(anchor / lo))) + 1)
    grid = np.unique(np.concatenate([np.geomspace(lo, anchor, n_ladder), lams]))[::-1]

    def advance(lam_prev: float, delta_prev: float, lam: float, depth: int = 0) -> float:
        p = principal(lam)
        cand = p + 2.0 * math.pi * round((delta_prev - p) / (2.0 * math.pi))
        if abs(cand - delta_prev) <= _UNWRAP_MAX_STEP:
            return cand
        if depth >= 48 or lam_prev / lam < 1.0 + 1e-12:
            raise ConvergenceError(
                f"phase unwrapping could not bridge lam {lam_prev:g} -> {lam:g}"
            )
        mid = math.sqrt(lam_prev * lam)
        d_mid = advance(lam_prev, delta_prev, mid, depth + 1)
        return advance(mid, d_mid, lam, depth + 1)

    unwrapped: dict[float, float] = {grid[0]: p_anchor}
    prev_lam, prev_delta = grid[0], p_anchor
    for lam in grid[1:]:
        d = advance(prev_lam, prev_delta, float(lam))
        unwrapped[float(lam)] = d
        prev_lam, prev_delta = float(lam), d
    return np.array([unwrapped[float(l)] for l in lams])


def halfline_phase_shift(op: EffectiveOperator, lam: float, side: int = +1,
                         anchor: float | None = None,
                         ppw: float = DEFAULT_SHOOT_PPW,
                         match_rtol: float = DEFAULT_MATCH_RTOL) -> PhaseShiftResult:
    """Phase shift and half-line SSF xi = -delta/pi at a single energy."""
    if anchor is None:
        anchor = _default_anchor(op, lam)
    delta = float(halfline_phase_curve(op, [lam], side=side, anchor=anchor,
                                       ppw=ppw, match_rtol=match_rtol)[0])
    return PhaseShiftResult(lam=lam, side=side, delta=delta, xi=-delta / math.pi,
                            anchor=anchor)


# ----------------------------------------------------------------------
# spectral shift function


def ssf_pair(op: EffectiveOperator, lam: float) -> float:
    """xi(lam; h, h0): minus the count below lam for lam < 0, the sum of
    the two half-line phase SSFs for lam > 0 (which matches the whole-line
    SSF up to a bounded term that drops out of asymptotic rates)."""
    if lam == 0.0:
        raise InvalidSpecError("the SSF is evaluated away from lam = 0 only")
    if lam < 0.0:
        return -float(count_bound_states(op, -lam))
    plus = halfline_phase_shift(op, lam, side=+1)
    minus = halfline_phase_shift(op, lam, side=-1)
    return plus.xi + minus.xi


def ssf_curve(op: EffectiveOperator, lams, method: str = "phase-shift",
              anchor: float | None = None,
              per_decade: int = 24) -> SsfCurve:
    """SSF samples over a grid of nonzero energies."""
    if method not in ("phase-shift", "box"):
        raise InvalidSpecError(f"unknown SSF method '{method}'")
    lams = np.asarray(lams, dtype=float)
    if np.any(lams == 0.0):
        raise InvalidSpecError("the SSF is evaluated away from lam = 0 only")
    xi = np.empty_like(lams)
    branch_anchor = None
    if method == "box":
        for i, lam in enumerate(lams):
            xi[i] = ssf_box(op, float(lam))
    else:
        neg = lams < 0
        for i in np.nonzero(neg)[0]:
            xi[i] = -float(count_bound_states(op, -float(lams[i])))
        pos = ~neg
        if np.any(pos):
            pl = lams[pos]
            if anchor is None:
                anchor = _default_anchor(op, float(np.max(pl)))
            d_plus = halfline_phase_curve(op, pl, side=+1, anchor=anchor,
                                          per_decade=per_decade)
            d_minus = halfline_phase_curve(op, pl, side=-1, anchor=anchor,
                                           per_decade=per_decade)
            xi[pos] = -(d_plus + d_minus) / math.pi
            branch_anchor = anchor
    return SsfCurve(lambda_samples=lams.copy(), xi_values=xi, method=method,
                    branch_anchor=branch_anchor)


def write_ssf_csv(curve: SsfCurve, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("lambda,xi,method\n")
        for lam, xi in zip(curve.lambda_samples, curve.xi_values):
            fh.write(f"{lam:.17g},{xi:.17g},{curve.method}\n")
