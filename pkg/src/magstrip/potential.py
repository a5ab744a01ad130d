"""Separable models of the electric perturbation and the effective
potentials obtained by averaging against a threshold eigenfunction.

A potential is a sum of terms c * X(x) * Y(y). The x profiles are
nonnegative on the strip, the y profiles either carry a pure power tail
|y|^(-e) (possibly odd in y) or decay faster than any power, so every
term has a definite sign structure and the tail limits of the averaged
potentials are available in closed form.

The sign-weighted integrand |V| / (sign(V) - eps) equals
V / (1 - eps*sign(V)) pointwise, which is the form used throughout: the
denominator never vanishes for |eps| < 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DecayViolationError, DomainError, InvalidSpecError
from .fiber import GridFunction1D

X_FAMILIES = ("constant", "cosine", "indicator")
Y_FAMILIES = ("power_tail", "signed_power_tail", "bump", "gaussian")

_TAIL_CHECK_RTOL = 0.02
_TAIL_CHECK_POINTS = (1e3, 1e4)


def _require_params(name: str, params: dict, keys: tuple[str, ...]):
    missing = [k for k in keys if k not in params]
    if missing:
        raise InvalidSpecError(f"profile '{name}' is missing parameters {missing}")
    unknown = [k for k in params if k not in keys]
    if unknown:
        raise InvalidSpecError(f"profile '{name}' has unknown parameters {unknown}")


@dataclass(frozen=True)
class XProfile:
    """Cross-section profile, nonnegative on [-L, L]."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in X_FAMILIES:
            raise InvalidSpecError(
                f"unknown x_profile '{self.name}', expected one of {X_FAMILIES}"
            )
        if self.name == "constant" or self.name == "cosine":
            _require_params(self.name, self.params, ())
        elif self.name == "indicator":
            _require_params(self.name, self.params, ("lo", "hi", "smooth"))
            if not (self.params["lo"] < self.params["hi"]):
                raise InvalidSpecError("indicator x_profile needs lo < hi")
            if not (self.params["smooth"] > 0):
                raise InvalidSpecError("indicator x_profile needs smooth > 0")

    def evaluate(self, x: np.ndarray, half_width: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.name == "constant":
            return np.ones_like(x)
        if self.name == "cosine":
            return np.cos(0.5 * math.pi * x / half_width)
        lo, hi, s = self.params["lo"], self.params["hi"], self.params["smooth"]
        # mollified indicator: C^1 smoothstep ramps of width s at both edges
        up = np.clip((x - lo) / s, 0.0, 1.0)
        down = np.clip((hi - x) / s, 0.0, 1.0)
        ramp_up = up * up * (3.0 - 2.0 * up)
        ramp_down = down * down * (3.0 - 2.0 * down)
        return ramp_up * ramp_down


@dataclass(frozen=True)
class YProfile:
    """Longitudinal profile with a prescribed tail behaviour."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in Y_FAMILIES:
            raise InvalidSpecError(
                f"unknown y_profile '{self.name}', expected one of {Y_FAMILIES}"
            )
        if self.name in ("power_tail", "signed_power_tail"):
            _require_params(self.name, self.params, ("exponent",))
            if not (self.params["exponent"] > 0):
                raise InvalidSpecError(f"{self.name} needs exponent > 0")
        elif self.name == "bump":
            _require_params(self.name, self.params, ("radius",))
            if not (self.params["radius"] > 0):
                raise InvalidSpecError("bump y_profile needs radius > 0")
        elif self.name == "gaussian":
            _require_params(self.name, self.params, ("sigma",))
            if not (self.params["sigma"] > 0):
                raise InvalidSpecError("gaussian y_profile needs sigma > 0")

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.name == "power_tail":
            return (1.0 + y**2) ** (-0.5 * self.params["exponent"])
        if self.name == "signed_power_tail":
            return np.sign(y) * (1.0 + y**2) ** (-0.5 * self.params["exponent"])
        if self.name == "bump":
            r = self.params["radius"]
            u = y / r
            out = np.zeros_like(u)
            inside = np.abs(u) < 1.0
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
            return out
        s = self.params["sigma"]
        return np.exp(-0.5 * (y / s) ** 2)

    def tail_exponent(self) -> float:
        if self.name in ("power_tail", "signed_power_tail"):
            return float(self.params["exponent"])
        return math.inf

    def tail_coefficients(self) -> tuple[float, float]:
        """Limits of |y|^e * Y(y) at (-inf, +inf) for the tail exponent e;
        zero for super-polynomial decay."""
        if self.name == "power_tail":
            return (1.0, 1.0)
        if self.name == "signed_power_tail":
            return (-1.0, 1.0)
        return (0.0, 0.0)


@dataclass(frozen=True)
class PotentialTerm:
    c: float
    x_profile: XProfile
    y_profile: YProfile

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise InvalidSpecError(f"term amplitude c must be finite, got {self.c}")


@dataclass(frozen=True)
class PotentialSpec:
    """Decay exponent alpha and the list of separable terms."""

    alpha: float
    terms: tuple[PotentialTerm, ...] = ()

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InvalidSpecError(f"alpha must be positive and finite, got {self.alpha}")
        object.__setattr__(self, "terms", tuple(self.terms))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "terms": [
                {
                    "c": t.c,
                    "x_profile": {"name": t.x_profile.name, "params": dict(t.x_profile.params)},
                    "y_profile": {"name": t.y_profile.name, "params": dict(t.y_profile.params)},
                }
                for t in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PotentialSpec":
        if "alpha" not in doc:
            raise InvalidSpecError("potential document is missing the field 'alpha'")
        terms = []
        for i, td in enumerate(doc.get("terms", [])):
            for key in ("c", "x_profile", "y_profile"):
                if key not in td:
                    raise InvalidSpecError(f"potential terms[{i}] is missing '{key}'")
            terms.append(
                PotentialTerm(
                    c=float(td["c"]),
                    x_profile=XProfile(td["x_profile"]["name"],
                                       dict(td["x_profile"].get("params", {}))),
                    y_profile=YProfile(td["y_profile"]["name"],
                                       dict(td["y_profile"].get("params", {}))),
                )
            )
        return cls(alpha=float(doc["alpha"]), terms=tuple(terms))

    @classmethod
    def from_json(cls, text: str) -> "PotentialSpec":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class EffectivePotential:
    """Averaged potential w_{j,eps} on a y grid with its power-tail limits
    (absent when some profile lacks a pure power tail)."""

    j: int
    epsilon: float
    grid: np.ndarray
    values: np.ndarray
    omega_minus: float | None
    omega_plus: float | None


def _check_strip(x: np.ndarray, half_width: float):
    if np.any(np.abs(x) > half_width * (1.0 + 1e-12)):
        raise DomainError(
            f"x outside the strip [-{half_width}, {half_width}]"
        )


def evaluate_potential(spec: PotentialSpec, x, y, half_width: float) -> np.ndarray:
    """V(x, y) as the sum over the separable terms; x and y broadcast."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_strip(x, half_width)
    out = np.zeros(np.broadcast_shapes(x.shape, y.shape))
    for t in spec.terms:
        out = out + t.c * t.x_profile.evaluate(x, half_width) * t.y_profile.evaluate(y)
    return out


def sign_field(spec: PotentialSpec, x, y, half_width: float) -> np.ndarray:
    """+1 where V >= 0 (including V = 0), -1 where V < 0."""
    v = evaluate_potential(spec, x, y, half_width)
    return np.where(v >= 0.0, 1.0, -1.0)


def verify_decay(spec: PotentialSpec, half_width: float, y_max: float = 1e3,
                 nx: int = 201, ny: int = 400) -> float:
    """Smallest grid-certified constant c with |V| <= c <y>^(-alpha).

    Every term's tail exponent must reach alpha (else the bound cannot
    hold); the certified constant is the maximum of |V|<y>^alpha over a
    dense grid combined with the analytic tail supremum.
    """
    for i, t in enumerate(spec.terms):
        e = t.y_profile.tail_exponent()
        if e < spec.alpha:
            raise DecayViolationError(
                f"terms[{i}] has tail exponent {e} below alpha = {spec.alpha}"
            )
    if not spec.terms:
        return 0.0
    x = np.linspace(-half_width, half_width, nx)
    y = np.concatenate([[0.0], np.geomspace(1e-3, y_max, ny)])
    y = np.concatenate([-y[::-1], y])
    v = evaluate_potential(spec, x[:, None], y[None, :], half_width)
    weight = (1.0 + y**2) ** (0.5 * spec.alpha)
    grid_max = float(np.max(np.abs(v) * weight[None, :]))
    tail_sup = 0.0
    for side in (0, 1):
        s = np.zeros_like(x)
        for t in spec.terms:
            if t.y_profile.tail_exponent() == spec.alpha:
                s += t.c * t.x_profile.evaluate(x, half_width) * t.y_profile.tail_coefficients()[side]
        tail_sup = max(tail_sup, float(np.max(np.abs(s))))
    return max(grid_max, tail_sup)


def _averaging_weights(psi: GridFunction1D) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid weights of psi(x)^2 dx on the eigenfunction grid."""
    x = psi.nodes
    h = np.diff(x)
    wts = np.zeros_like(x)
    wts[:-1] += 0.5 * h
    wts[1:] += 0.5 * h
    return x, wts * psi.values**2


def effective_potential(spec: PotentialSpec, psi: GridFunction1D, epsilon: float,
                        y_grid: np.ndarray, half_width: float,
                        j: int = 1) -> EffectivePotential:
    """w_{j,eps}(y): trapezoid average of V/(1 - eps*sign V) against psi^2."""
    if not (abs(epsilon) < 1.0):
        raise InvalidSpecError(f"epsilon must satisfy |epsilon| < 1, got {epsilon}")
    y_grid = np.asarray(y_grid, dtype=float)
    x, wts = _averaging_weights(psi)
    _check_strip(x, half_width)
    v = evaluate_potential(spec, x[:, None], y_grid[None, :], half_width)
    jfield = np.where(v >= 0.0, 1.0, -1.0)
    values = (v / (1.0 - epsilon * jfield) * wts[:, None]).sum(axis=0)
    try:
        omega_minus, omega_plus = tail_limits(spec, psi, epsilon, half_width)
    except DecayViolationError:
        omega_minus = omega_plus = None
    return EffectivePotential(j=j, epsilon=epsilon, grid=y_grid, values=values,
                              omega_minus=omega_minus, omega_plus=omega_plus)


def effective_callable(spec: PotentialSpec, psi: GridFunction1D, epsilon: float,
                       half_width: float):
    """w_{j,eps} as a vectorised callable on arbitrary y.

    Closed form when eps = 0 (the sign weight drops out) or for a single
    term (the sign of V is then independent of x); otherwise the x average
    is quadratured per y in chunks.
    """
    if not (abs(epsilon) < 1.0):
        raise InvalidSpecError(f"epsilon must satisfy |epsilon| < 1, got {epsilon}")
    x, wts = _averaging_weights(psi)
    coeffs = [float(np.sum(t.x_profile.evaluate(x, half_width) * wts)) for t in spec.terms]

    if epsilon == 0.0:
        def w_zero(y):
            y = np.asarray(y, dtype=float)
            out = np.zeros_like(y)
            for a, t in zip(coeffs, spec.terms):
                out = out + t.c * a * t.y_profile.evaluate(y)
            return out
        return w_zero

    if len(spec.terms) <= 1:
        def w_single(y):
            y = np.asarray(y, dtype=float)
            out = np.zeros_like(y)
            for a, t in zip(coeffs, spec.terms):
                prof = t.y_profile.evaluate(y)
                sgn = np.where(t.c * prof >= 0.0, 1.0, -1.0)
                out = out + t.c * a * prof / (1.0 - epsilon * sgn)
            return out
        return w_single

    def w_general(y):
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        out = np.empty_like(flat)
        chunk = 1024
        for s in range(0, flat.size, chunk):
            yy = flat[s:s + chunk]
            v = evaluate_potential(spec, x[:, None], yy[None, :], half_width)
            jf = np.where(v >= 0.0, 1.0, -1.0)
            out[s:s + chunk] = (v / (1.0 - epsilon * jf) * wts[:, None]).sum(axis=0)
        return out.reshape(y.shape)

    return w_general


def tail_limits(spec: PotentialSpec, psi: GridFunction1D, epsilon: float,
                half_width: float) -> tuple[float, float]:
    """Limits of |y|^alpha * w_{j,eps}(y) at -inf and +inf.

    Assembled analytically from the tail coefficients of the alpha-exponent
    terms, then cross-checked against direct evaluations at |y| = 1e3 and
    1e4 (Cauchy criterion at 2 percent).
    """
    if not (abs(epsilon) < 1.0):
        raise InvalidSpecError(f"epsilon must satisfy |epsilon| < 1, got {epsilon}")
    for i, t in enumerate(spec.terms):
        e = t.y_profile.tail_exponent()
        if not math.isfinite(e):
            raise DecayViolationError(
                f"terms[{i}] y_profile '{t.y_profile.name}' has no pure power tail"
            )
        if e < spec.alpha:
            raise DecayViolationError(
                f"terms[{i}] has tail exponent {e} below alpha = {spec.alpha}"
            )
    x, wts = _averaging_weights(psi)
    limits = []
    for side in (0, 1):
        s = np.zeros_like(x)
        for t in spec.terms:
            if t.y_profile.tail_exponent() == spec.alpha:
                s += t.c * t.x_profile.evaluate(x, half_width) * t.y_profile.tail_coefficients()[side]
        sign_s = np.where(s >= 0.0, 1.0, -1.0)
        limits.append(float(np.sum(s / (1.0 - epsilon * sign_s) * wts)))
    omega_minus, omega_plus = limits

    scale = max(abs(omega_minus), abs(omega_plus), 1e-12)
    for side, omega in ((-1.0, omega_minus), (+1.0, omega_plus)):
        vals = []
        for ypt in _TAIL_CHECK_POINTS:
            y = np.array([side * ypt])
            v = evaluate_potential(spec, x[:, None], y[None, :], half_width)
            jf = np.where(v >= 0.0, 1.0, -1.0)
            w = float((v / (1.0 - epsilon * jf) * wts[:, None]).sum(axis=0)[0])
            vals.append(abs(y[0]) ** spec.alpha * w)
        if abs(vals[1] - vals[0]) > _TAIL_CHECK_RTOL * scale:
            raise DecayViolationError(
                f"tail limit cross-check failed on side {side:+.0f}: "
                f"|y|^alpha w = {vals[0]:.6g} at 1e3 vs {vals[1]:.6g} at 1e4"
            )
    return omega_minus, omega_plus
