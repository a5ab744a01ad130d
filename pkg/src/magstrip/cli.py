"""Command line driver: config ingestion, dispatch, file emission.

Commands: bands, effective, ssf, mourre, verify, calpha. Outputs are CSV
for curves (17 significant digits, LF endings) and JSON for reports.
Identical configs reproduce byte-identical CSVs; reports carry a single
generated_utc timestamp field.

Exit statuses: 0 success, 2 config parse failure, 3 validation failure,
4 numerical failure, 5 verification failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from .asymptotics import ToleranceProfile, c_alpha, verify_corollaries
from .bands import (
    mourre_constant,
    sample_bands,
    separation_delta,
    write_band_csv,
)
from .errors import (
    ConvergenceError,
    DecayViolationError,
    DomainError,
    FitError,
    InvalidSpecError,
)
from .fiber import FiberSpec, eigen_lowest
from .potential import PotentialSpec, effective_potential
from .schrodinger1d import SsfCurve, make_operator, ssf_curve, write_ssf_csv
from .potential import effective_callable

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4
EXIT_VERIFICATION = 5


@dataclasses.dataclass
class RunConfig:
    b: float = 0.0
    L: float = 1.0
    n: int = 2048
    n_k: int = 241
    k_max: float | None = None
    potential: PotentialSpec = dataclasses.field(
        default_factory=lambda: PotentialSpec(alpha=1.5))
    bands: list[int] = dataclasses.field(default_factory=lambda: [1, 2, 3])
    lambda_lo: float = 1e-8
    lambda_hi: float = 3e-7
    n_lambda: int = 12
    epsilon: float = 0.1
    tolerances: ToleranceProfile = dataclasses.field(default_factory=ToleranceProfile)
    gamma: float | None = None
    above_lambda_lo: float | None = None
    above_lambda_hi: float | None = None
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        cfg = cls()
        grid = doc.get("grid", {})
        ssf = doc.get("ssf", {})
        asym = doc.get("asymptotics", {})
        cfg.b = float(doc.get("b", cfg.b))
        cfg.L = float(doc.get("L", cfg.L))
        cfg.n = int(grid.get("n", cfg.n))
        cfg.n_k = int(grid.get("n_k", cfg.n_k))
        if grid.get("k_max") is not None:
            cfg.k_max = float(grid["k_max"])
        if "potential" in doc:
            cfg.potential = PotentialSpec.from_dict(doc["potential"])
        cfg.bands = [int(j) for j in doc.get("bands", cfg.bands)]
        cfg.lambda_lo = float(ssf.get("lambda_lo", cfg.lambda_lo))
        cfg.lambda_hi = float(ssf.get("lambda_hi", cfg.lambda_hi))
        cfg.n_lambda = int(ssf.get("n_lambda", cfg.n_lambda))
        cfg.epsilon = float(ssf.get("epsilon", cfg.epsilon))
        tol_kwargs = {}
        for key in ("exponent_rtol", "constant_rtol", "log_constant_rtol",
                    "flat_slope_tol", "zero_cap"):
            if key in asym:
                tol_kwargs[key] = float(asym[key])
        cfg.tolerances = ToleranceProfile(**tol_kwargs)
        if asym.get("gamma") is not None:
            cfg.gamma = float(asym["gamma"])
        if asym.get("above_lambda_lo") is not None:
            cfg.above_lambda_lo = float(asym["above_lambda_lo"])
        if asym.get("above_lambda_hi") is not None:
            cfg.above_lambda_hi = float(asym["above_lambda_hi"])
        cfg.output_dir = str(doc.get("output_dir", cfg.output_dir))
        return cfg

    def validate(self) -> None:
        if not (self.b >= 0 and math.isfinite(self.b)):
            raise InvalidSpecError(f"b must be nonnegative and finite, got {self.b}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InvalidSpecError(f"L must be positive and finite, got {self.L}")
        if self.n < 3:
            raise InvalidSpecError(f"grid.n must be >= 3, got {self.n}")
        if self.n_k < 5 or self.n_k % 2 == 0:
            raise InvalidSpecError(f"grid.n_k must be odd and >= 5, got {self.n_k}")
        if self.k_max is not None and not (self.k_max > 0):
            raise InvalidSpecError(f"grid.k_max must be positive, got {self.k_max}")
        if not self.bands or any(j < 1 for j in self.bands):
            raise InvalidSpecError(f"bands must be a nonempty list of indices >= 1, got {self.bands}")
        if not (0 < self.lambda_lo < self.lambda_hi):
            raise InvalidSpecError(
                f"ssf.lambda_lo must satisfy 0 < lambda_lo < lambda_hi, got "
                f"lambda_lo={self.lambda_lo}, lambda_hi={self.lambda_hi}")
        if self.n_lambda < 2:
            raise InvalidSpecError(f"ssf.n_lambda must be >= 2, got {self.n_lambda}")
        if not (abs(self.epsilon) < 1):
            raise InvalidSpecError(f"ssf.epsilon must satisfy |epsilon| < 1, got {self.epsilon}")
        if self.above_lambda_lo is not None and self.above_lambda_hi is not None \
                and not (0 < self.above_lambda_lo < self.above_lambda_hi):
            raise InvalidSpecError("asymptotics.above_lambda_lo must be < above_lambda_hi")


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            doc = json.load(fh)
        cfg = RunConfig.from_dict(doc)
    else:
        cfg = RunConfig()
    if getattr(args, "output", None):
        cfg.output_dir = args.output
    if getattr(args, "b", None) is not None:
        cfg.b = args.b
    if getattr(args, "L", None) is not None:
        cfg.L = args.L
    if getattr(args, "band", None) is not None:
        cfg.bands = [args.band]
    if getattr(args, "epsilon", None) is not None:
        cfg.epsilon = args.epsilon
    if getattr(args, "alpha", None) is not None:
        cfg.potential = PotentialSpec(alpha=args.alpha, terms=cfg.potential.terms)
    cfg.validate()
    return cfg


def _ensure_outdir(cfg: RunConfig) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def _write_json(path: str, payload: dict) -> None:
    payload = dict(payload)
    payload["generated_utc"] = datetime.now(timezone.utc).isoformat()
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _effective_grid() -> np.ndarray:
    pos = np.concatenate([[0.0], np.geomspace(1e-2, 1e4, 241)])
    return np.concatenate([-pos[:0:-1], pos])


def cmd_bands(cfg: RunConfig) -> int:
    out = _ensure_outdir(cfg)
    bands = sample_bands(cfg.b, cfg.L, sorted(set(cfg.bands)), k_max=cfg.k_max,
                         n_k=cfg.n_k, n_grid=cfg.n)
    for band in bands:
        write_band_csv(band, os.path.join(out, f"band_{band.j}.csv"))
    with open(os.path.join(out, "thresholds.csv"), "w", newline="\n") as fh:
        fh.write("j,threshold,mu\n")
        for band in bands:
            fh.write(f"{band.j},{band.threshold:.17g},{band.mu:.17g}\n")
    print(f"wrote {len(bands)} band files and thresholds.csv to {out}")
    return EXIT_OK


def cmd_effective(cfg: RunConfig) -> int:
    out = _ensure_outdir(cfg)
    y_grid = _effective_grid()
    m = max(cfg.bands)
    pairs = eigen_lowest(FiberSpec(b=cfg.b, L=cfg.L, k=0.0), n=cfg.n, m=m)
    eps_values = [0.0]
    if cfg.epsilon != 0.0:
        eps_values += [abs(cfg.epsilon), -abs(cfg.epsilon)]
    rows = []
    for j in sorted(set(cfg.bands)):
        psi = pairs[j - 1].psi
        for eps in eps_values:
            ep = effective_potential(cfg.potential, psi, eps, y_grid, cfg.L, j=j)
            tag = f"{eps:+.3f}".replace("+", "p").replace("-", "m").replace(".", "_")
            path = os.path.join(out, f"effective_{j}_eps{tag}.csv")
            with open(path, "w", newline="\n") as fh:
                fh.write("y,w\n")
                for y, wv in zip(ep.grid, ep.values):
                    fh.write(f"{y:.17g},{wv:.17g}\n")
            rows.append((j, eps, ep.omega_minus, ep.omega_plus))
    with open(os.path.join(out, "omega_table.csv"), "w", newline="\n") as fh:
        fh.write("j,epsilon,omega_minus,omega_plus\n")
        for j, eps, om, op_ in rows:
            oms = "" if om is None else f"{om:.17g}"
            ops = "" if op_ is None else f"{op_:.17g}"
            fh.write(f"{j},{eps:.17g},{oms},{ops}\n")
    print(f"wrote effective potential files and omega_table.csv to {out}")
    return EXIT_OK


def cmd_ssf(cfg: RunConfig) -> int:
    out = _ensure_outdir(cfg)
    m = max(cfg.bands)
    pairs = eigen_lowest(FiberSpec(b=cfg.b, L=cfg.L, k=0.0), n=cfg.n, m=m)
    for q in sorted(set(cfg.bands)):
        band = sample_bands(cfg.b, cfg.L, [q], k_max=1.0, n_k=21, n_grid=cfg.n)[0]
        w = effective_callable(cfg.potential, pairs[q - 1].psi, cfg.epsilon, cfg.L)
        op = make_operator(band.mu, w, domain_radius=32.0)
        grid = np.geomspace(cfg.lambda_lo, cfg.lambda_hi, cfg.n_lambda)
        lams = np.concatenate([-grid[::-1], grid])
        curve = ssf_curve(op, lams)
        write_ssf_csv(curve, os.path.join(out, f"ssf_{q}.csv"))
    print(f"wrote SSF curves to {out}")
    return EXIT_OK


def cmd_mourre(cfg: RunConfig, energy: float, delta: float | None) -> int:
    out = _ensure_outdir(cfg)
    bands = sample_bands(cfg.b, cfg.L, sorted(set(cfg.bands)), k_max=cfg.k_max,
                         n_k=cfg.n_k, n_grid=cfg.n)
    if delta is None:
        delta = separation_delta(bands, energy)
    report = mourre_constant(bands, energy, delta)
    payload = {
        "energy": energy,
        "delta": delta,
        "window": list(report.window),
        "n": report.n,
        "per_band_constants": list(report.per_band_constants),
        "mourre_constant": report.mourre_constant,
        "preimages": [list(p) for p in report.preimages],
        "preimages_disjoint": report.preimages_disjoint,
    }
    path = os.path.join(out, "mourre.json")
    _write_json(path, payload)
    print(f"wrote {path}; C = {report.mourre_constant:.12g}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    out = _ensure_outdir(cfg)
    q = min(cfg.bands)
    above = None
    if cfg.above_lambda_lo is not None and cfg.above_lambda_hi is not None:
        above = (cfg.above_lambda_lo, cfg.above_lambda_hi)
    report = verify_corollaries(
        cfg.potential, cfg.b, cfg.L, q=q, n_grid=cfg.n,
        lambda_lo=cfg.lambda_lo, lambda_hi=cfg.lambda_hi,
        n_lambda=cfg.n_lambda, epsilon=cfg.epsilon, gamma=cfg.gamma,
        tolerances=cfg.tolerances, above_window=above)
    payload = report.to_dict()
    curve_paths = {}
    for name, (lams, xis) in report.curves.items():
        curve = SsfCurve(lambda_samples=np.asarray(lams),
                         xi_values=np.asarray(xis), method="phase-shift")
        path = os.path.join(out, f"verify_curve_{name}.csv")
        write_ssf_csv(curve, path)
        curve_paths[name] = path
    payload["curve_files"] = curve_paths
    path = os.path.join(out, "verify_report.json")
    _write_json(path, payload)
    for check in report.checks:
        print(f"[{'PASS' if check.passed else 'FAIL'}] {check.name}: {check.detail}")
    print(f"verdict: {report.verdict}; wrote {path}")
    return EXIT_OK if report.verdict == "pass" else EXIT_VERIFICATION


def cmd_calpha(alpha: float) -> int:
    print(f"{c_alpha(alpha):.12f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magstrip",
        description="Band structure, effective Hamiltonians, and spectral "
                    "shift functions for a magnetic strip operator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--output", help="output directory (overrides config)")
        p.add_argument("--b", type=float, help="magnetic field strength override")
        p.add_argument("--L", type=float, help="strip half-width override")
        p.add_argument("--band", type=int, help="restrict to a single band index")
        p.add_argument("--epsilon", type=float, help="sign-weight deformation override")
        p.add_argument("--alpha", type=float, help="decay exponent override")

    for name, help_text in (
        ("bands", "sample band functions, thresholds, and curvatures"),
        ("effective", "emit effective potentials and their tail limits"),
        ("ssf", "emit spectral shift curves for the effective pairs"),
        ("verify", "run the threshold-asymptotics verification"),
    ):
        p = sub.add_parser(name, help=help_text)
        common(p)

    p = sub.add_parser("mourre", help="separation radius and Mourre constant of a window")
    common(p)
    p.add_argument("--energy", type=float, required=True, help="window centre")
    p.add_argument("--delta", type=float, help="window half-width (default: largest admissible)")

    p = sub.add_parser("calpha", help="print the tail-law constant for a decay exponent")
    p.add_argument("--alpha", type=float, required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "calpha":
            return cmd_calpha(args.alpha)
        try:
            cfg = _load_config(args)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if args.command == "bands":
            return cmd_bands(cfg)
        if args.command == "effective":
            return cmd_effective(cfg)
        if args.command == "ssf":
            return cmd_ssf(cfg)
        if args.command == "mourre":
            return cmd_mourre(cfg, args.energy, args.delta)
        if args.command == "verify":
            return cmd_verify(cfg)
        raise AssertionError(f"unhandled command {args.command}")
    except (InvalidSpecError, DomainError, DecayViolationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, FitError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
