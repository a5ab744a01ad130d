#!/usr/bin/env python3
"""End-to-end threshold-asymptotics runs for the three decay regimes.

Builds the effective pair for the lowest band of the b=0, L=1 strip under
an x-constant perturbation with a pure power tail, then verifies the
applicable threshold law:

    alpha = 3/2  power-law singularity on both sides of the threshold
    alpha = 2    logarithmic singularity below (deep tail)
    alpha = 3    bounded spectral shift on both sides

Writes one report per regime under out/. The alpha = 3/2 run matches
scripts/reference_config_alpha15.json, which the CLI consumes directly:

    magstrip verify --config scripts/reference_config_alpha15.json
"""

import json
import os

from magstrip.asymptotics import ToleranceProfile, verify_corollaries
from magstrip.potential import PotentialSpec, PotentialTerm, XProfile, YProfile


def tail_potential(alpha: float, amplitude: float) -> PotentialSpec:
    return PotentialSpec(alpha=alpha, terms=(
        PotentialTerm(c=amplitude,
                      x_profile=XProfile("constant"),
                      y_profile=YProfile("power_tail", {"exponent": alpha})),
    ))


RUNS = [
    # The averaged tail has an O(1) core offset, so the power-law constants
    # emerge only deep in the threshold regime; the widened constant band
    # accounts for the remaining offset at lambda ~ 1e-8 (see README).
    ("alpha15", tail_potential(1.5, -1.0), dict(
        lambda_lo=1e-8, lambda_hi=3e-7, n_lambda=12, epsilon=0.1,
        above_window=(1e-9, 1e-7),
        tolerances=ToleranceProfile(constant_rtol=0.35))),
    ("alpha2", tail_potential(2.0, -1.0), dict(
        lambda_lo=1e-6, lambda_hi=1e-4, n_lambda=8, epsilon=0.1)),
    ("alpha3", tail_potential(3.0, -6.0), dict(
        lambda_lo=1e-6, lambda_hi=1e-2, n_lambda=9, epsilon=0.1,
        above_window=(1e-6, 1e-2))),
]


def main():
    os.makedirs("out", exist_ok=True)
    for name, pot, kwargs in RUNS:
        report = verify_corollaries(pot, b=0.0, L=1.0, q=1, **kwargs)
        path = os.path.join("out", f"report_{name}.json")
        with open(path, "w", newline="\n") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"{name}: verdict {report.verdict}")
        for check in report.checks:
            print(f"  [{'PASS' if check.passed else 'FAIL'}] {check.name}: {check.detail}")


if __name__ == "__main__":
    main()
