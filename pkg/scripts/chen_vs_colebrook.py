#!/usr/bin/env python3
"""Compare the explicit Chen friction factor against Colebrook-White.

Sweeps a log grid over Reynolds number and relative roughness, solving
the implicit Colebrook equation by bisection at each point, and prints
the largest relative deviation of the explicit correlation.
"""

import argparse
import math

from gasinertia.model import GasParams, PipeGeometry
from gasinertia.physics import friction_factor


def colebrook(re: float, rr: float, tol: float = 1e-14) -> float:
    def g(lam: float) -> float:
        inv = 1.0 / math.sqrt(lam)
        return inv + 2.0 * math.log10(rr / 3.7 + 2.51 * inv / re)

    lo, hi = 1e-6, 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sweep(n_re: int, n_rr: int) -> None:
    gas = GasParams()
    worst = (0.0, 0.0, 0.0)
    print(f"{'Re':>12} {'k/D':>10} {'chen':>12} {'colebrook':>12} {'rel dev':>10}")
    for i in range(n_re):
        re = 4e3 * (1e8 / 4e3) ** (i / (n_re - 1))
        for j in range(n_rr):
            rr = 1e-6 * (0.05 / 1e-6) ** (j / (n_rr - 1))
            geometry = PipeGeometry(1000.0, 1.0, roughness_m=rr)
            mass_flow = re * geometry.area_m2 * gas.dynamic_viscosity_pas / geometry.diameter_m
            lam = friction_factor(mass_flow, geometry, gas)
            ref = colebrook(re, rr)
            dev = abs(lam - ref) / ref
            if dev > worst[0]:
                worst = (dev, re, rr)
            print(f"{re:12.3e} {rr:10.2e} {lam:12.8f} {ref:12.8f} {dev:9.4%}")
    print(f"\nworst deviation {worst[0]:.4%} at Re = {worst[1]:.3e}, k/D = {worst[2]:.2e}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-re", type=int, default=10, help="Reynolds grid points")
    parser.add_argument("--n-rr", type=int, default=10, help="roughness grid points")
    args = parser.parse_args()
    sweep(args.n_re, args.n_rr)
