"""Designing a feedback quantizer without a reliability target.

Run with ``python demos/02_unconstrained_design.py``.  Follows the
alternating rate/boundary optimizer from a poor starting split, then
compares the designed schemes against the baselines.
"""

import math

from fblquant import (
    LinkParams,
    Rayleigh,
    Rician,
    asymptotic_quantizer,
    ergodic_capacity,
    optimal_rate,
    run_algorithm1,
)
from fblquant.fbl import LOG2E


def trace_demo() -> None:
    ch, lp = Rician(10.0), LinkParams.from_db(128, 10)
    scheme, rep = run_algorithm1(ch, lp, 3, init_boundaries=[5.0, 10.0])
    print("three regions, Rician K = 10, n = 128, P = 10 dB, start 0 | 5 | 10 | inf")
    for k in (0, 1, 2, 5, 10, 20, 40, len(rep.trace) - 1):
        t = rep.trace[k]
        b = ", ".join(f"{x:.3f}" for x in t.boundaries[1:-1])
        print(f"  iteration {k + 1:3d}: goodput {t.goodput * LOG2E:.6f} bpcu, error mass {t.cep:.2e}, inner edges {b}")
    print(f"  converged after {rep.iterations} iterations: {rep.total_goodput_bpcu:.6f} bpcu\n")


def baseline_table() -> None:
    print("goodput (bpcu) at P = 10 dB")
    print(f"{'channel':9} {'n':>5} {'1 region':>9} {'2':>9} {'4':>9} {'asym 4':>9} {'ergodic':>9}")
    lp_inf = LinkParams.from_db(math.inf, 10)
    for ch in (Rayleigh(), Rician(10.0)):
        asym = asymptotic_quantizer(ch, lp_inf, 4).goodput * LOG2E
        erg = ergodic_capacity(ch, lp_inf) * LOG2E
        for n in (32, 128):
            lp = LinkParams.from_db(n, 10)
            one = optimal_rate(0.0, ch.upper_truncation(1e-12), ch, lp).goodput * LOG2E
            two, four = (run_algorithm1(ch, lp, k)[1].total_goodput_bpcu for k in (2, 4))
            print(f"{ch.name:9} {n:5d} {one:9.4f} {two:9.4f} {four:9.4f} {asym:9.4f} {erg:9.4f}")


if __name__ == "__main__":
    trace_demo()
    baseline_table()
