"""Error probability and per-region goodput as functions of the rate.

Run with ``python demos/01_error_curves.py``.  Shows how a finite blocklength
smooths the hard capacity threshold into a Gaussian tail, and how much
goodput each feedback region loses to that tail.
"""

import math

import numpy as np

from fblquant import LOG2E, LinkParams, Rician, omega
from fblquant.fbl import capacity, region_success_curve


def main() -> None:
    gamma = 1.0
    rates_bpcu = np.array([2.0, 3.0, 3.3, 3.46, 3.6, 4.0])
    print(f"error probability at gain {gamma}, P = 10 dB")
    print("rate_bpcu " + " ".join(f"{'n=' + str(n):>10}" for n in (32, 128, 1024, "inf")))
    for rb in rates_bpcu:
        vals = [omega(gamma, rb / LOG2E, LinkParams.from_db(n, 10)) for n in (32, 128, 1024, math.inf)]
        print(f"{rb:9.2f} " + " ".join(f"{v:10.3e}" for v in vals))
    c = capacity(gamma, LinkParams.from_db(128, 10)) * LOG2E
    print(f"capacity at this gain: {c:.4f} bpcu (the n = inf column is a step there)\n")

    ch = Rician(10.0)
    bounds = (0.0, 0.9, 1.2, ch.upper_truncation(1e-12))
    rates = np.linspace(0.01, 4.0, 400) / LOG2E
    print("best goodput of each region of the split 0 | 0.9 | 1.2 | inf (Rician K = 10)")
    for lo, hi in zip(bounds, bounds[1:]):
        row = []
        for n in (128, math.inf):
            good = rates * region_success_curve(lo, hi, rates, ch, LinkParams.from_db(n, 10)) * LOG2E
            k = int(np.argmax(good))
            row.append(f"n={n}: {good[k]:.4f} bpcu at r = {rates[k] * LOG2E:.3f}")
        print(f"  [{lo:.1f}, {min(hi, 99):.1f}]  " + "   ".join(row))


if __name__ == "__main__":
    main()
