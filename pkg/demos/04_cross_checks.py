"""Checking the optimizers against brute force and simulation.

Run with ``python demos/04_cross_checks.py`` (about a minute).  The grid
oracle searches boundaries exhaustively; the Monte-Carlo simulator draws
channel gains and packet outcomes directly.
"""

from fblquant import GridSpec, LinkParams, McSpec, Rician, grid_search, monte_carlo_goodput, run_algorithm2
from fblquant.fbl import LOG2E


def main() -> None:
    ch, lp = Rician(10.0), LinkParams.from_db(128, 10)
    scheme, _, rep, feasible = run_algorithm2(ch, lp, 2, 1e-3)
    grid = grid_search(ch, lp, 2, GridSpec(boundary_grid=40), eps_m=1e-3)
    print("two regions, budget 1e-3")
    print(f"  optimizer {rep.total_goodput_bpcu:.6f} bpcu, grid {grid.goodput * LOG2E:.6f} bpcu")
    mc = monte_carlo_goodput(scheme, ch, lp, McSpec(10**6, seed=1))
    print(f"  simulated {mc.goodput * LOG2E:.6f} +- {mc.std_error * LOG2E:.6f} bpcu, "
          f"error rate {mc.cep:.2e} +- {mc.cep_std_error:.1e} (quadrature {rep.total_cep:.2e})")


if __name__ == "__main__":
    main()
