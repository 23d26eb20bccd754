"""Trading goodput for reliability.

Run with ``python demos/03_reliability_constraint.py`` (about a minute).
Sweeps the total error budget and reports how far the constrained design
backs off from the unconstrained one, and where no design meets the budget.
"""

from fblquant import LinkParams, Rician, run_algorithm1, run_algorithm2


def main() -> None:
    ch = Rician(10.0)
    for p_db in (10, 20):
        lp = LinkParams.from_db(128, p_db)
        free = {k: run_algorithm1(ch, lp, k)[1].total_goodput_bpcu for k in (2, 4)}
        print(f"n = 128, P = {p_db} dB; unconstrained: " + ", ".join(f"{k} regions {g:.4f}" for k, g in free.items()))
        for eps in (1e-1, 1e-3, 1e-5, 1e-7):
            cells = []
            for k in (2, 4):
                scheme, _, rep, feasible = run_algorithm2(ch, lp, k, eps)
                if feasible:
                    cells.append(f"{k} regions {rep.total_goodput_bpcu:.4f} (backoff {free[k] - rep.total_goodput_bpcu:.3f})")
                else:
                    cells.append(f"{k} regions infeasible")
            print(f"  budget {eps:7.0e}: " + "; ".join(cells))
        print()


if __name__ == "__main__":
    main()
