#!/usr/bin/env python3
"""Selective holding grid: only agent 2 holds its state on the two-cycle delay graph.

For each dimension triple (n1, n2, n3) the lifted system is enumerated
and its verdict is compared with n2 >= n1 + n3 + r. Also prints the holding
cost of selective versus full holding.
"""

from __future__ import annotations

import argparse

from distctl import catalog
from distctl import extend as ex
from distctl import mcsys as ms


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=3, help="largest n1 and n3")
    ap.add_argument("--max-n2", type=int, default=7)
    args = ap.parse_args()

    sys = catalog.selective_holding_system()
    dgraph = catalog.two_cycles_longer_delays()
    r = ms.deficiency_bound(sys)
    print(f"r = {r}, lags d_i = {dgraph.max_delays()}")
    print(f"{'n1':>3} {'n3':>3} | " + " ".join(f"{n2:>2}" for n2 in range(1, args.max_n2 + 1))
          + " | smallest n2  bound  cost(selective/full)")
    mismatches = 0
    for n1 in range(r, args.max_n + 1):
        for n3 in range(r, args.max_n + 1):
            marks, smallest, cost = [], None, None
            for n2 in range(1, args.max_n2 + 1):
                rep = ex.check_selective_holding(sys, dgraph, [n1, n2, n3], [2])
                marks.append(" +" if rep.verdict else " .")
                if rep.verdict and smallest is None:
                    smallest = n2
                    cost = (rep.details["holding_increase"], rep.details["full_holding_increase"])
                mismatches += rep.verdict != (n2 >= n1 + n3 + r)
            print(f"{n1:>3} {n3:>3} | " + " ".join(marks) + f" | {str(smallest):>11}  {n1 + n3 + r:>5}  {cost}")
    print("+ no fixed eigenvalue, . fixed eigenvalue remains")
    print(f"mismatches against n2 >= n1 + n3 + r: {mismatches}")


if __name__ == "__main__":
    main()
