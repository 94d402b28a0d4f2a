#!/usr/bin/env python3
"""Tabulate how the stabilizer-fixed subspace grows with the subtree radius.

For the ball of radius r the orbit count is (q+1)q^(r-1), so the fixed
dimension grows geometrically in r for every fiber dimension d.  This
script sweeps r and d, checks the closed form against the constructive
report, and prints the table (optionally as CSV).
"""

import argparse
import sys

from treerep import tree
from treerep.representation import fixed_space_report


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=int, default=2, help="branching number (valency - 1)")
    ap.add_argument("--max-radius", type=int, default=5)
    ap.add_argument("--dims", type=int, nargs="+", default=[1, 2, 4])
    ap.add_argument("--csv", action="store_true", help="emit CSV instead of a table")
    args = ap.parse_args(argv)

    params = tree.TreeParams(args.q, depth_cap=max(8, args.max_radius + 1))
    rows = []
    for r in range(1, args.max_radius + 1):
        ball = tree.closed_neighborhood(tree.FiniteSubtree(params, [()]), r)
        for d in args.dims:
            rep = fixed_space_report(ball, d)
            closed_form = d * (args.q + 1) * args.q ** (r - 1)
            assert rep.fixed_dim == closed_form, (r, d, rep.fixed_dim)
            rows.append((args.q, r, d, rep.orbit_count, rep.fixed_dim))

    if args.csv:
        print("q,r,d,orbit_count,fixed_dim")
        for row in rows:
            print(",".join(str(x) for x in row))
        return 0

    print(f"fixed-space growth on the ({args.q + 1})-regular tree")
    print(f"{'r':>3} {'d':>3} {'orbits':>8} {'fixed_dim':>10}")
    prev_r = None
    for q, r, d, orbits, dim in rows:
        sep = "" if r == prev_r else "-" * 27 + "\n"
        sys.stdout.write(sep)
        print(f"{r:>3} {d:>3} {orbits:>8} {dim:>10}")
        prev_r = r
    print("-" * 27)
    print("every row matches d*(q+1)*q^(r-1)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
