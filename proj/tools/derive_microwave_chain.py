#!/usr/bin/env python3
"""Reconstructs the bundled microwave transition matrix from its defining constraints.

The matrix shipped in src/trace_sim.cpp (microwave_domain) is not arbitrary; it is
the unique solution of a small constrained system over the five canonical states

    0: idle            (fork out, microwave off)
    1: fork inside     (microwave off)
    2: toggled on      (fork out)
    3: unsafe          (fork inside while toggled on)
    4: finished        (terminal, absorbing)

subject to:

  1. reach(unsafe) from idle        = 1/25  (0.04)
  2. reach(unsafe) from fork-inside = 17/50 (0.34)
  3. P[idle][toggled]               = 31/184
  4. the toggled row has no outgoing mass to unsafe and no path back to the
     transient states (inserting a fork while the microwave runs is excluded
     by the domain's transition rule), so reach(unsafe | toggled) = 0
  5. every row is stochastic; unsafe ends the run (all mass to finished)

Free choices are row 2's split (2/5 stay, 3/5 finish), row 1's split
(1/5 back to idle, 3/10 stay, 23/100 to unsafe, 27/100 finish) and row 0's
self-loop of 1/2.  Constraint 2 then pins row 1 exactly, and constraint 1
forces the idle -> fork-inside entry a to satisfy

    (1/2) * x0 = a * x1   =>   1/50 = a * 17/50   =>   a = 1/17.

This script re-derives the matrix with exact rational arithmetic, verifies the
reachability constraints by solving the linear system, and prints the rows.
Run it whenever the bundled chain is touched; it exits nonzero on any drift.
"""

from fractions import Fraction as F
import sys


def solve_linear(a, b):
    """Gaussian elimination with exact rationals: solve a x = b."""
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[pivot] = m[pivot], m[col]
        inv = F(1) / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [v - factor * w for v, w in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def reach_unsafe(rows):
    """Exact reach-to-state-3 probabilities for transient states {0, 1, 2}."""
    transient = [0, 1, 2]
    a = [[(F(1) if i == j else F(0)) - rows[i][j] for j in transient] for i in transient]
    b = [rows[i][3] for i in transient]
    return solve_linear(a, b)


def main():
    x0_target = F(1, 25)
    x1_target = F(17, 50)
    idle_to_toggled = F(31, 184)

    # Free structural choices (documented above).
    row2 = [F(0), F(0), F(2, 5), F(0), F(3, 5)]
    row3 = [F(0), F(0), F(0), F(0), F(1)]
    row4 = [F(0), F(0), F(0), F(0), F(1)]
    r10, r11, r13 = F(1, 5), F(3, 10), F(23, 100)
    row1 = [r10, r11, F(0), r13, F(1) - r10 - r11 - r13]
    self0 = F(1, 2)

    # Constraint 2 check: x1 = r10*x0 + r11*x1 + r13 with x0 = x0_target.
    x1 = (r10 * x0_target + r13) / (F(1) - r11)
    assert x1 == x1_target, f"row 1 does not give reach {x1_target}: got {x1}"

    # Constraint 1 pins the idle -> fork-inside entry.
    a = (F(1) - self0) * x0_target / x1_target
    assert a == F(1, 17), f"expected idle->fork mass 1/17, got {a}"

    row0 = [self0, a, idle_to_toggled, F(0), F(1) - self0 - a - idle_to_toggled]
    rows = [row0, row1, row2, row3, row4]

    for i, row in enumerate(rows):
        assert sum(row) == 1 and all(v >= 0 for v in row), f"row {i} not stochastic: {row}"

    x = reach_unsafe(rows)
    assert x == [x0_target, x1_target, F(0)], f"reach mismatch: {x}"

    print("exact rows (fractions):")
    for i, row in enumerate(rows):
        print(f"  {i}: [" + ", ".join(str(v) for v in row) + "]")
    print("rows as doubles (as bundled in microwave_domain):")
    for i, row in enumerate(rows):
        print(f"  {i}: [" + ", ".join(repr(float(v)) for v in row) + "]")
    print(f"reach(unsafe) = [{float(x[0])}, {float(x[1])}, {float(x[2])}, 1.0, 0.0]")
    print("all constraints hold")
    return 0


if __name__ == "__main__":
    sys.exit(main())
