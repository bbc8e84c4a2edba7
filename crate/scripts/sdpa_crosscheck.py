"""Solve a sparse SDPA file with cvxpy and print the optimal objective.

Usage: python3 scripts/sdpa_crosscheck.py problem.dat-s

Solves  max Tr(F0 Y)  s.t.  Tr(F_i Y) = c_i,  Y >= 0 (block diagonal),
which for files written by `qsd export-sdp` equals the optimal success
probability.
"""
import sys

import cvxpy as cp
import numpy as np


def read_sdpa(path):
    with open(path) as fh:
        lines = [l.strip() for l in fh if l.strip() and l[0] not in '"*']
    m = int(lines[0].split()[0])
    nblock = int(lines[1].split()[0])
    sizes = [abs(int(t)) for t in lines[2].replace(",", " ").split()[:nblock]]
    c = np.array([float(t) for t in lines[3].replace(",", " ").split()[:m]])
    mats = [[np.zeros((s, s)) for s in sizes] for _ in range(m + 1)]
    for line in lines[4:]:
        matno, blk, i, j, v = line.split()
        a = mats[int(matno)][int(blk) - 1]
        a[int(i) - 1, int(j) - 1] = a[int(j) - 1, int(i) - 1] = float(v)
    return c, mats, sizes


def main():
    c, mats, sizes = read_sdpa(sys.argv[1])
    ys = [cp.Variable((s, s), symmetric=True) for s in sizes]
    trace = lambda blocks: sum(cp.trace(f @ y) for f, y in zip(blocks, ys))
    constraints = [y >> 0 for y in ys]
    constraints += [trace(mats[i + 1]) == c[i] for i in range(len(c))]
    problem = cp.Problem(cp.Maximize(trace(mats[0])), constraints)
    problem.solve()
    print(f"{problem.value:.9f}")


if __name__ == "__main__":
    main()
