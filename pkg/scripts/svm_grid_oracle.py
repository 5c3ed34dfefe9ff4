"""Recompute the dense grid-search reference for the linear classifier test.

The acceptance suite checks that the stochastic trainer lands within 1% of
the best objective on a fixed 20-point 2-d problem.  The reference is a
brute-force sweep of (w1, w2, b) over [-5, 5]^3 at step 0.01, evaluated
directly from the objective definition with no shared code.  Takes a few
minutes on one core; the resulting value is frozen in
tests/test_acceptance.py.

Usage: python3 scripts/svm_grid_oracle.py
"""

import time

import numpy as np

C = 1.0


def dataset():
    # Same construction as the acceptance test: two overlapping Gaussian
    # blobs, rounded so the points are exact decimal literals.
    rng = np.random.default_rng(20)
    pos = rng.normal((1.2, 0.8), 0.8, size=(10, 2))
    neg = rng.normal((-0.9, -1.1), 0.8, size=(10, 2))
    x = np.round(np.vstack([pos, neg]), 4)
    y = np.array([1.0] * 10 + [-1.0] * 10)
    return x, y


def main():
    x, y = dataset()
    n = len(y)
    grid = np.round(np.arange(-500, 501) * 0.01, 2)
    yb = y[:, None] * grid[None, :]
    a = y * x[:, 1]
    best = (np.inf, None)
    t0 = time.perf_counter()
    for w1 in grid:
        m = (1.0 - y * x[:, 0] * w1)[:, None] - a[:, None] * grid[None, :]
        hinge = np.maximum(0.0, m[:, :, None] - yb[:, None, :]).sum(axis=0)
        j = (w1 * w1 + grid[:, None] ** 2) / (2.0 * C * n) + hinge / n
        k = int(np.argmin(j))
        if j.flat[k] < best[0]:
            w2, b = grid[k // len(grid)], grid[k % len(grid)]
            best = (float(j.flat[k]), (float(w1), float(w2), float(b)))
    print(f"grid minimum J = {best[0]!r} at (w1, w2, b) = {best[1]}")
    print(f"swept {len(grid) ** 3} candidates in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
