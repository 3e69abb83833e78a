"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the package's optimized code paths:
pair maxima by double loop, the continuous modulus by dense grid search,
conditional sums by direct chain stepping.
"""

from __future__ import annotations

import numpy as np
import pytest

from hwip.holder import PolygonalPath
from hwip.models import RenewalChainSpec

#: One line per acceptance criterion, echoed after the run (see the
#: pytest_terminal_summary hook below).
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def brute_force_pair_max(partial_sums, alpha, max_lag=None):
    """Exhaustive enumeration of |S_j - S_i| / (j - i)^alpha."""
    s = np.asarray(partial_sums, dtype=float)
    n = s.size - 1
    max_lag = n if max_lag is None else min(max_lag, n)
    best = 0.0
    for i in range(n):
        for j in range(i + 1, min(i + max_lag, n) + 1):
            best = max(best, abs(s[j] - s[i]) / (j - i) ** alpha)
    return best


def grid_modulus(path: PolygonalPath, alpha: float, per_step: int = 8, window_steps=None):
    """Dense-grid search for the continuous alpha-modulus in step-time units.

    Evaluates the interpolant at resolution 1/per_step of a mesh step and
    maximizes |w(u) - w(v)| / |u - v|^alpha over grid pairs with
    |u - v| <= window_steps.  A superset of the vertex pairs, so always
    >= the vertex statistic.
    """
    n = path.n
    grid_t = np.arange(n * per_step + 1) / (n * per_step)
    w = path.evaluate(grid_t)
    max_lag = n * per_step if window_steps is None else int(round(window_steps * per_step))
    best = 0.0
    for lag in range(1, max_lag + 1):
        du = lag / per_step
        best = max(best, float(np.max(np.abs(w[lag:] - w[:-lag]))) / du ** alpha)
    return best


def mc_conditional_sums(
    spec: RenewalChainSpec, start: int, n: int, replicates: int, rng: np.random.Generator
):
    """Direct chain stepping: E[S_k | Y_0 = start] estimates for k = 1..n
    with standard errors; independent of the regeneration sampler."""
    y = np.full(replicates, start, dtype=np.int64)
    sums = np.zeros((replicates, n))
    jumps = spec.tau_values - 1
    probs = spec.tau_probs
    acc = np.zeros(replicates)
    for t in range(n):
        at_zero = y == 0
        k = int(at_zero.sum())
        if k:
            y[at_zero] = rng.choice(jumps, size=k, p=probs)
        y[~at_zero] -= 1
        acc += (y == 0).astype(float) - spec.pi0
        sums[:, t] = acc
    means = sums.mean(axis=0)
    stderr = sums.std(axis=0, ddof=1) / np.sqrt(replicates)
    return means, stderr


@pytest.fixture(scope="session")
def chain_spec():
    from hwip.models import build_renewal_chain

    return build_renewal_chain(3.0, 4)
