"""Small, slow, independent checkers used to validate the fast paths.

Everything here recomputes from first principles (explicit loops,
math.log2) instead of calling the modules under test, so a shared bug
cannot hide.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

_ENUM_LIMIT = 2_000_000


@dataclass
class OracleReport:
    case: str
    oracle_value: float
    artifact_value: float
    tolerance: float

    @property
    def deviation(self) -> float:
        return abs(self.oracle_value - self.artifact_value)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


def write_reports_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# schema=1\n")
        writer = csv.writer(fh)
        writer.writerow(["case", "oracle_value", "artifact_value",
                         "deviation", "tolerance", "passed"])
        for r in reports:
            writer.writerow([r.case, f"{r.oracle_value:.12g}",
                             f"{r.artifact_value:.12g}",
                             f"{r.deviation:.12g}", f"{r.tolerance:.12g}",
                             "pass" if r.passed else "fail"])


def brute_force_schedule(rates: np.ndarray):
    """Exhaustively enumerate per-slot assignments (including idle slots).

    Returns (best binary schedule, best mean rate).  Guarded to
    (R+1)^N <= 2e6 combinations.
    """
    rates = np.asarray(rates, dtype=float)
    r_count, n = rates.shape
    combos = (r_count + 1) ** n
    if combos > _ENUM_LIMIT:
        raise ValueError(f"enumeration too large: {combos} combinations")
    best_val = -math.inf
    best_choice = None
    for choice in itertools.product(range(-1, r_count), repeat=n):
        total = 0.0
        for slot, user in enumerate(choice):
            if user >= 0:
                total += float(rates[user, slot])
        val = total / n
        if val > best_val + 1e-15:
            best_val = val
            best_choice = choice
    sched = np.zeros((r_count, n))
    for slot, user in enumerate(best_choice):
        if user >= 0:
            sched[user, slot] = 1.0
    return sched, best_val


def grid_search_power(weights, snr, tx_max: float, tx_ave: float,
                      caps, step: float = 1e-3):
    """Best per-slot powers on a uniform grid, for up to three slots.

    weights[n] and snr[n] define the separable objective
    sum_n weights[n] * log2(1 + snr[n] * P[n]); caps[n] is the per-slot
    upper bound (box and interference folded together).  The average
    constraint mean(P) <= tx_ave prunes the grid; because the objective
    is nondecreasing in each coordinate, the last coordinate is snapped
    to the largest feasible grid point instead of being enumerated.
    """
    weights = [float(w) for w in np.atleast_1d(weights)]
    snr = [float(s) for s in np.atleast_1d(snr)]
    caps = [min(float(cb), tx_max) for cb in np.atleast_1d(caps)]
    n = len(weights)
    if n < 1 or n > 3:
        raise ValueError("grid oracle supports 1..3 slots")
    budget = n * tx_ave

    def term(j, p):
        return weights[j] * math.log2(1.0 + snr[j] * p)

    def snap_down(limit):
        if limit < 0.0:
            return None
        return math.floor(limit / step + 1e-9) * step

    best_val = -math.inf
    best_p = None
    if n == 1:
        p = snap_down(min(caps[0], budget))
        return np.array([p]), term(0, p)

    grid0 = [i * step for i in range(int(math.floor(caps[0] / step + 1e-9)) + 1)]
    if n == 2:
        for p0 in grid0:
            p1 = snap_down(min(caps[1], budget - p0))
            if p1 is None:
                continue
            val = term(0, p0) + term(1, p1)
            if val > best_val + 1e-15:
                best_val, best_p = val, (p0, p1)
    else:
        grid1 = [i * step for i in
                 range(int(math.floor(caps[1] / step + 1e-9)) + 1)]
        for p0 in grid0:
            rem0 = budget - p0
            if rem0 < -1e-12:
                break
            for p1 in grid1:
                p2 = snap_down(min(caps[2], rem0 - p1))
                if p2 is None:
                    continue
                val = term(0, p0) + term(1, p1) + term(2, p2)
                if val > best_val + 1e-15:
                    best_val, best_p = val, (p0, p1, p2)
    if best_p is None:
        raise ValueError("grid search found no feasible point")
    return np.array(best_p), best_val


def finite_difference_gradient(func, point, h: float | None = None):
    """Central differences, one coordinate at a time."""
    point = np.asarray(point, dtype=float)
    grad = np.zeros_like(point)
    for i in range(point.size):
        hi = h if h is not None else 1e-6 * max(1.0, abs(point[i]))
        hi = min(max(hi, 1e-8), 1e-3)
        up = point.copy()
        dn = point.copy()
        up[i] += hi
        dn[i] -= hi
        grad[i] = (func(up) - func(dn)) / (2.0 * hi)
    return grad


def finite_difference_check(func, analytic_grad, point,
                            h: float | None = None) -> float:
    """Relative deviation between analytic and central-difference
    gradients at ``point``."""
    point = np.asarray(point, dtype=float)
    numeric = finite_difference_gradient(func, point, h)
    if callable(analytic_grad):
        analytic_grad = analytic_grad(point)
    analytic = np.asarray(analytic_grad, dtype=float)
    scale = max(1.0, float(np.max(np.abs(analytic))),
                float(np.max(np.abs(numeric))))
    return float(np.max(np.abs(numeric - analytic))) / scale


def finite_difference_hessian(func, point, h: float = 1e-4):
    """Symmetric second differences; adequate for 1e-4-level checks."""
    point = np.asarray(point, dtype=float)
    n = point.size
    hess = np.zeros((n, n))
    f0 = func(point)
    steps = np.array([min(max(h * max(1.0, abs(point[i])), 1e-8), 1e-3)
                      for i in range(n)])
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        hess[i, i] = (func(point + ei) - 2.0 * f0 + func(point - ei)) / steps[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = steps[j]
            hess[i, j] = (func(point + ei + ej) - func(point + ei - ej)
                          - func(point - ei + ej) + func(point - ei - ej)) \
                / (4.0 * steps[i] * steps[j])
            hess[j, i] = hess[i, j]
    return hess
