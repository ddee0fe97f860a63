"""Earth mover's distance between signature weight vectors.

Block weights decode a signature into per-color masses (percent units); the
distance is the optimal transportation cost between two weight vectors under
the palette's Euclidean RGB ground distance, divided by the total shipped
flow W_m = min(sum(w_I), sum(w_J)).
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import emd_cost, solve_balanced
from .errors import InvalidParameterError, ShapeMismatchError
from .signature import BinarySignature, ColorPalette

INFEASIBLE = math.inf


def block_weight(block, m: int) -> float:
    """Sum of (i/m)*100 over set 1-based bit positions i of one block."""
    bits = np.asarray(block, dtype=np.float64).reshape(-1)
    if bits.size != m:
        raise InvalidParameterError(f"block has {bits.size} bits, expected {m}")
    positions = np.arange(1, m + 1, dtype=np.float64)
    return float(bits @ positions) / m * 100.0


def weight_vector(sig: BinarySignature) -> np.ndarray:
    """Per-block decoded weights, shape (n,) float64."""
    scale = np.arange(1, sig.m + 1, dtype=np.float64) / sig.m * 100.0
    return sig.bits().astype(np.float64) @ scale


def weight_extremes(w_i: np.ndarray, w_j: np.ndarray):
    """(W_m, W_M): min and max of the two total weights."""
    ti, tj = float(np.sum(w_i)), float(np.sum(w_j))
    return min(ti, tj), max(ti, tj)


def ground_distance(palette: ColorPalette) -> np.ndarray:
    """Symmetric (n, n) Euclidean RGB distance matrix between palette colors."""
    c = palette.colors
    diff = c[:, None, :] - c[None, :, :]
    return np.sqrt(np.einsum("ijc,ijc->ij", diff, diff))


def _validate_instance(supplies, demands, costs):
    x = np.ascontiguousarray(supplies, dtype=np.float64)
    y = np.ascontiguousarray(demands, dtype=np.float64)
    c = np.ascontiguousarray(costs, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or c.shape != (x.size, y.size):
        raise ShapeMismatchError(
            f"cost matrix {c.shape} does not match supplies {x.size} x demands {y.size}"
        )
    if x.size and x.min() < 0 or y.size and y.min() < 0:
        raise InvalidParameterError("supplies and demands must be non-negative")
    return x, y, c


def _solve_positive(x, y, c):
    """Balanced solve of an all-positive instance, adding a zero-cost slack
    line on the smaller side. Returns the flow over the real cells."""
    a, b = x.size, y.size
    total_x, total_y = float(x.sum()), float(y.sum())
    if total_x > total_y:
        yb = np.empty(b + 1, dtype=np.float64)
        yb[:b] = y
        yb[b] = total_x - total_y
        cb = np.zeros((a, b + 1), dtype=np.float64)
        cb[:, :b] = c
        fb = np.empty((a, b + 1), dtype=np.float64)
        solve_balanced(x, yb, cb, fb)
        return np.ascontiguousarray(fb[:, :b])
    if total_y > total_x:
        xb = np.empty(a + 1, dtype=np.float64)
        xb[:a] = x
        xb[a] = total_y - total_x
        cb = np.zeros((a + 1, b), dtype=np.float64)
        cb[:a, :] = c
        fb = np.empty((a + 1, b), dtype=np.float64)
        solve_balanced(xb, y, cb, fb)
        return np.ascontiguousarray(fb[:a, :])
    fb = np.empty((a, b), dtype=np.float64)
    solve_balanced(x, y, c, fb)
    return fb


def solve_transportation(supplies, demands, costs) -> np.ndarray:
    """Optimal flow matrix for the capacitated transportation problem:
    flow >= 0, row sums <= supplies, column sums <= demands, total shipped
    equal to min(sum supplies, sum demands)."""
    x, y, c = _validate_instance(supplies, demands, costs)
    a, b = x.size, y.size
    if min(float(x.sum()), float(y.sum())) == 0.0:
        return np.zeros((a, b), dtype=np.float64)
    # zero-mass lines carry no flow; solve the reduced positive instance
    ri = np.nonzero(x > 0.0)[0]
    rj = np.nonzero(y > 0.0)[0]
    if ri.size == a and rj.size == b:
        return _solve_positive(x, y, c)
    sub = _solve_positive(
        np.ascontiguousarray(x[ri]),
        np.ascontiguousarray(y[rj]),
        np.ascontiguousarray(c[np.ix_(ri, rj)]),
    )
    flow = np.zeros((a, b), dtype=np.float64)
    flow[np.ix_(ri, rj)] = sub
    return flow


def transportation_cost(supplies, demands, costs) -> float:
    """Optimal objective value of solve_transportation (same solver path)."""
    flow = solve_transportation(supplies, demands, costs)
    return float(np.sum(flow * np.asarray(costs, dtype=np.float64)))


def emd(w_i, w_j, ground) -> float:
    """min cost(F) / W_m over feasible flows; 0 when both vectors are zero
    and INFEASIBLE (+inf) when exactly one side has no mass."""
    x = np.ascontiguousarray(w_i, dtype=np.float64)
    y = np.ascontiguousarray(w_j, dtype=np.float64)
    d = np.ascontiguousarray(ground, dtype=np.float64)
    if x.shape != y.shape or d.shape != (x.size, x.size):
        raise ShapeMismatchError(
            f"weight vectors {x.shape}/{y.shape} and ground matrix {d.shape} disagree"
        )
    if x.size and (x.min() < 0 or y.min() < 0):
        raise InvalidParameterError("weight vectors must be non-negative")
    return float(emd_cost(x, y, d))
