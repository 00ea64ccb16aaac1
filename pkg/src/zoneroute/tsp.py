"""TSP oracle over arbitrary (possibly asymmetric) cost matrices.

Two solvers share the same contract, a depot-rooted :class:`~zoneroute.core.Tour`:

* :func:`solve_exact` is Held-Karp dynamic programming, for small instances.
* :func:`solve_anytime` is nearest-neighbour construction followed by
  iterated local search (or-opt and direction-aware 2-opt) until the budget
  runs out.

The diagonal of a cost matrix is never read except for the degenerate
single-node tour, which costs 0 by convention.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Tour, as_order, check_square
from .exceptions import InvalidInputError, SizeExceededError

EXACT_CAP = 13
FORBIDDEN_FACTOR = 1e9


@dataclass(frozen=True)
class SolveBudget:
    """Budget for one anytime solve.

    When ``max_iter`` is set the solver runs exactly that many
    perturbation rounds and ignores ``deadline``, which makes the result
    a pure function of ``(cost matrix, seed, max_iter)``.
    """

    deadline: float = 30.0
    seed: int = 0
    max_iter: Optional[int] = None

    def __post_init__(self):
        if not self.deadline > 0:
            raise InvalidInputError("deadline must be positive")
        if self.seed < 0:
            raise InvalidInputError("seed must be nonnegative")
        if self.max_iter is not None and self.max_iter < 0:
            raise InvalidInputError("max_iter must be nonnegative")


def forbidden_penalty(c) -> float:
    """Large finite cost used to encode arcs that must not be taken."""
    c = np.asarray(c, dtype=float)
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    return FORBIDDEN_FACTOR * max(scale, 1.0)


def _check_costs(c) -> np.ndarray:
    c = check_square(c)
    off = ~np.eye(c.shape[0], dtype=bool)
    if not np.all(np.isfinite(c[off])):
        raise InvalidInputError("cost matrix entries must be finite; encode forbidden arcs with forbidden_penalty()")
    c = c.copy()
    np.fill_diagonal(c, 0.0)
    return c


def tour_cost(c, tour) -> float:
    """Sum of arc costs along the tour, closing arc included."""
    c = check_square(c)
    order = np.asarray(as_order(tour))
    if len(order) != c.shape[0]:
        raise InvalidInputError(f"tour has {len(order)} nodes but cost matrix is {c.shape[0]}x{c.shape[0]}")
    if len(order) == 1:
        return 0.0
    return float(c[order, np.roll(order, -1)].sum())


def solve_exact(c, max_nodes: int = EXACT_CAP) -> Tour:
    """Minimum-cost circuit by Held-Karp dynamic programming.

    Among optimal circuits the lexicographically smallest order is
    returned. Memory and time grow as ``2**n * n``; instances with more
    than ``max_nodes`` nodes are refused.
    """
    c = _check_costs(c)
    n = c.shape[0]
    if n > max_nodes:
        raise SizeExceededError(f"{n} nodes exceeds the exact solver cap of {max_nodes}; use solve_anytime")
    if n == 1:
        return Tour((0,), 0.0)
    if n == 2:
        return Tour((0, 1), c[0, 1] + c[1, 0])

    k = n - 1
    full = (1 << k) - 1
    sub = c[1:, 1:]
    # g[mask, j]: cheapest way to finish from customer j once `mask` is visited
    g = np.full((1 << k, k), np.inf)
    g[full] = c[1:, 0]
    bits = np.arange(k)
    for mask in range(full - 1, 0, -1):
        rem = bits[((mask >> bits) & 1) == 0]
        vals = sub[:, rem] + g[mask | (1 << rem), rem]
        g[mask] = vals.min(axis=1)

    order = [0]
    cur, mask = 0, 0
    for _ in range(k):
        rem = bits[((mask >> bits) & 1) == 0]
        vals = c[cur, rem + 1] + g[mask | (1 << rem), rem]
        best = vals.min()
        tol = 1e-12 * max(1.0, abs(best))
        pick = int(rem[np.flatnonzero(vals <= best + tol)[0]])
        order.append(pick + 1)
        mask |= 1 << pick
        cur = pick + 1
    return Tour(order, tour_cost(c, order))


def nearest_neighbor(c) -> list:
    """Greedy construction from the depot; ties go to the lowest index."""
    c = _check_costs(c)
    n = c.shape[0]
    unvisited = np.ones(n, dtype=bool)
    unvisited[0] = False
    order = [0]
    cur = 0
    for _ in range(n - 1):
        row = np.where(unvisited, c[cur], np.inf)
        cur = int(np.argmin(row))
        unvisited[cur] = False
        order.append(cur)
    return order


def _best_two_opt(c, t):
    """Best segment reversal of positions ``i..j`` (``1 <= i < j <= n-1``)."""
    n = len(t)
    nxt = np.roll(t, -1)
    fwd = np.concatenate(([0.0], np.cumsum(c[t, nxt])))
    bwd = np.concatenate(([0.0], np.cumsum(c[nxt, t])))
    pos = np.arange(1, n)
    i = pos[:, None]
    j = pos[None, :]
    a, b, e, d = t[i - 1], t[i], t[j], t[(j + 1) % n]
    delta = (c[a, e] + (bwd[j] - bwd[i]) + c[b, d]) - (c[a, b] + (fwd[j] - fwd[i]) + c[e, d])
    delta = np.where(j > i, delta, np.inf)
    flat = int(np.argmin(delta))
    r, s = divmod(flat, n - 1)
    return float(delta[r, s]), (int(pos[r]), int(pos[s]))


def _best_or_opt(c, t, max_len=3):
    """Best forward relocation of a segment of 1..max_len consecutive customers."""
    n = len(t)
    best = (np.inf, None)
    p = np.arange(n)
    x = t[p]
    y = t[(p + 1) % n]
    for length in range(1, min(max_len, n - 2) + 1):
        i = np.arange(1, n - length + 1)
        prev, s0, sl, nx = t[i - 1], t[i], t[i + length - 1], t[(i + length) % n]
        gain = c[prev, s0] + c[sl, nx] - c[prev, nx]
        ins = c[x[None, :], s0[:, None]] + c[sl[:, None], y[None, :]] - c[x, y][None, :]
        delta = ins - gain[:, None]
        # arcs touching the segment (positions i-1 .. i+length-1) are not insertion points
        pp = p[None, :]
        ii = i[:, None]
        invalid = (pp >= ii - 1) & (pp <= ii + length - 1)
        delta = np.where(invalid, np.inf, delta)
        flat = int(np.argmin(delta))
        r, s = divmod(flat, n)
        if delta[r, s] < best[0]:
            best = (float(delta[r, s]), (int(i[r]), length, int(p[s])))
    return best


def _apply_two_opt(t, i, j):
    t = t.copy()
    t[i:j + 1] = t[i:j + 1][::-1]
    return t


def _apply_or_opt(t, i, length, p):
    seg = t[i:i + length]
    rest = np.concatenate((t[:i], t[i + length:]))
    anchor = t[p]
    k = int(np.flatnonzero(rest == anchor)[0])
    return np.concatenate((rest[:k + 1], seg, rest[k + 1:]))


def local_search(c, order, max_moves: int = 100_000):
    """Best-improvement descent over or-opt and 2-opt; returns ``(order, cost)``."""
    c = np.asarray(c, dtype=float)
    t = np.asarray(order, dtype=int)
    n = len(t)
    cost = tour_cost(c, t)
    if n <= 3:
        return t, cost
    for _ in range(max_moves):
        tol = 1e-9 * max(1.0, abs(cost))
        d2, m2 = _best_two_opt(c, t)
        d3, m3 = _best_or_opt(c, t)
        if min(d2, d3) >= -tol:
            break
        cand = _apply_two_opt(t, *m2) if d2 <= d3 else _apply_or_opt(t, *m3)
        new_cost = tour_cost(c, cand)
        # guard against round-off in the prefix-sum deltas
        if new_cost >= cost - tol:
            break
        t, cost = cand, new_cost
    return t, cost


def _perturb(t, rng):
    """Double-bridge kick on the customer part of the tour."""
    body = t[1:].copy()
    m = len(body)
    if m < 4:
        rng.shuffle(body)
        return np.concatenate(([0], body))
    a, b, d = np.sort(rng.choice(np.arange(1, m), size=3, replace=False))
    body = np.concatenate((body[:a], body[b:d], body[a:b], body[d:]))
    return np.concatenate(([0], body))


def solve_anytime(c, budget: SolveBudget = SolveBudget(), callback: Optional[Callable] = None,
                  restart_every: int = 25) -> Tour:
    """Iterated local search from a nearest-neighbour start.

    ``callback(cost, order)`` fires each time the incumbent improves,
    starting with the nearest-neighbour tour, so reported costs are
    non-increasing. After ``restart_every`` rounds without improvement
    the search restarts from a random permutation.
    """
    c = _check_costs(c)
    n = c.shape[0]
    if n < 2:
        raise InvalidInputError("solve_anytime needs at least 2 nodes; use solve_exact for n=1")
    if n == 2:
        tour = Tour((0, 1), c[0, 1] + c[1, 0])
        if callback is not None:
            callback(tour.cost, tour.order)
        return tour
    if n == 3:
        a, b = (0, 1, 2), (0, 2, 1)
        ca, cb = tour_cost(c, a), tour_cost(c, b)
        tour = Tour(a, ca) if ca <= cb else Tour(b, cb)
        if callback is not None:
            callback(tour.cost, tour.order)
        return tour

    start = time.monotonic()

    def out_of_budget(rounds):
        if budget.max_iter is not None:
            return rounds >= budget.max_iter
        return time.monotonic() - start >= budget.deadline

    rng = np.random.default_rng(budget.seed)
    nn = np.array(nearest_neighbor(c))
    best_cost = tour_cost(c, nn)
    best = nn
    if callback is not None:
        callback(best_cost, tuple(int(v) for v in best))

    cur, cur_cost = local_search(c, nn)
    if cur_cost < best_cost:
        best, best_cost = cur, cur_cost
        if callback is not None:
            callback(best_cost, tuple(int(v) for v in best))

    rounds = 0
    stale = 0
    while not out_of_budget(rounds):
        rounds += 1
        restart = stale >= restart_every
        if restart:
            kick = np.concatenate(([0], rng.permutation(np.arange(1, n))))
        else:
            kick = _perturb(cur, rng)
        cand, cand_cost = local_search(c, kick)
        if restart or cand_cost < cur_cost - 1e-12 * max(1.0, abs(cur_cost)):
            cur, cur_cost = cand, cand_cost
            stale = 0
        else:
            stale += 1
        if cur_cost < best_cost - 1e-12 * max(1.0, abs(best_cost)):
            best, best_cost = cur, cur_cost
            if callback is not None:
                callback(best_cost, tuple(int(v) for v in best))
    return Tour(best, best_cost)


def solve(c, budget: SolveBudget = SolveBudget(), exact_cap: int = EXACT_CAP) -> Tour:
    """Exact for instances up to ``exact_cap`` nodes, anytime otherwise."""
    n = check_square(c).shape[0]
    if n <= exact_cap:
        return solve_exact(c, max_nodes=exact_cap)
    return solve_anytime(c, budget)
