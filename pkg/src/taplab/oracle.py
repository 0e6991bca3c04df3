"""Offline optimal and bounding computations.

* ``opt_awake_given_decisions``: exact awake time of the greedy
  most-work-first schedule for a fixed serial/parallel decision vector
  (which is offline-optimal for those decisions);
* ``opt_awake_exhaustive``: exact optimal awake time by enumerating all
  2^n decision vectors;
* ``grid_opt``: a discretized exhaustive cross-check oracle for tiny
  instances;
* ``opt_trt_lower``: an admissible lower bound on optimal total response
  time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .core import Decision, TAP, TapError
from .rationals import Rat, ZERO, ONE


class InstanceTooLargeError(TapError):
    """The instance exceeds the oracle's configured size bound."""


# --- exact awake time for fixed decisions -----------------------------------

def opt_awake_given_decisions(tap: TAP, decisions: dict) -> Rat:
    """Exact awake time of most-work-first under the given decisions.

    Runs a fluid simulation: the p processors serve the largest remaining
    serial works (equal works share processors and sink together), leftover
    capacity drains the aggregate parallel work.  Awake time is the measure
    of instants with work present; parallel work is aggregated because the
    union of busy intervals does not depend on how leftover capacity is
    split among parallel jobs.
    """
    if tap.has_deps:
        raise TapError("awake oracle requires a plain TAP (no dependencies)")
    p = tap.p
    arrivals = [(t.arrival, t) for t in tap.tasks]
    arrivals.sort(key=lambda x: (x[0], x[1].id))
    idx = 0
    now = ZERO
    awake = ZERO
    groups: list[list] = []  # [value, count], strictly descending values
    par = ZERO  # aggregate parallel remaining

    def add_serial(v: Rat) -> None:
        for g in groups:
            if g[0] == v:
                g[1] += 1
                return
        groups.append([v, 1])
        groups.sort(key=lambda g: g[0], reverse=True)

    while idx < len(arrivals) or groups or par > 0:
        if not groups and par == 0:
            # gap: jump to the next arrival
            now = max(now, arrivals[idx][0])
        while idx < len(arrivals) and arrivals[idx][0] <= now:
            task = arrivals[idx][1]
            if decisions[task.id] is Decision.SERIAL:
                add_serial(task.sigma)
            else:
                par += task.pi
            idx += 1
        if not groups and par == 0:
            continue
        # rates: fill serial groups from the largest value down
        avail = Rat(p)
        rates = []
        for value, count in groups:
            if avail >= count:
                rates.append(ONE)
                avail -= count
            elif avail > 0:
                rates.append(avail / count)
                avail = ZERO
            else:
                rates.append(ZERO)
        par_rate = avail if par > 0 else ZERO
        # next structural change
        dt = None if idx >= len(arrivals) else arrivals[idx][0] - now
        for i, (value, count) in enumerate(groups):
            r = rates[i]
            if r <= 0:
                continue
            nxt = groups[i + 1][0] if i + 1 < len(groups) else ZERO
            r_next = rates[i + 1] if i + 1 < len(groups) else ZERO
            if r > r_next:  # closing on the group below (or on zero)
                cand = (value - nxt) / (r - r_next)
                if dt is None or cand < dt:
                    dt = cand
        if par_rate > 0:
            cand = par / par_rate
            if dt is None or cand < dt:
                dt = cand
        if dt is None or dt <= 0:
            raise TapError("oracle simulation stalled")  # pragma: no cover
        for i, g in enumerate(groups):
            g[0] -= rates[i] * dt
        par -= par_rate * dt
        awake += dt
        now += dt
        # merge equal-value groups, drop empty ones
        merged: list[list] = []
        for value, count in groups:
            if value == 0:
                continue
            if merged and merged[-1][0] == value:
                merged[-1][1] += count
            else:
                merged.append([value, count])
        groups = merged
    return awake


def opt_awake_exhaustive(tap: TAP, bound: int = 20):
    """(optimal awake time, one minimizing decision vector).

    Enumerates all 2^n decision vectors; ties go to the lexicographically
    first vector with Serial < Parallel.
    """
    if tap.n > bound:
        raise InstanceTooLargeError(f"n={tap.n} exceeds oracle bound {bound}")
    ids = [t.id for t in tap.tasks]
    best = None
    best_vec = None
    for vec in itertools.product((Decision.SERIAL, Decision.PARALLEL), repeat=tap.n):
        decisions = dict(zip(ids, vec))
        value = opt_awake_given_decisions(tap, decisions)
        if best is None or value < best:
            best, best_vec = value, decisions
    if best is None:
        return ZERO, {}
    return best, best_vec


# --- discretized exhaustive cross-check -------------------------------------

def _ceil_div(work, grid) -> int:
    q = Rat(work) / Rat(grid)
    return -(-int(q.numerator) // int(q.denominator))


def grid_opt(tap: TAP, objective: str, grid, max_steps: int = 4096) -> Rat:
    """Brute-force optimum over decision vectors and integer processor
    splits at every grid step.

    Upper-bounds the true optimum; exact for Awake whenever the optimum is
    achievable on the grid.  Only dominance pruning is applied: an
    allocation that wastes capacity which some job could absorb is never
    preferable, so only capacity-maximal splits are enumerated.
    """
    if tap.n > 4:
        raise InstanceTooLargeError(f"grid_opt requires n <= 4, got {tap.n}")
    if objective not in ("awake", "trt"):
        raise TapError(f"unknown objective {objective!r}")
    grid = Rat(grid)
    for t in tap.tasks:
        if (Rat(t.arrival) / grid).denominator != 1:
            raise TapError(
                f"task {t.id}: arrival {t.arrival} is not a multiple of grid {grid}"
            )
    total_steps = sum(_ceil_div(t.sigma + t.pi, grid) for t in tap.tasks)
    if total_steps > max_steps:
        raise InstanceTooLargeError(f"work/grid total {total_steps} > {max_steps}")
    p = tap.p
    arr = tuple(int(t.arrival / grid) for t in tap.tasks)
    last_arrival = max(arr, default=0)
    best = None
    for vec in itertools.product((False, True), repeat=tap.n):
        # vec[i] True = Serial; non-aligned works round up to whole steps,
        # which keeps the result an upper bound on the true optimum
        works = tuple(
            _ceil_div(t.sigma if s else t.pi, grid) for t, s in zip(tap.tasks, vec)
        )
        value = _grid_search(p, arr, works, vec, objective, last_arrival)
        if best is None or value < best:
            best = value
    return (best if best is not None else ZERO) * grid


def _grid_search(p, arr, works, serial, objective, last_arrival) -> int:
    """Minimal objective in grid steps, via memoized DFS over steps."""
    n = len(works)
    memo: dict = {}

    def alive_sets(step, rem):
        alive = [i for i in range(n) if arr[i] <= step and rem[i] > 0]
        pending = [i for i in range(n) if arr[i] > step]
        return alive, pending

    def allocations(alive, rem):
        """Capacity-maximal integer splits (serial jobs get 0 or 1)."""
        serial_jobs = [i for i in alive if serial[i]]
        par_jobs = [i for i in alive if not serial[i]]
        out = []
        max_serial = min(len(serial_jobs), p)
        # skipping a serial slot is only ever useful if a parallel job can
        # absorb the processor instead (idling is dominated)
        low = 0 if par_jobs else max_serial
        for k in range(max_serial, low - 1, -1):
            for chosen in itertools.combinations(serial_jobs, k):
                for split in _compositions(p - k, par_jobs, rem):
                    base = {i: 1 for i in chosen}
                    base.update(split)
                    out.append(base)
        return out

    def _compositions(budget, jobs, rem):
        """Integer splits of at most `budget` among `jobs`, each capped by
        its remaining work, wasting capacity only when nothing can absorb it."""
        if not jobs:
            return [{}]
        results = []

        def rec(i, left, acc):
            if i == len(jobs):
                results.append(dict(acc))
                return
            job = jobs[i]
            cap = min(left, rem[job])
            lo = cap if i == len(jobs) - 1 else 0
            # at the last job, take as much as possible (dominance)
            for a in range(cap, lo - 1, -1):
                acc[job] = a
                rec(i + 1, left - a, acc)
                del acc[job]

        rec(0, budget, {})
        return results

    def solve(step, rem):
        alive, pending = alive_sets(step, rem)
        if not alive and not pending:
            return 0
        key = (min(step, last_arrival + 1) if pending else None, rem)
        if key in memo:
            return memo[key]
        if not alive:
            # gap: jump to the next arrival
            nxt = min(arr[i] for i in pending)
            result = solve(nxt, rem)
            memo[key] = result
            return result
        cost_here = 1 if objective == "awake" else len(alive)
        best = None
        for alloc in allocations(alive, rem):
            new_rem = list(rem)
            for i, a in alloc.items():
                new_rem[i] -= a
            value = cost_here + solve(step + 1, tuple(new_rem))
            if best is None or value < best:
                best = value
        memo[key] = best
        return best

    return solve(0, tuple(works))


# --- TRT lower bound --------------------------------------------------------

def opt_trt_lower(tap: TAP) -> Rat:
    """Admissible lower bound on optimal total response time.

    max of (a) the sum of fastest-possible durations min(sigma, pi/p) and
    (b) the exact TRT of preemptive shortest-remaining-first on the relaxed
    instance where every task is perfectly scalable with work sigma and the
    machine has capacity p.
    """
    if tap.has_deps:
        raise TapError("TRT lower bound requires a plain TAP (no dependencies)")
    p = Rat(tap.p)
    lb_a = sum((min(t.sigma, t.pi / p) for t in tap.tasks), ZERO)
    lb_b = _srpt_trt(tap)
    return max(lb_a, lb_b)


def _srpt_trt(tap: TAP) -> Rat:
    """Exact TRT of preemptive SRPT on one speed-p machine with works sigma."""
    p = Rat(tap.p)
    pending = sorted(tap.tasks, key=lambda t: (t.arrival, t.id))
    idx = 0
    now = ZERO
    remaining: dict[int, Rat] = {}
    arrival_of = {t.id: t.arrival for t in tap.tasks}
    trt = ZERO
    while idx < len(pending) or remaining:
        if not remaining:
            now = max(now, pending[idx].arrival)
        while idx < len(pending) and pending[idx].arrival <= now:
            remaining[pending[idx].id] = pending[idx].sigma
            idx += 1
        if not remaining:
            continue
        tid = min(remaining, key=lambda i: (remaining[i], i))
        finish = now + remaining[tid] / p
        nxt = pending[idx].arrival if idx < len(pending) else None
        if nxt is not None and nxt < finish:
            remaining[tid] -= p * (nxt - now)
            if remaining[tid] == 0:
                trt += nxt - arrival_of[tid]
                del remaining[tid]
            now = nxt
        else:
            trt += finish - arrival_of[tid]
            del remaining[tid]
            now = finish
    return trt
