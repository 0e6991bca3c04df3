import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taplab.adversary import GenParams, gen_dtap_levels, gen_random_dtap
from taplab.core import Decision, TAP, Task, TapError, metrics_from_trace
from taplab.dtap import (
    FAIRLY_PARALLEL,
    NOT_VERY_PARALLEL,
    TurtleScheduler,
    dtap_opt_upper_levels,
    turtle_classify,
    turtle_parallel_work_bound,
)
from taplab.engine import simulate, validate_trace
from taplab.rationals import Rat

S, P = Decision.SERIAL, Decision.PARALLEL


def T(tid, sigma, pi, arrival=0, deps=()):
    return Task(tid, Rat(sigma), Rat(pi), Rat(arrival), frozenset(deps))


class TestClassify:
    def test_fairly_parallel(self):
        assert turtle_classify(T(0, 10, 50), 100) == FAIRLY_PARALLEL

    def test_not_very_parallel(self):
        assert turtle_classify(T(0, 10, 200), 100) == NOT_VERY_PARALLEL

    def test_boundary_strict(self):
        # pi/p equal to sigma/sqrt(p) is not fairly parallel
        assert turtle_classify(T(0, 10, 100), 100) == NOT_VERY_PARALLEL


class TestTurtle:
    def test_chain_runs_back_to_back(self):
        tap = TAP(4, (T(0, 1, 2), T(1, 1, 2, deps=(0,)), T(2, 1, 2, deps=(1,))))
        trace = simulate(tap, TurtleScheduler())
        assert metrics_from_trace(trace, tap).awake == 3

    def test_fairly_parallel_preempts_serial(self):
        # task 1 (fairly parallel on p=16) takes the whole machine at its
        # arrival, freezing the serial task until it completes
        tap = TAP(16, (T(0, 4, 64), T(1, 4, 8, arrival=1)))
        trace = simulate(tap, TurtleScheduler())
        assert trace.decisions[1][0] is P
        busy = {
            tid: rates.get(tid)
            for t0, t1, rates in trace.slices
            if t0 == 1
            for tid in rates
        }
        assert busy.get(1) == 16
        assert busy.get(0) in (None, 0)

    def test_cyclic_rejected(self):
        tap = TAP(4, (T(0, 1, 2, deps=(1,)), T(1, 1, 2, deps=(0,))))
        with pytest.raises(Exception, match="cyclic"):
            simulate(tap, TurtleScheduler())

    @given(st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=30, deadline=None)
    def test_random_dtaps_complete_cleanly(self, seed):
        rng = random.Random(seed)
        tap = gen_random_dtap(
            GenParams(
                p=rng.choice([4, 16]),
                n=rng.randrange(1, 8),
                ratio_distribution="uniform",
                arrival_pattern="bursty",
                seed=seed,
            )
        )
        trace = simulate(tap, TurtleScheduler())
        assert validate_trace(trace, tap).ok
        assert set(trace.completions) == {t.id for t in tap.tasks}
        assert turtle_parallel_work_bound(tap)
        # no task progresses before its dependencies finish
        for t in tap.tasks:
            for dep in t.deps:
                assert trace.completions[dep] <= trace.arrivals[t.id]


class TestLevelWitness:
    def test_p16_exact_value(self):
        tap = gen_dtap_levels(16)
        _, awake = dtap_opt_upper_levels(tap)
        assert awake == Rat(7, 4)

    def test_p4_exact_value(self):
        tap = gen_dtap_levels(4)
        _, awake = dtap_opt_upper_levels(tap)
        assert awake == Rat(3, 2)

    @pytest.mark.parametrize("p", [4, 16, 64])
    def test_upper_bound_two(self, p):
        tap = gen_dtap_levels(p, seed=3)
        trace, awake = dtap_opt_upper_levels(tap)
        assert awake <= 2
        assert validate_trace(trace, tap).ok
        assert set(trace.completions) == {t.id for t in tap.tasks}

    def test_rejects_non_level_instance(self):
        tap = TAP(4, (T(0, 1, 2), T(1, 1, 2)))
        with pytest.raises(TapError):
            dtap_opt_upper_levels(tap)

    @pytest.mark.parametrize("p", [16, 64])
    def test_turtle_gap_on_levels(self, p):
        # TURTLE treats every level task as not-very-parallel and pays
        # about sqrt(p) while the witness stays at most 2
        import math

        tap = gen_dtap_levels(p, seed=1)
        trace = simulate(tap, TurtleScheduler())
        awake = metrics_from_trace(trace, tap).awake
        _, upper = dtap_opt_upper_levels(tap)
        s = math.isqrt(p)
        assert Rat(s, 8) * upper <= awake <= 3 * s * upper
