import pytest
from hypothesis import given, settings

from taplab.core import Decision, TAP, Task, metrics_from_trace, round_pow2
from taplab.engine import EngineConfig, simulate, validate_trace
from taplab.adversary import gen_c_trigger
from taplab.rationals import Rat, ZERO, ONE
from taplab.sched_mrt import (
    BScheduler,
    CancScheduler,
    CScheduler,
    EquiScheduler,
    RelaxedJob,
    RigidScheduler,
    SssScheduler,
    equi_alloc,
    relaxed_rate,
)

from conftest import small_taps

S, P = Decision.SERIAL, Decision.PARALLEL


def T(tid, sigma, pi, arrival=0):
    return Task(tid, Rat(sigma), Rat(pi), Rat(arrival))


def _cfg(tap, factor, cancel=False):
    return EngineConfig(
        processor_budget=Rat(factor * tap.p), allow_cancel=cancel
    )


def _coalesce(slices):
    """Merge adjacent slices with identical rates (schedulers may insert
    extra event boundaries without changing the allocation function)."""
    out = []
    for t0, t1, rates in slices:
        rates = {tid: r for tid, r in rates.items() if r > 0}
        if out and out[-1][1] == t0 and out[-1][2] == rates:
            out[-1] = (out[-1][0], t1, rates)
        else:
            out.append((t0, t1, rates))
    return out


class TestEquiAlloc:
    def test_even_split(self):
        assert equi_alloc([0, 1], Rat(4), False) == {0: Rat(2), 1: Rat(2)}

    def test_oversubscribed(self):
        alloc = equi_alloc(list(range(8)), Rat(4), False)
        assert all(r == Rat(1, 2) for r in alloc.values())

    def test_serial_cap_no_redistribution(self):
        assert equi_alloc([0, 1], Rat(4), True) == {0: ONE, 1: ONE}

    def test_empty(self):
        assert equi_alloc([], Rat(4), False) == {}


class TestRelaxedRate:
    def test_below_threshold(self):
        job = RelaxedJob(0, Rat(2), Rat(4), ZERO)
        assert relaxed_rate(job, Rat(2)) == 1

    def test_at_threshold(self):
        job = RelaxedJob(0, Rat(2), Rat(4), ZERO)
        assert relaxed_rate(job, Rat(4)) == 1

    def test_above_threshold(self):
        job = RelaxedJob(0, Rat(2), Rat(4), ZERO)
        assert relaxed_rate(job, Rat(8)) == 2

    def test_zero(self):
        job = RelaxedJob(0, Rat(2), Rat(4), ZERO)
        assert relaxed_rate(job, ZERO) == 0


class TestEqui:
    def test_even_split_two_tasks(self):
        tap = TAP(4, (T(0, 1, 4), T(1, 1, 4)))
        trace = simulate(tap, EquiScheduler())
        assert trace.completions == {0: Rat(2), 1: Rat(2)}

    def test_rigid_is_nonpreemptive_fcfs(self):
        tap = TAP(4, (T(0, 1, 4), T(1, 1, 4)))
        trace = simulate(tap, RigidScheduler())
        assert sorted(trace.completions.values()) == [1, 2]


class TestSss:
    def test_pure_silly(self):
        # p-1 simultaneous unit jobs: one processor each, never serious
        tap = TAP(4, tuple(T(i, 1, 4) for i in range(3)))
        trace = simulate(tap, SssScheduler(), _cfg(tap, 2))
        m = metrics_from_trace(trace, tap)
        assert m.trt == 3
        assert "sss_modes" not in trace.aux

    def test_all_scary_serious(self):
        tap = TAP(4, tuple(T(i, 1, 4) for i in range(4)))
        trace = simulate(tap, SssScheduler(), _cfg(tap, 2))
        assert (ZERO, "serious") in trace.aux["sss_modes"]
        # serial-capped EQUI on the second pool: all done at 1
        assert all(c == 1 for c in trace.completions.values())

    def test_empty(self):
        tap = TAP(4, ())
        trace = simulate(tap, SssScheduler(), _cfg(tap, 2))
        assert trace.slices == []

    @given(small_taps(max_n=8))
    @settings(max_examples=25, deadline=None)
    def test_validates_and_completes(self, tap):
        trace = simulate(tap, SssScheduler(), _cfg(tap, 2))
        assert validate_trace(trace, tap, _cfg(tap, 2)).ok
        assert set(trace.completions) == {t.id for t in tap.tasks}


class TestCanc:
    def test_lone_parallel_task(self):
        tap = TAP(4, (T(0, 1, 4),))
        trace = simulate(tap, CancScheduler(), _cfg(tap, 2, cancel=True))
        assert trace.completions[0] == 1
        assert trace.cancellations == []

    def test_crowd_all_cancelled(self):
        tap = TAP(4, tuple(T(i, 1, 4) for i in range(5)))
        trace = simulate(tap, CancScheduler(), _cfg(tap, 2, cancel=True))
        assert [t for _, t in trace.cancellations] == [ONE] * 5
        assert all(c == Rat(9, 4) for c in trace.completions.values())

    def test_empty(self):
        tap = TAP(4, ())
        trace = simulate(tap, CancScheduler(), _cfg(tap, 2, cancel=True))
        assert trace.slices == []

    @given(small_taps(max_n=6, pow2=True))
    @settings(max_examples=25, deadline=None)
    def test_completes_everything(self, tap):
        cfg = _cfg(tap, 2, cancel=True)
        trace = simulate(tap, CancScheduler(), cfg)
        assert validate_trace(trace, tap, cfg).ok
        assert set(trace.completions) == {t.id for t in tap.tasks}
        # a task stays in the parallel pool for at most its serial work
        sigma = {t.id: t.sigma for t in tap.tasks}
        for tid, age in trace.aux.get("canc_pool_ages", []):
            assert age <= sigma[tid]


class TestB:
    def test_distinct_types_match_canc(self):
        tap = TAP(8, (T(0, 1, 2), T(1, 1, 4), T(2, 2, 8)))
        cfg = _cfg(tap, 2, cancel=True)
        canc = simulate(tap, CancScheduler(), cfg)
        b = simulate(tap, BScheduler(), cfg)
        assert b.completions == canc.completions
        assert b.cancellations == canc.cancellations
        assert _coalesce(b.slices) == _coalesce(canc.slices)

    def test_same_type_pair_serialized(self):
        tap = TAP(4, (T(0, 1, 4), T(1, 1, 4)))
        trace = simulate(tap, BScheduler(), _cfg(tap, 2, cancel=True))
        assert sorted(trace.completions.values()) == [1, 2]

    @given(small_taps(max_n=6, pow2=True))
    @settings(max_examples=25, deadline=None)
    def test_one_parallel_per_type_and_fast(self, tap):
        tap = round_pow2(tap)
        cfg = _cfg(tap, 2, cancel=True)
        trace = simulate(tap, BScheduler(), cfg)
        assert validate_trace(trace, tap, cfg).ok
        by_id = {t.id: t for t in tap.tasks}

        def ttype(t):
            return (t.sigma, t.pi)

        for t0, t1, rates in trace.slices:
            types = [
                ttype(by_id[tid])
                for tid, r in rates.items()
                if r > 0 and trace.decisions[tid][0] is P and tid in by_id
            ]
            assert len(types) == len(set(types))
        cancelled = {tid for tid, _ in trace.cancellations}
        for tid, done in trace.completions.items():
            if tid in by_id and tid not in cancelled:
                if trace.decisions[tid][0] is P:
                    assert done - by_id[tid].arrival <= by_id[tid].sigma


class TestC:
    def test_quiet_instance_no_modes(self):
        tap = TAP(8, (T(0, 1, 2), T(1, 2, 8)))
        cfg = _cfg(tap, 4)
        trace = simulate(tap, CScheduler(), cfg)
        assert trace.cancellations == []
        assert trace.aux["c_modes"] == []
        assert set(trace.completions) == {0, 1}

    def test_crafted_ballistic_episode(self):
        tap = gen_c_trigger(8, Rat(2), with_candidate=False)
        cfg = _cfg(tap, 4)
        trace = simulate(tap, CScheduler(), cfg)
        records = trace.aux["c_modes"]
        ballistic = [r for r in records if r.mode == "ballistic"]
        assert ballistic
        sigma = {t.id: t.sigma for t in tap.tasks}
        for r in ballistic:
            assert r.exited is not None
            assert r.exited - r.entered <= 2 * sigma[r.task_id]
        assert trace.cancellations == []

    def test_crafted_semi_ballistic(self):
        tap = gen_c_trigger(8, Rat(2), with_candidate=True)
        cfg = _cfg(tap, 4)
        trace = simulate(tap, CScheduler(), cfg)
        records = trace.aux["c_modes"]
        assert any(r.mode == "semi-ballistic" for r in records)
        semis = [r for r in records if r.mode == "semi-ballistic"]
        for r in semis:
            assert trace.decisions[r.task_id][0] is S
        assert trace.cancellations == []

    @given(small_taps(max_n=6, pow2=True))
    @settings(max_examples=20, deadline=None)
    def test_never_cancels_and_completes(self, tap):
        tap = round_pow2(tap)
        cfg = _cfg(tap, 4)
        trace = simulate(tap, CScheduler(), cfg)
        assert validate_trace(trace, tap, cfg).ok
        assert trace.cancellations == []
        assert set(trace.completions) == {t.id for t in tap.tasks}
