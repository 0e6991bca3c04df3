"""Deterministic fluid event-driven simulator.

Between events the allocation is piecewise constant; remaining works
decrease at exact rational rates, so completion instants are exact and
simultaneous events are resolved by a fixed tie order
(Completion < Arrival < Timer < AdversaryInjection, then ascending id).

The engine supports incremental advancement (``advance_to``) so that a
scheduler may drive a nested inner simulation in lockstep with the outer
clock; the non-cancelling MRT scheduler relies on this.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .core import Decision, TAP, Task, TapError
from .rationals import Rat, ZERO, ONE

# Event-kind tie order.
_COMPLETION, _ARRIVAL, _TIMER, _INJECTION = 0, 1, 2, 3

_PENDING, _ARRIVED, _RUNNING, _DONE = "pending", "arrived", "running", "done"


class FeasibilityError(TapError):
    """The scheduler returned an infeasible allocation."""


class ContractError(TapError):
    """A scheduler command violated the engine contract."""


class RunawayError(TapError):
    """Event count exceeded the configured bound, or no progress is possible."""


class ObliviousnessError(TapError):
    """A parallel-work-oblivious scheduler tried to read a hidden pi."""


@dataclass
class EngineConfig:
    speed: Rat = ONE
    processor_budget: Rat | None = None  # defaults to p
    allow_cancel: bool = False
    max_events: int = 1_000_000

    def budget_for(self, p: int) -> Rat:
        budget = Rat(self.processor_budget) if self.processor_budget is not None else Rat(p)
        if budget < p:
            raise ContractError(f"processor budget {budget} < p={p}")
        return budget


@dataclass
class Trace:
    """Full execution record of one simulation run."""

    slices: list = field(default_factory=list)  # (t0, t1, {id: rate})
    decisions: dict = field(default_factory=dict)  # id -> (Decision, decided_at, started_at)
    completions: dict = field(default_factory=dict)  # id -> time
    cancellations: list = field(default_factory=list)  # (id, time)
    arrivals: dict = field(default_factory=dict)  # id -> availability time
    aux: dict = field(default_factory=dict)


@dataclass
class SchedCommands:
    """Commands returned by a scheduler callback."""

    starts: dict = field(default_factory=dict)  # id -> Decision
    cancels: set = field(default_factory=set)  # ids to cancel (back to undecided)
    timers: list = field(default_factory=list)  # (time, tag)


class Scheduler:
    """Callback contract: the engine owns all task state; schedulers read it
    through the view and issue start/cancel/timer commands plus allocations."""

    name = "scheduler"
    oblivious = False  # True hides pi from the view (parallel-work-oblivious)

    def setup(self, view) -> SchedCommands | None:
        return None

    def on_arrival(self, view, task) -> SchedCommands | None:
        return None

    def on_completion(self, view, tid) -> SchedCommands | None:
        return None

    def on_timer(self, view, tag) -> SchedCommands | None:
        return None

    def allocate(self, view) -> dict:
        return {}


class _ObliviousTask:
    """Task proxy whose parallel work is unreadable."""

    __slots__ = ("_task",)

    def __init__(self, task: Task):
        self._task = task

    @property
    def id(self):
        return self._task.id

    @property
    def sigma(self):
        return self._task.sigma

    @property
    def arrival(self):
        return self._task.arrival

    @property
    def deps(self):
        return self._task.deps

    @property
    def pi(self):
        raise ObliviousnessError(
            f"scheduler attempted to read pi of task {self._task.id}"
        )


class EngineView:
    """Read-only window into the engine state for schedulers and adversaries."""

    def __init__(self, engine: "Engine", hide_pi: bool):
        self._e = engine
        self._hide_pi = hide_pi

    @property
    def now(self) -> Rat:
        return self._e.now

    @property
    def p(self) -> int:
        return self._e.p

    @property
    def speed(self) -> Rat:
        return self._e.config.speed

    @property
    def budget(self) -> Rat:
        return self._e.budget

    @property
    def allow_cancel(self) -> bool:
        return self._e.config.allow_cancel

    def task(self, tid: int):
        task = self._e.tasks[tid]
        return _ObliviousTask(task) if self._hide_pi else task

    def status(self, tid: int) -> str:
        return self._e.status[tid]

    def alive_ids(self) -> list[int]:
        """Arrived-or-running task ids, ascending."""
        return sorted(
            tid for tid, st in self._e.status.items() if st in (_ARRIVED, _RUNNING)
        )

    def unstarted_ids(self) -> list[int]:
        """Arrived, not-yet-started ids in (availability, id) order."""
        ids = [tid for tid, st in self._e.status.items() if st == _ARRIVED]
        return sorted(ids, key=lambda t: (self._e.avail_time[t], t))

    def running_ids(self) -> list[int]:
        return sorted(tid for tid, st in self._e.status.items() if st == _RUNNING)

    def completed_ids(self) -> list[int]:
        return sorted(tid for tid, st in self._e.status.items() if st == _DONE)

    def decision(self, tid: int) -> Decision | None:
        return self._e.decision.get(tid)

    def remaining(self, tid: int) -> Rat:
        return self._e.remaining[tid]

    def avail_time(self, tid: int) -> Rat:
        return self._e.avail_time[tid]

    def completion_time(self, tid: int) -> Rat:
        return self._e.trace.completions[tid]

    def current_rate(self, tid: int) -> Rat:
        return self._e.alloc.get(tid, ZERO)

    @property
    def awake_so_far(self) -> Rat:
        return self._e.awake_so_far

    @property
    def trace(self) -> Trace:
        return self._e.trace


class Adversary:
    """Adaptive adversary: observes the run and may inject tasks."""

    name = "adversary"

    def initial_tasks(self) -> list[Task]:
        return []

    def on_event(self, view: EngineView) -> list[Task]:
        return []


class Engine:
    """One deterministic simulation run."""

    def __init__(
        self,
        tap: TAP,
        scheduler: Scheduler,
        config: EngineConfig | None = None,
        adversary: Adversary | None = None,
    ):
        self.config = config or EngineConfig()
        self.p = tap.p
        self.budget = self.config.budget_for(tap.p)
        self.scheduler = scheduler
        self.adversary = adversary
        self.now = ZERO
        self.tasks: dict[int, Task] = {}
        self.status: dict[int, str] = {}
        self.remaining: dict[int, Rat] = {}
        self.decision: dict[int, Decision] = {}
        self.avail_time: dict[int, Rat] = {}
        self.alloc: dict[int, Rat] = {}
        self.trace = Trace()
        self.awake_so_far = ZERO
        self._timers: list = []  # heap of (time, seq, tag)
        self._timer_seq = 0
        self._event_count = 0
        self._deps_done: dict[int, set] = {}
        self._ready_at: dict[int, Rat] = {}  # pending id -> availability time
        self.view = EngineView(self, hide_pi=getattr(scheduler, "oblivious", False))
        self._started = False
        tap.validate()
        for task in tap.tasks:
            self._add_task(task)
        if adversary is not None:
            for task in adversary.initial_tasks():
                self._add_task(task)

    # -- task intake --------------------------------------------------------

    def _add_task(self, task: Task) -> None:
        if task.id in self.tasks:
            raise ContractError(f"duplicate task id {task.id}")
        self.tasks[task.id] = task
        self.status[task.id] = _PENDING
        self.remaining[task.id] = ZERO
        missing = {
            d for d in task.deps if self.status.get(d) != _DONE
        }
        self._deps_done[task.id] = missing
        if not missing:
            self._ready_at[task.id] = max(task.arrival, self.now)

    def inject_task(self, task: Task) -> None:
        """Add a task during the run (adversaries, lockstep feeding)."""
        if task.arrival < self.now:
            raise ContractError(
                f"injected task {task.id} arrives in the past ({task.arrival} < {self.now})"
            )
        self._add_task(task)

    # -- event queries -------------------------------------------------------

    def _next_completion(self) -> Rat | None:
        best = None
        speed = self.config.speed
        for tid, rate in self.alloc.items():
            if rate <= 0 or self.status[tid] != _RUNNING:
                continue
            eff = min(rate, ONE) if self.decision[tid] is Decision.SERIAL else rate
            if eff <= 0:
                continue
            t = self.now + self.remaining[tid] / (speed * eff)
            if best is None or t < best:
                best = t
        return best

    def next_event_time(self) -> Rat | None:
        candidates = []
        comp = self._next_completion()
        if comp is not None:
            candidates.append(comp)
        if self._ready_at:
            candidates.append(min(self._ready_at.values()))
        if self._timers:
            candidates.append(self._timers[0][0])
        return min(candidates) if candidates else None

    @property
    def done(self) -> bool:
        return not self._ready_at and not any(
            st in (_ARRIVED, _RUNNING) for st in self.status.values()
        )

    # -- time advancement ----------------------------------------------------

    def _advance_clock(self, t: Rat) -> None:
        if t < self.now:
            raise ContractError(f"time going backwards: {t} < {self.now}")
        if t == self.now:
            return
        dt = t - self.now
        speed = self.config.speed
        alive = False
        for tid, st in self.status.items():
            if st in (_ARRIVED, _RUNNING):
                alive = True
                break
        for tid, rate in self.alloc.items():
            if rate <= 0 or self.status[tid] != _RUNNING:
                continue
            eff = min(rate, ONE) if self.decision[tid] is Decision.SERIAL else rate
            self.remaining[tid] -= speed * eff * dt
            if self.remaining[tid] < 0:
                raise RunawayError(
                    f"task {tid} overshot completion (remaining {self.remaining[tid]})"
                )
        self.trace.slices.append((self.now, t, dict(self.alloc)))
        if alive:
            self.awake_so_far += dt
        self.now = t

    # -- event processing ----------------------------------------------------

    def _events_at(self, t: Rat) -> list:
        events = []
        for tid, st in self.status.items():
            if st == _RUNNING and self.remaining[tid] == 0 and self.alloc.get(tid, ZERO) > 0:
                events.append((_COMPLETION, tid, None))
        for tid, rt in self._ready_at.items():
            if rt == t:
                events.append((_ARRIVAL, tid, None))
        while self._timers and self._timers[0][0] == t:
            time_, seq, tag = heapq.heappop(self._timers)
            events.append((_TIMER, seq, tag))
        events.sort(key=lambda e: (e[0], e[1]))
        return events

    def _apply_commands(self, commands: SchedCommands | None) -> None:
        if commands is None:
            return
        for tid in sorted(commands.cancels):
            if not self.config.allow_cancel:
                raise ContractError(f"cancellation of task {tid} with allow_cancel=false")
            if self.status.get(tid) != _RUNNING:
                raise ContractError(f"cannot cancel task {tid}: not running")
            if self.decision[tid] is not Decision.PARALLEL:
                raise ContractError(f"cannot cancel serial task {tid}")
            self.status[tid] = _ARRIVED
            del self.decision[tid]
            self.remaining[tid] = ZERO
            self.alloc.pop(tid, None)
            self.trace.cancellations.append((tid, self.now))
        for tid in sorted(commands.starts):
            decision = commands.starts[tid]
            if self.status.get(tid) != _ARRIVED:
                raise ContractError(
                    f"cannot start task {tid}: status {self.status.get(tid)!r}"
                )
            task = self.tasks[tid]
            self.status[tid] = _RUNNING
            self.decision[tid] = decision
            self.remaining[tid] = task.work(decision)
            self.trace.decisions[tid] = (decision, self.now, None)
        for time_, tag in commands.timers:
            time_ = Rat(time_)
            if time_ < self.now:
                raise ContractError(f"timer in the past: {time_} < {self.now}")
            heapq.heappush(self._timers, (time_, self._timer_seq, tag))
            self._timer_seq += 1

    def _dispatch(self, kind: int, key, tag) -> None:
        self._event_count += 1
        if self._event_count > self.config.max_events:
            raise RunawayError(
                f"event count exceeded bound {self.config.max_events}"
            )
        if kind == _COMPLETION:
            tid = key
            self.status[tid] = _DONE
            self.alloc.pop(tid, None)
            self.trace.completions[tid] = self.now
            # unlock dependents
            for other, missing in self._deps_done.items():
                if tid in missing:
                    missing.discard(tid)
                    if not missing and self.status[other] == _PENDING:
                        self._ready_at[other] = max(self.tasks[other].arrival, self.now)
            self._apply_commands(self.scheduler.on_completion(self.view, tid))
        elif kind == _ARRIVAL:
            tid = key
            del self._ready_at[tid]
            self.status[tid] = _ARRIVED
            self.avail_time[tid] = self.now
            self.trace.arrivals[tid] = self.now
            self._apply_commands(
                self.scheduler.on_arrival(self.view, self.view.task(tid))
            )
        elif kind == _TIMER:
            self._apply_commands(self.scheduler.on_timer(self.view, tag))

    def _set_allocation(self) -> None:
        raw = self.scheduler.allocate(self.view)
        alloc: dict[int, Rat] = {}
        total = ZERO
        for tid, rate in raw.items():
            rate = Rat(rate)
            if rate < 0:
                raise FeasibilityError(f"negative rate for task {tid}")
            if rate == 0:
                continue
            if self.status.get(tid) != _RUNNING:
                raise FeasibilityError(
                    f"rate for task {tid} which is not started/unfinished"
                )
            if self.decision[tid] is Decision.SERIAL and rate > 1:
                raise FeasibilityError(f"serial task {tid} rate {rate} > 1")
            alloc[tid] = rate
            total += rate
        if total > self.budget:
            raise FeasibilityError(
                f"allocation total {total} exceeds budget {self.budget}"
            )
        self.alloc = alloc
        for tid in alloc:
            dec, t_dec, t_start = self.trace.decisions[tid]
            if t_start is None:
                self.trace.decisions[tid] = (dec, t_dec, self.now)

    def _process_instant(self) -> None:
        """Process every event at the current clock time, then re-allocate."""
        while True:
            events = self._events_at(self.now)
            if not events:
                if self.adversary is not None:
                    injected = self.adversary.on_event(self.view)
                    if injected:
                        for task in injected:
                            self.inject_task(task)
                        if any(self._ready_at.get(t.id) == self.now for t in injected):
                            self._event_count += 1  # injection counts as an event
                            continue
                break
            for kind, key, tag in events:
                # completions may have been superseded within this batch
                if kind == _COMPLETION and self.status[key] != _RUNNING:
                    continue
                self._dispatch(kind, key, tag)
        self._set_allocation()

    # -- driving -------------------------------------------------------------

    def _startup(self) -> None:
        if not self._started:
            self._started = True
            self._apply_commands(self.scheduler.setup(self.view))
            self._process_instant()

    def advance_to(self, t: Rat) -> None:
        """Process all events with time <= t and move the clock to t."""
        t = Rat(t)
        self._startup()
        while True:
            nxt = self.next_event_time()
            if nxt is None or nxt > t:
                break
            self._advance_clock(nxt)
            self._process_instant()
        self._advance_clock(t)

    def run(self) -> Trace:
        self._startup()
        while not self.done:
            nxt = self.next_event_time()
            if nxt is None:
                raise RunawayError(
                    "alive tasks but no future events: scheduler made no progress"
                )
            self._advance_clock(nxt)
            self._process_instant()
        return self.trace


def simulate(
    tap: TAP,
    scheduler: Scheduler,
    config: EngineConfig | None = None,
    adversary: Adversary | None = None,
) -> Trace:
    """Run one simulation to completion and return its trace."""
    return Engine(tap, scheduler, config, adversary).run()


# --- trace validation -------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_trace(trace: Trace, tap: TAP, config: EngineConfig | None = None) -> ValidationReport:
    """Check every trace invariant; violations are data, not exceptions."""
    config = config or EngineConfig()
    report = ValidationReport()
    budget = Rat(config.processor_budget) if config.processor_budget is not None else Rat(tap.p)
    speed = Rat(config.speed)
    tasks = {t.id: t for t in tap.tasks}
    # extra tasks may have been injected by an adversary; trust trace arrivals
    prev_end = None
    for t0, t1, alloc in trace.slices:
        if t1 <= t0:
            report.violations.append(f"slice [{t0},{t1}] is empty or reversed")
        if prev_end is not None and t0 != prev_end:
            report.violations.append(f"slice gap/overlap at {t0} (previous end {prev_end})")
        prev_end = t1
        total = ZERO
        for tid, rate in alloc.items():
            if rate < 0:
                report.violations.append(f"negative rate for task {tid} at {t0}")
            total += rate
            if tid not in trace.decisions:
                report.violations.append(f"rate for undecided task {tid} at {t0}")
                continue
            arrival = trace.arrivals.get(tid)
            if arrival is not None and t0 < arrival:
                report.violations.append(f"task {tid} runs before arrival at {t0}")
            done = trace.completions.get(tid)
            if done is not None and t1 > done:
                report.violations.append(f"task {tid} runs after completion at {t0}")
        if total > budget:
            report.violations.append(
                f"budget violation at {t0}: total {total} > {budget}"
            )
    if not config.allow_cancel and trace.cancellations:
        report.violations.append("cancellations present with allow_cancel=false")
    # per-task work conservation over the final (post-cancellation) run
    cancel_times: dict[int, Rat] = {}
    for tid, at in trace.cancellations:
        cancel_times[tid] = max(at, cancel_times.get(tid, ZERO))
    for tid, f in trace.completions.items():
        if tid not in trace.decisions:
            report.violations.append(f"task {tid} completed without a decision")
            continue
        decision, _, _ = trace.decisions[tid]
        start_after = cancel_times.get(tid, ZERO)
        work = ZERO
        serial_cap_violated = False
        for t0, t1, alloc in trace.slices:
            rate = alloc.get(tid)
            if rate is None or t1 <= start_after or t0 >= f:
                continue
            a, b = max(t0, start_after), min(t1, f)
            if b <= a:
                continue
            if decision is Decision.SERIAL and rate > 1:
                serial_cap_violated = True
            eff = min(rate, ONE) if decision is Decision.SERIAL else rate
            work += speed * eff * (b - a)
        if serial_cap_violated:
            report.violations.append(f"serial task {tid} allocated rate > 1")
        task = tasks.get(tid)
        if task is not None:
            expected = task.work(decision)
            if work != expected:
                report.violations.append(
                    f"work conservation: task {tid} did {work}, expected {expected}"
                )
    return report
