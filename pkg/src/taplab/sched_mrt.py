"""Mean-response-time schedulers.

* ``equi_alloc`` / ``EquiScheduler``: equal division of the budget;
* SSS: silly/serious two-mode scheduler for serial-only instances;
* CANC: cancelling scheduler driven by a relaxed-job EQUI simulation;
* B: CANC with all per-type parallel work concentrated on one task of
  each type (power-of-two types), cancelling stand-ins and fake serial
  tasks as needed;
* C: non-cancelling; runs B on a 3x-scaled copy of the input inside a
  nested simulation and mirrors its allocations, with ballistic /
  semi-ballistic / emergency machinery for tasks whose mirrored work was
  stolen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import Decision, TAP, Task, TapError
from .engine import Engine, EngineConfig, SchedCommands, Scheduler
from .rationals import Rat, ZERO, ONE


class MrtInvariantError(TapError):
    """A scheduler-internal invariant failed (indicates a real bug)."""


def equi_alloc(ids, budget, serial_cap: bool) -> dict:
    """budget/k to each of k jobs; with serial_cap each rate is capped at 1
    and the surplus is not redistributed (flat-curve jobs gain nothing)."""
    ids = list(ids)
    if not ids:
        return {}
    share = Rat(budget) / len(ids)
    if serial_cap:
        share = min(share, ONE)
    return {tid: share for tid in ids}


@dataclass
class RelaxedJob:
    """Surrogate job with work 2*sigma and a threshold speedup curve."""

    task_id: int
    total_work: Rat  # 2 sigma
    threshold: Rat  # pi / sigma
    progress: Rat = ZERO


def relaxed_rate(job: RelaxedJob, x) -> Rat:
    """Progress rate on x processors: 0 at x=0, 1 below the threshold,
    x/threshold at or above it."""
    x = Rat(x)
    if x == 0:
        return ZERO
    if x < job.threshold:
        return ONE
    return x / job.threshold


def _task_class(sigma, pi) -> Rat:
    return Rat(pi) / Rat(sigma)


# --- EQUI baseline ----------------------------------------------------------

class EquiScheduler(Scheduler):
    """Oblivious baseline: every task runs in parallel under EQUI."""

    name = "equi"

    def on_arrival(self, view, task):
        return SchedCommands(starts={task.id: Decision.PARALLEL})

    def allocate(self, view) -> dict:
        return equi_alloc(view.running_ids(), view.budget, serial_cap=False)


class RigidScheduler(Scheduler):
    """Non-preemptive baseline: one task at a time, all p processors,
    FCFS, never preempted."""

    name = "rigid"
    nonpreemptive = True

    def __init__(self):
        self.queue: list[int] = []
        self.current: int | None = None

    def _start_next(self, view):
        if self.current is not None or not self.queue:
            return None
        self.current = self.queue.pop(0)
        return SchedCommands(starts={self.current: Decision.PARALLEL})

    def on_arrival(self, view, task):
        self.queue.append(task.id)
        return self._start_next(view)

    def on_completion(self, view, tid):
        if tid == self.current:
            self.current = None
        return self._start_next(view)

    def allocate(self, view) -> dict:
        if self.current is None:
            return {}
        return {self.current: Rat(view.p)}


# --- SSS --------------------------------------------------------------------

class SssScheduler(Scheduler):
    """Two-mode scheduler for serial-only instances (budget 2p).

    Silly mode (< p alive jobs): every job gets its own processor.
    Serious mode (>= p alive): the jobs carried over from the silly
    interval keep dedicated processors from the first p; jobs arriving
    during the serious interval (including at the switch instant) are
    "scary" and share the second p under EQUI with the serial cap.
    """

    name = "sss"

    def __init__(self):
        self.mode = "silly"
        self.scary: set[int] = set()

    def _alive(self, view) -> list:
        return view.alive_ids()

    def _update_mode(self, view, arriving: int | None = None):
        alive = self._alive(view)
        if self.mode == "silly" and len(alive) >= view.p:
            self.mode = "serious"
            # everything arriving at the switch instant counts as scary
            self.scary = {
                tid for tid in alive if view.avail_time(tid) == view.now
            }
            view.trace.aux.setdefault("sss_modes", []).append(
                (view.now, "serious")
            )
        elif self.mode == "serious":
            if arriving is not None:
                self.scary.add(arriving)
            if len(alive) < view.p:
                self.mode = "silly"
                self.scary = set()
                view.trace.aux.setdefault("sss_modes", []).append(
                    (view.now, "silly")
                )

    def on_arrival(self, view, task):
        commands = SchedCommands(starts={task.id: Decision.SERIAL})
        self._update_mode(view, arriving=task.id)
        return commands

    def on_completion(self, view, tid):
        self.scary.discard(tid)
        self._update_mode(view)
        return None

    def allocate(self, view) -> dict:
        running = view.running_ids()
        if self.mode == "silly":
            return {tid: ONE for tid in running}
        p = Rat(view.p)
        alloc = {tid: ONE for tid in running if tid not in self.scary}
        alloc.update(
            equi_alloc(
                [tid for tid in running if tid in self.scary], p, serial_cap=True
            )
        )
        return alloc


# --- CANC -------------------------------------------------------------------

class CancScheduler(Scheduler):
    """Cancelling MRT scheduler (default budget 2p: p parallel + p serial).

    Arriving tasks enter the parallel pool, which runs EQUI over the
    relaxed jobs on the parallel budget; each real task receives exactly
    the processor rate of its relaxed job.  A task still alive when its
    pool age reaches sigma is cancelled and restarted serially; the serial
    pool runs EQUI with the serial cap on the serial budget.
    """

    name = "canc"

    def __init__(self, par_budget=None, ser_budget=None):
        self.par_budget = par_budget
        self.ser_budget = ser_budget
        self.relaxed: dict[int, RelaxedJob] = {}
        self.pool_entry: dict[int, Rat] = {}
        self.par_shares: dict[int, Rat] = {}
        self.last_sync = ZERO

    def _par(self, view) -> Rat:
        return Rat(self.par_budget) if self.par_budget is not None else Rat(view.p)

    def _ser(self, view) -> Rat:
        return Rat(self.ser_budget) if self.ser_budget is not None else Rat(view.p)

    def _sync(self, view):
        dt = view.now - self.last_sync
        if dt > 0:
            for tid, job in self.relaxed.items():
                job.progress += relaxed_rate(job, self.par_shares.get(tid, ZERO)) * dt
        self.last_sync = view.now
        for tid, job in self.relaxed.items():
            if (
                job.progress >= job.total_work
                and view.status(tid) == "running"
                and view.remaining(tid) > 0
            ):
                raise MrtInvariantError(
                    f"relaxed job {tid} finished ({job.progress} >= "
                    f"{job.total_work}) before the real task"
                )

    def on_arrival(self, view, task):
        self._sync(view)
        self.relaxed[task.id] = RelaxedJob(
            task.id, 2 * task.sigma, _task_class(task.sigma, task.pi)
        )
        self.pool_entry[task.id] = view.now
        return SchedCommands(
            starts={task.id: Decision.PARALLEL},
            timers=[(view.now + task.sigma, ("canc", task.id))],
        )

    def on_completion(self, view, tid):
        self._sync(view)
        self.relaxed.pop(tid, None)
        self.par_shares.pop(tid, None)
        return None

    def on_timer(self, view, tag):
        self._sync(view)
        kind, tid = tag
        if kind != "canc" or tid not in self.relaxed:
            return None
        # completion is checked first; only strictly-alive tasks cancel
        if view.status(tid) != "running" or view.remaining(tid) == 0:
            return None
        age = view.now - self.pool_entry[tid]
        if age != view.task(tid).sigma:  # pragma: no cover
            raise MrtInvariantError(f"cancel timer for {tid} at pool age {age}")
        del self.relaxed[tid]
        self.par_shares.pop(tid, None)
        view.trace.aux.setdefault("canc_pool_ages", []).append((tid, age))
        return SchedCommands(cancels={tid}, starts={tid: Decision.SERIAL})

    def allocate(self, view) -> dict:
        parallel = [
            tid for tid in self.relaxed if view.status(tid) == "running"
        ]
        alloc = equi_alloc(parallel, self._par(view), serial_cap=False)
        self.par_shares = dict(alloc)
        serial = [
            tid
            for tid in view.running_ids()
            if view.decision(tid) is Decision.SERIAL
        ]
        alloc.update(equi_alloc(serial, self._ser(view), serial_cap=True))
        return alloc


# --- B ----------------------------------------------------------------------

@dataclass
class _TypeState:
    members: list = field(default_factory=list)  # arrival order; head is runner
    outer_done: int = 0  # parallel completions by this scheduler
    inner_done: int = 0  # parallel completions in the nested simulation


class BScheduler(Scheduler):
    """Concentrates CANC's per-type parallel work onto one task per type.

    Runs CANC inside a nested simulation fed the same arrivals and, at
    every instant, gives one running task per power-of-two type the sum of
    the rates CANC gives that type.  When CANC cancels a task of a type, a
    not-yet-started task of the type is serialized (most recent arrival
    first), else the running one is cancelled, else a fake serial task of
    the type's serial work takes an EQUI share of the serial pool.
    Requires power-of-two-rounded input.
    """

    name = "bsched"

    def __init__(self, par_budget=None, ser_budget=None):
        self.par_budget = par_budget
        self.ser_budget = ser_budget
        self.inner: Engine | None = None
        self.types: dict = {}  # (sigma, pi) -> _TypeState
        self.type_of: dict[int, tuple] = {}
        self.serialized_inner: set[int] = set()
        self.seen_cancels = 0
        self.seen_completions: set[int] = set()
        self.fakes: dict[int, Rat] = {}  # fake id -> remaining work
        self.fake_share = ZERO
        self.fake_seq = 0
        self.last_sync = ZERO
        self.timer_times: set = set()

    def _ser(self, view) -> Rat:
        return Rat(self.ser_budget) if self.ser_budget is not None else Rat(view.p)

    def setup(self, view):
        par = Rat(self.par_budget) if self.par_budget is not None else Rat(view.p)
        ser = self._ser(view)
        self.inner = Engine(
            TAP(view.p, ()),
            CancScheduler(par_budget=par, ser_budget=ser),
            EngineConfig(processor_budget=max(par + ser, Rat(view.p)), allow_cancel=True),
        )
        return None

    # -- nested-simulation bookkeeping --------------------------------------

    def _advance_fakes(self, view):
        dt = view.now - self.last_sync
        if dt > 0 and self.fakes:
            for fid in list(self.fakes):
                self.fakes[fid] -= self.fake_share * dt
                if self.fakes[fid] <= 0:
                    del self.fakes[fid]
                    view.trace.aux.setdefault("b_fake_completions", []).append(
                        (fid, view.now)
                    )
        self.last_sync = view.now

    def _handle_inner_cancel(self, view, inner_tid, commands):
        self.serialized_inner.add(inner_tid)
        ttype = self.type_of[inner_tid]
        state = self.types[ttype]
        # Prefer the very task whose stand-in was cancelled: this way a
        # runner is cancelled no later than its own pool age sigma, which
        # is what makes every parallel completion finish within sigma of
        # arrival.  Fall back to the most recent never-started member,
        # then the runner, then a fake serial task.
        def cancellable(m):
            # a runner whose remaining work is 0 completes in this very
            # batch and must not be cancelled out from under the engine
            return (
                view.decision(m) is Decision.PARALLEL
                and view.status(m) == "running"
                and view.remaining(m) > 0
            )

        def unstarted(m):
            return view.decision(m) is None and m not in commands.starts

        victim = None
        if inner_tid in state.members and (
            unstarted(inner_tid) or cancellable(inner_tid)
        ):
            victim = inner_tid
        else:
            candidates = [m for m in state.members if unstarted(m)]
            if candidates:
                victim = candidates[-1]
            else:
                candidates = [m for m in state.members if cancellable(m)]
                if candidates:
                    victim = candidates[0]
        if victim is not None:
            running = cancellable(victim)
            state.members.remove(victim)
            if running:
                commands.cancels.add(victim)
            commands.starts[victim] = Decision.SERIAL
        else:
            # every real task of the type is already done: fake serial task
            fid = self.fake_seq
            self.fake_seq += 1
            self.fakes[fid] = Rat(ttype[0])  # sigma of the type
            view.trace.aux.setdefault("b_fakes", []).append(
                (fid, ttype, view.now)
            )

    def _sync(self, view) -> SchedCommands:
        self._advance_fakes(view)
        self.inner.advance_to(view.now)
        commands = SchedCommands()
        cancels = self.inner.trace.cancellations
        while self.seen_cancels < len(cancels):
            inner_tid, _ = cancels[self.seen_cancels]
            self.seen_cancels += 1
            self._handle_inner_cancel(view, inner_tid, commands)
        for inner_tid, _ in self.inner.trace.completions.items():
            if inner_tid in self.seen_completions:
                continue
            self.seen_completions.add(inner_tid)
            if inner_tid in self.serialized_inner:
                continue  # serial completion inside the nested run
            state = self.types[self.type_of[inner_tid]]
            state.inner_done += 1
            if inner_tid in state.members:
                # the nested run finished this task's stand-in but the task
                # itself is still behind (a runner cancellation discarded
                # concentrated work): evict it to the serial pool so the
                # parallel slot retires here too
                if view.decision(inner_tid) is None and inner_tid not in commands.starts:
                    state.members.remove(inner_tid)
                    commands.starts[inner_tid] = Decision.SERIAL
                elif (
                    view.decision(inner_tid) is Decision.PARALLEL
                    and view.status(inner_tid) == "running"
                    and view.remaining(inner_tid) > 0
                ):
                    state.members.remove(inner_tid)
                    commands.cancels.add(inner_tid)
                    commands.starts[inner_tid] = Decision.SERIAL
                # a runner with remaining 0 completes in this very batch
        # make sure each type's runner is started
        for state in self.types.values():
            if state.members:
                runner = state.members[0]
                if view.decision(runner) is None and runner not in commands.starts:
                    commands.starts[runner] = Decision.PARALLEL
        nxt = self.inner.next_event_time()
        if nxt is not None and nxt not in self.timer_times:
            self.timer_times.add(nxt)
            commands.timers.append((nxt, ("inner",)))
        if self.fakes and self.fake_share > 0:
            due = view.now + min(self.fakes.values()) / self.fake_share
            if due not in self.timer_times:
                self.timer_times.add(due)
                commands.timers.append((due, ("fake",)))
        return commands

    # -- engine callbacks ----------------------------------------------------

    def on_arrival(self, view, task):
        ttype = (task.sigma, task.pi)
        self.type_of[task.id] = ttype
        self.types.setdefault(ttype, _TypeState()).members.append(task.id)
        self.inner.inject_task(
            Task(task.id, task.sigma, task.pi, view.now)
        )
        return self._sync(view)

    def on_completion(self, view, tid):
        state = self.types.get(self.type_of.get(tid))
        if state and tid in state.members:
            if tid == state.members[0]:
                state.outer_done += 1
            state.members.remove(tid)
        return self._sync(view)

    def on_timer(self, view, tag):
        return self._sync(view)

    def allocate(self, view) -> dict:
        alloc: dict[int, Rat] = {}
        # concentrated parallel rates
        type_rate: dict[tuple, Rat] = {}
        for inner_tid, rate in self.inner.alloc.items():
            if self.inner.decision.get(inner_tid) is Decision.PARALLEL:
                ttype = self.type_of[inner_tid]
                type_rate[ttype] = type_rate.get(ttype, ZERO) + rate
        for ttype, rate in type_rate.items():
            state = self.types[ttype]
            if not state.members:
                continue  # all real tasks of the type already finished
            runner = state.members[0]
            if (
                view.status(runner) == "running"
                and view.decision(runner) is Decision.PARALLEL
            ):
                alloc[runner] = alloc.get(runner, ZERO) + rate
        # serial pool: real serialized tasks plus fakes, EQUI with cap
        serial = [
            tid
            for tid in view.running_ids()
            if view.decision(tid) is Decision.SERIAL
        ]
        k = len(serial) + len(self.fakes)
        share = min(ONE, self._ser(view) / k) if k else ZERO
        for tid in serial:
            alloc[tid] = share
        self.fake_share = share
        return alloc


# --- C ----------------------------------------------------------------------

@dataclass
class _ModeRecord:
    task_id: int
    mode: str  # ballistic | semi-ballistic
    entered: Rat
    trigger: str  # serialized | inner-completed
    exited: Rat | None = None


class CScheduler(Scheduler):
    """Non-cancelling MRT scheduler (default budget 4p).

    Simulates B on a copy of the input with all works scaled by
    ``inner_scale`` (default 3) on p processors, and mirrors B's
    allocations onto its own tasks.  A task is vested once it receives
    parallel rate here.  When the nested B serializes or
    parallel-completes a vested task this scheduler has not finished, the
    task goes ballistic: its parallelism class enters emergency, all the
    class's mirrored parallel rate is redirected to the class's
    smallest-sigma ballistic task (recorded in the stolen-work ledger),
    the class reserve joins in, and vesting pauses for the class.  A task
    the nested B parallel-completes before vesting goes semi-ballistic and
    runs serially under EQUI on a second p processors.
    """

    name = "csched"

    def __init__(self, inner_scale=3, budget_factor=4):
        self.scale = Rat(inner_scale)
        self.budget_factor = Rat(budget_factor)
        self.inner: Engine | None = None
        self.task_info: dict[int, Task] = {}
        self.vested: set[int] = set()
        self.ballistic: dict[int, Rat] = {}  # tid -> entry time
        self.semibal: set[int] = set()
        self.stolen: dict[int, Rat] = {}
        self.flows: list = []  # (victim tid, rate) active over the last slice
        self.seen_decisions: dict[int, Decision] = {}
        self.seen_completions: set[int] = set()
        self.last_sync = ZERO
        self.timer_times: set = set()
        self.mode_records: list[_ModeRecord] = []

    def setup(self, view):
        half = Rat(view.p) / 2
        self.inner = Engine(
            TAP(view.p, ()),
            BScheduler(par_budget=half, ser_budget=half),
            EngineConfig(processor_budget=Rat(view.p), allow_cancel=True),
        )
        view.trace.aux["c_modes"] = self.mode_records
        view.trace.aux["c_stolen"] = self.stolen
        return None

    def _class(self, tid) -> Rat:
        t = self.task_info[tid]
        return _task_class(t.sigma, t.pi)

    def _emergency_classes(self) -> set:
        return {self._class(tid) for tid in self.ballistic}

    def _smallest_ballistic(self, cls) -> int:
        candidates = [
            tid for tid in self.ballistic if self._class(tid) == cls
        ]
        candidates.sort(key=lambda tid: (self.task_info[tid].sigma, tid))
        if len(candidates) >= 2 and (
            self.task_info[candidates[0]].sigma
            == self.task_info[candidates[1]].sigma
        ):
            raise MrtInvariantError(
                f"two concurrently-ballistic tasks of class {cls} share "
                f"serial work {self.task_info[candidates[0]].sigma}"
            )
        return candidates[0]

    def _enter_ballistic(self, view, tid, trigger):
        cls = self._class(tid)
        sigma = self.task_info[tid].sigma
        for other in self.ballistic:
            if self._class(other) == cls and self.task_info[other].sigma == sigma:
                raise MrtInvariantError(
                    f"tasks {other} and {tid} are concurrently ballistic with "
                    f"equal serial work in class {cls}"
                )
        self.ballistic[tid] = view.now
        self.mode_records.append(
            _ModeRecord(tid, "ballistic", view.now, trigger)
        )

    def _enter_semibal(self, view, tid, trigger, commands):
        self.semibal.add(tid)
        commands.starts[tid] = Decision.SERIAL
        self.mode_records.append(
            _ModeRecord(tid, "semi-ballistic", view.now, trigger)
        )

    def _sync(self, view) -> SchedCommands:
        dt = view.now - self.last_sync
        if dt > 0:
            for victim, rate in self.flows:
                self.stolen[victim] = self.stolen.get(victim, ZERO) + rate * dt
        self.last_sync = view.now
        self.inner.advance_to(view.now)
        commands = SchedCommands()
        outer_done = set(view.completed_ids())
        # transitions driven by the nested B run
        for tid, (dec, _, _) in self.inner.trace.decisions.items():
            if self.seen_decisions.get(tid) is dec:
                continue
            self.seen_decisions[tid] = dec
            if dec is Decision.SERIAL:
                # B serialized the task (cancelled it, or never ran it parallel)
                if tid in self.vested and tid not in outer_done:
                    if tid not in self.ballistic:
                        self._enter_ballistic(view, tid, "serialized")
                elif view.decision(tid) is None and tid not in self.semibal:
                    commands.starts[tid] = Decision.SERIAL
            # None -> PARALLEL transitions are handled by the vesting scan
        for tid in self.inner.trace.completions:
            if tid in self.seen_completions:
                continue
            self.seen_completions.add(tid)
            if self.seen_decisions.get(tid) is not Decision.PARALLEL:
                continue  # serial completion inside the nested run
            if tid in outer_done:
                continue
            if tid in self.vested:
                if tid not in self.ballistic:
                    self._enter_ballistic(view, tid, "inner-completed")
            elif tid not in self.semibal:
                self._enter_semibal(view, tid, "inner-completed", commands)
        # vesting: nested B runs the task in parallel and its class is calm
        emergency = self._emergency_classes()
        for tid in self.inner.alloc:
            if self.inner.decision.get(tid) is not Decision.PARALLEL:
                continue
            if tid in self.vested or tid in outer_done or tid in self.semibal:
                continue
            if view.decision(tid) is not None:
                continue
            if self._class(tid) in emergency:
                continue  # vesting paused for the class
            self.vested.add(tid)
            commands.starts[tid] = Decision.PARALLEL
        # redirect flows for the next slice
        self.flows = []
        for tid, rate in self.inner.alloc.items():
            if self.inner.decision.get(tid) is Decision.PARALLEL:
                if self._class(tid) in emergency:
                    self.flows.append((tid, rate))
        nxt = self.inner.next_event_time()
        if nxt is not None and nxt not in self.timer_times:
            self.timer_times.add(nxt)
            commands.timers.append((nxt, ("inner",)))
        return commands

    # -- engine callbacks ----------------------------------------------------

    def on_arrival(self, view, task):
        self.task_info[task.id] = task
        self.inner.inject_task(
            Task(
                task.id,
                task.sigma * self.scale,
                task.pi * self.scale,
                view.now,
            )
        )
        return self._sync(view)

    def on_completion(self, view, tid):
        if tid in self.ballistic:
            entry = self.ballistic.pop(tid)
            for rec in self.mode_records:
                if rec.task_id == tid and rec.mode == "ballistic" and rec.exited is None:
                    rec.exited = view.now
        self.semibal.discard(tid)
        return self._sync(view)

    def on_timer(self, view, tag):
        return self._sync(view)

    def allocate(self, view) -> dict:
        alloc: dict[int, Rat] = {}

        def add(tid, rate):
            if rate > 0:
                alloc[tid] = alloc.get(tid, ZERO) + rate

        emergency = self._emergency_classes()
        outer_done = set(view.completed_ids())
        # mirror of the nested B allocation on the first p processors
        for tid, rate in self.inner.alloc.items():
            dec = self.inner.decision.get(tid)
            if dec is Decision.PARALLEL:
                cls = self._class(tid)
                if cls in emergency:
                    add(self._smallest_ballistic(cls), rate)
                elif (
                    tid not in outer_done
                    and view.decision(tid) is Decision.PARALLEL
                ):
                    add(tid, rate)
                # otherwise the mirror processors idle
            else:  # serial mirror
                if (
                    tid not in outer_done
                    and tid not in self.ballistic
                    and tid not in self.semibal
                    and view.decision(tid) is Decision.SERIAL
                ):
                    add(tid, rate)
        # class reserves for ballistic tasks (class ratio 2^j processors each)
        for cls in emergency:
            add(self._smallest_ballistic(cls), cls)
        # semi-ballistic pool: EQUI with the serial cap on p processors
        semibal_running = [
            tid
            for tid in self.semibal
            if view.status(tid) == "running"
        ]
        for tid, share in equi_alloc(
            semibal_running, Rat(view.p), serial_cap=True
        ).items():
            add(tid, share)
        return alloc
