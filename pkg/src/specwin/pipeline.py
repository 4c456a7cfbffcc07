"""Round-level event simulation of the windowed decode pipeline.

Runs a lattice-surgery program against a decoder model: window cells are
materialized as rounds are generated, decode tasks start when their
input boundary bits are available (verified, or speculated when enabled),
and blocking instructions stall their patches until every covering cell
is decoded and verified.  Reported reaction times, compute volumes, and
the executed timeline come straight out of the event loop.
"""

from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .decoding_graph import Syndrome, build_window_graph
from .matching import ExactCapExceeded, decode, extract_dependency_bits
from .predictor import boundary_view, predict_3step
from .program import Instruction, Program, ProgramError, validate
from .windowing import (
    STRATEGIES,
    Face,
    WindowCell,
    _SPATIAL_SIDE,
    _a_is_source,
    aligned_phases,
)

__all__ = [
    "LatencyModel",
    "SimConfig",
    "TraceSegment",
    "CellRecord",
    "SimResult",
    "parse_latency",
    "decode_latency",
    "simulate",
    "reaction_time",
    "occupancy_stats",
    "processor_heuristic",
    "SPECULATION_MODES",
    "RECOVERY_STRATEGIES",
]

SPECULATION_MODES = ("off", "stochastic", "integrated")
RECOVERY_STRATEGIES = ("optimistic", "adjacent", "pessimistic")

# Sub-stream tags for seeded RNG; every draw is keyed so results do not
# depend on event interleaving.
_COND, _SPEC, _LAT, _WIN = 1, 2, 3, 4

_FACE_TAG = {
    ("temporal", "past"): 0,
    ("temporal", "future"): 1,
    ("spatial", "north"): 2,
    ("spatial", "south"): 3,
    ("spatial", "west"): 4,
    ("spatial", "east"): 5,
}
_MIRROR = {
    "past": "future",
    "future": "past",
    "north": "south",
    "south": "north",
    "west": "east",
    "east": "west",
}
_AXIS = {"past": "t", "future": "t", "north": "row", "south": "row", "west": "col", "east": "col"}

# Event phases: completions verify before speculative bits published at
# the same round become consumable.
_PH_GEN, _PH_DONE, _PH_SPEC = 0, 1, 2


def _tag(face: Face) -> int:
    return _FACE_TAG[(face.orientation, face.side)]


def _owner_tag(face: Face) -> int:
    """Tag of the face as seen from its owning (source) side."""
    return _FACE_TAG[(face.orientation, _MIRROR[face.side])]


# -- latency models ---------------------------------------------------------


@dataclass
class LatencyModel:
    """Decode latency as a function of task size.

    kind "fixed" always takes ``rounds``; "linear" takes rate * k * d
    rounds for a task of k d^3 units; "empirical" draws uniformly from
    a per-size bucket of measured latencies.
    """

    kind: str = "linear"
    rounds: int = 0
    rate: float = 1.0
    buckets: dict[int, list[int]] | None = None

    @classmethod
    def fixed(cls, rounds: int) -> "LatencyModel":
        return cls(kind="fixed", rounds=int(rounds))

    @classmethod
    def linear(cls, rate: float) -> "LatencyModel":
        return cls(kind="linear", rate=float(rate))

    @classmethod
    def empirical(cls, buckets: dict[int, list[int]]) -> "LatencyModel":
        clean = {int(k): [int(v) for v in vals] for k, vals in buckets.items()}
        return cls(kind="empirical", buckets=clean)

    def validate(self) -> None:
        if self.kind not in ("fixed", "linear", "empirical"):
            raise ValueError(f"unknown latency kind {self.kind!r}")
        if self.kind == "fixed" and self.rounds < 1:
            raise ValueError("fixed latency must be >= 1 round")
        if self.kind == "linear" and self.rate <= 0:
            raise ValueError("linear latency rate must be positive")
        if self.kind == "empirical" and not self.buckets:
            raise ValueError("empirical latency needs at least one bucket")

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == "fixed":
            out["rounds"] = self.rounds
        elif self.kind == "linear":
            out["rate"] = self.rate
        else:
            out["buckets"] = {str(k): list(v) for k, v in (self.buckets or {}).items()}
        return out


def _parse_rounds(text: str, d: int) -> int:
    text = text.strip()
    if text.endswith("d"):
        return int(math.ceil(float(text[:-1] or "1") * d - 1e-9))
    return int(float(text))


def parse_latency(text: str, d: int) -> LatencyModel:
    """Parse a latency spec like "fixed:2d", "linear:0.5", "empirical:f.json"."""
    kind, sep, arg = text.partition(":")
    if not sep:
        raise ValueError(f"latency spec {text!r} needs kind:argument")
    if kind == "fixed":
        return LatencyModel.fixed(_parse_rounds(arg, d))
    if kind == "linear":
        return LatencyModel.linear(float(arg))
    if kind == "empirical":
        with open(arg) as fh:
            raw = json.load(fh)
        return LatencyModel.empirical({int(k): v for k, v in raw.items()})
    raise ValueError(f"unknown latency kind {kind!r}")


def decode_latency(task_units: float, d: int, model: LatencyModel, rng=None) -> int:
    """Rounds one decode call takes for a task of ``task_units`` d^3 units."""
    k = max(1, int(math.ceil(task_units - 1e-9)))
    if model.kind == "fixed":
        t = model.rounds
    elif model.kind == "linear":
        t = int(math.ceil(model.rate * k * d - 1e-9))
    else:
        bucket = (model.buckets or {}).get(k)
        if not bucket:
            raise ValueError(f"empirical latency has no bucket for task size {k}")
        if rng is None:
            raise ValueError("empirical latency needs an rng")
        t = bucket[int(rng.integers(len(bucket)))]
    return max(1, int(t))


# -- configuration ----------------------------------------------------------


@dataclass
class SimConfig:
    strategy: str = "sliding"
    speculation: str = "off"
    accuracy: float = 0.90
    accuracy_adjacent: float = 0.86
    t_spec: int = 1
    recovery: str = "adjacent"
    latency: LatencyModel = field(default_factory=LatencyModel)
    processors: int | None = None
    seed: int = 0
    round_time_us: float = 1.0
    stall_blocking: bool = True
    noise_p: float = 1e-3

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.speculation not in SPECULATION_MODES:
            raise ValueError(f"unknown speculation mode {self.speculation!r}")
        if self.recovery not in RECOVERY_STRATEGIES:
            raise ValueError(f"unknown recovery strategy {self.recovery!r}")
        if not (0.0 <= self.accuracy_adjacent <= self.accuracy <= 1.0):
            raise ValueError("need 0 <= accuracy_adjacent <= accuracy <= 1")
        if self.t_spec < 0:
            raise ValueError("t_spec must be >= 0")
        if self.processors is not None and self.processors < 1:
            raise ValueError("processors must be None or >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if not (0.0 <= self.noise_p < 1.0):
            raise ValueError("noise_p must be in [0, 1)")
        self.latency.validate()


# -- results ----------------------------------------------------------------


@dataclass
class TraceSegment:
    instruction: int
    patches: tuple
    start: int
    end: int
    label: str
    skipped: bool = False

    def to_json(self) -> dict[str, Any]:
        return {
            "instruction": self.instruction,
            "patches": [list(p) for p in self.patches],
            "start": self.start,
            "end": self.end,
            "label": self.label,
            "skipped": self.skipped,
        }


@dataclass
class CellRecord:
    patch: tuple
    index: int
    t0: int
    t1: int
    gen_round: int
    first_start: int
    verified_round: int
    attempts: int

    def to_json(self) -> dict[str, Any]:
        return {
            "patch": list(self.patch),
            "index": self.index,
            "t0": self.t0,
            "t1": self.t1,
            "gen_round": self.gen_round,
            "first_start": self.first_start,
            "verified_round": self.verified_round,
            "attempts": self.attempts,
        }


@dataclass
class SimResult:
    runtime_rounds: int
    runtime_us: float
    reactions: list[tuple[int, int]]
    timeline: list[TraceSegment]
    occupancy: list[tuple[int, int]]
    valid_compute: int
    wasted_compute: int
    mispredictions: int
    cell_log: list[CellRecord]

    def to_json(self) -> dict[str, Any]:
        return {
            "runtime_rounds": self.runtime_rounds,
            "runtime_us": self.runtime_us,
            "reactions": [list(r) for r in self.reactions],
            "timeline": [seg.to_json() for seg in self.timeline],
            "occupancy": [list(o) for o in self.occupancy],
            "valid_compute": self.valid_compute,
            "wasted_compute": self.wasted_compute,
            "mispredictions": self.mispredictions,
            "cells": [c.to_json() for c in self.cell_log],
        }


def reaction_time(result: SimResult, instruction: int) -> int:
    """Reaction time recorded for one blocking instruction."""
    for gi, r in result.reactions:
        if gi == instruction:
            return r
    raise KeyError(f"no reaction recorded for instruction {instruction}")


def occupancy_stats(result: SimResult) -> tuple[int, float]:
    """Peak and time-averaged decoder occupancy over the executed rounds."""
    series = result.occupancy
    if not series:
        return 0, 0.0
    horizon = result.runtime_rounds
    peak = max(n for _, n in series)
    if horizon <= 0:
        return peak, 0.0
    area = 0
    for (t0, n), (t1, _) in zip(series, series[1:]):
        lo, hi = min(t0, horizon), min(t1, horizon)
        area += n * (hi - lo)
    last_t, last_n = series[-1]
    if last_t < horizon:
        area += last_n * (horizon - last_t)
    return peak, area / horizon


# -- engine state -----------------------------------------------------------


class _Cell:
    """Mutable pipeline state for one window cell."""

    __slots__ = (
        "win", "key", "vgen", "gen_fired", "gen_time", "spec_time",
        "verified_at", "running", "done", "final_consumed", "queued",
        "attempts", "first_start", "waiters", "pending_children",
        "spec_consumers", "hooks", "graph", "plane_tags", "synd",
        "pred", "truth",
    )

    def __init__(self, win: WindowCell, key: tuple[int, int, int]):
        self.win = win
        self.key = key
        self.vgen = 0
        self.gen_fired = False
        self.gen_time: int | None = None
        self.spec_time: int | None = None
        self.verified_at: int | None = None
        self.running = None  # (start, end, attempt, consumed)
        self.done = None  # (end, busy, consumed, pending set)
        self.final_consumed: tuple = ()
        self.queued = False
        self.attempts = 0
        self.first_start: int | None = None
        self.waiters: set[_Cell] = set()
        self.pending_children: set[_Cell] = set()
        self.spec_consumers: dict[int, set[_Cell]] = {}
        self.hooks: list[_Release] = []
        self.graph = None
        self.plane_tags: tuple[int, ...] = ()
        self.synd = None
        self.pred: dict[int, Any] = {}
        self.truth: dict[int, Any] = {}

    @property
    def cid(self) -> int:
        return self.win.id


class _Release:
    """Pending release of one blocking instruction."""

    __slots__ = ("gi", "t_b", "pending", "release", "resolved", "resume")

    def __init__(self, gi: int, t_b: int):
        self.gi = gi
        self.t_b = t_b
        self.pending: set[_Cell] = set()
        self.release = t_b
        self.resolved = False
        self.resume: int | None = None


class _PatchState:
    __slots__ = ("patch", "order", "next_i", "prev_gi", "birth", "death", "cells")

    def __init__(self, patch: tuple, order: list[int]):
        self.patch = patch
        self.order = order
        self.next_i = 0
        self.prev_gi: int | None = None
        self.birth: int | None = None
        self.death: int | None = None
        self.cells: list[_Cell] = []


class _Engine:
    def __init__(self, program: Program, cfg: SimConfig):
        self.program = program
        self.cfg = cfg
        self.d = program.distance
        self.instructions = program.instructions
        self.spec_on = cfg.speculation != "off"
        self.phases = aligned_phases(program) if cfg.strategy == "aligned" else {}

        per_patch: dict[tuple, list[int]] = {}
        for i, ins in enumerate(self.instructions):
            for p in ins.patches:
                per_patch.setdefault(p, []).append(i)
        self.pstate = {
            p: _PatchState(p, sorted(order, key=lambda i: self.instructions[i].start_round))
            for p, order in per_patch.items()
        }
        self.patch_order = sorted(self.pstate)

        n = len(self.instructions)
        self.exec_start: list[int | None] = [None] * n
        self.exec_end: list[int | None] = [None] * n
        self.timeline: list[TraceSegment] = []
        self.releases: dict[int, _Release] = {}
        self.reactions: list[tuple[int, int]] = []

        self.cells: list[_Cell] = []
        self.spatial_pairs: set[tuple[int, int]] = set()
        self.heap: list = []
        self.seq = 0
        self.clock = 0
        self.queue: deque[_Cell] = deque()
        self.running_count = 0
        self.occupancy: list[tuple[int, int]] = []
        self.valid = 0
        self.wasted = 0
        self.mispredictions = 0
        self.wrong_faces: set[tuple[int, int]] = set()
        self._need_sweep = False

    # -- rng streams --------------------------------------------------------

    def _rng(self, tag: int, *ids: int):
        return np.random.default_rng([self.cfg.seed, tag, *ids])

    # -- event plumbing -----------------------------------------------------

    def _push(self, time: int, phase: int, payload: tuple) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (time, phase, self.seq, payload))

    # -- cell construction --------------------------------------------------

    def _new_cell(self, patch: tuple, t0: int, t1: int) -> _Cell:
        ps = self.pstate[patch]
        win = WindowCell(len(self.cells), patch, t0, t1, self.d)
        cell = _Cell(win, (patch[0], patch[1], len(ps.cells)))
        self.cells.append(cell)
        ps.cells.append(cell)
        if len(ps.cells) > 1:
            self._attach_temporal(ps.cells[-2], cell)
        self._push(t1, _PH_GEN, ("gen", cell.cid, cell.vgen))
        return cell

    def _attach_temporal(self, prev: _Cell, nxt: _Cell) -> None:
        patch = prev.win.patch
        a_src = _a_is_source(
            self.cfg.strategy, self.d, self.phases,
            (prev.win.t0, patch), (nxt.win.t0, patch),
        )
        if a_src:
            prev.win.faces.append(Face("temporal", "future", nxt.cid, "source"))
            nxt.win.faces.append(Face("temporal", "past", prev.cid, "sink"))
        else:
            prev.win.faces.append(Face("temporal", "future", nxt.cid, "sink"))
            nxt.win.faces.append(Face("temporal", "past", prev.cid, "source"))

    def _ensure_upto(self, patch: tuple, upto: int) -> None:
        ps = self.pstate[patch]
        while True:
            end = ps.cells[-1].win.t1 if ps.cells else ps.birth
            if end >= upto or (ps.death is not None and end >= ps.death):
                break
            t1 = end + self.d
            if ps.death is not None:
                t1 = min(t1, ps.death)
            self._new_cell(patch, end, t1)

    def _ensure_next(self, cell: _Cell) -> None:
        ps = self.pstate[cell.win.patch]
        if ps.cells[-1] is not cell:
            return
        t0 = cell.win.t1
        if ps.death is not None and t0 >= ps.death:
            return
        t1 = t0 + self.d if ps.death is None else min(t0 + self.d, ps.death)
        self._new_cell(cell.win.patch, t0, t1)

    def _apply_death(self, patch: tuple) -> None:
        ps = self.pstate[patch]
        last = ps.cells[-1]
        if last.win.t1 <= ps.death:
            return
        # The provisional tail cell overshot the patch's final round.
        # Shrink it and reposition every generation event that referenced
        # its old end; none of them can have fired yet since the new end
        # is still in the future.
        last.win.t1 = ps.death
        last.vgen += 1
        self._push(ps.death, _PH_GEN, ("gen", last.cid, last.vgen))
        for f in last.win.faces:
            if f.kind != "sink":
                continue
            nbr = self.cells[f.neighbor]
            if nbr.gen_fired:
                continue
            nbr.vgen += 1
            self._push(self._gen_value(nbr), _PH_GEN, ("gen", nbr.cid, nbr.vgen))

    def _connect(self, pa: tuple, pb: tuple, w_start: int, w_end: int) -> None:
        dr, dc = pb[0] - pa[0], pb[1] - pa[1]
        side_a = _SPATIAL_SIDE[(dr, dc)]
        side_b = _SPATIAL_SIDE[(-dr, -dc)]
        for ca in self.pstate[pa].cells:
            if ca.win.t1 <= w_start or ca.win.t0 >= w_end:
                continue
            for cb in self.pstate[pb].cells:
                lo = max(ca.win.t0, cb.win.t0, w_start)
                hi = min(ca.win.t1, cb.win.t1, w_end)
                if lo >= hi:
                    continue
                pair = (ca.cid, cb.cid)
                if pair in self.spatial_pairs:
                    continue
                self.spatial_pairs.add(pair)
                a_src = _a_is_source(
                    self.cfg.strategy, self.d, self.phases,
                    (ca.win.t0, pa), (cb.win.t0, pb),
                )
                ca.win.faces.append(
                    Face("spatial", side_a, cb.cid, "source" if a_src else "sink")
                )
                cb.win.faces.append(
                    Face("spatial", side_b, ca.cid, "sink" if a_src else "source")
                )

    # -- instruction scheduling ---------------------------------------------

    def _sweep(self) -> None:
        progressed = True
        while progressed:
            progressed = False
            for p in self.patch_order:
                while self._try_schedule(self.pstate[p]):
                    progressed = True

    def _try_schedule(self, ps: _PatchState) -> bool:
        if ps.next_i >= len(ps.order):
            return False
        gi = ps.order[ps.next_i]
        ins = self.instructions[gi]
        cands = []
        for q in ins.patches:
            qs = self.pstate[q]
            if qs.next_i >= len(qs.order) or qs.order[qs.next_i] != gi:
                return False
            if qs.prev_gi is None:
                cands.append(ins.start_round)
            else:
                prev = self.instructions[qs.prev_gi]
                gap = ins.start_round - prev.end_round
                cands.append(self.exec_end[qs.prev_gi] + gap)
        if (
            self.cfg.stall_blocking
            and ins.conditional_on is not None
            and self.instructions[ins.conditional_on].blocking
        ):
            rel = self.releases.get(ins.conditional_on)
            if rel is None or not rel.resolved:
                return False
            cands.append(rel.resume)
        self._commit(gi, ins, max(cands))
        return True

    def _commit(self, gi: int, ins: Instruction, start: int) -> None:
        end = start + ins.duration
        self.exec_start[gi] = start
        self.exec_end[gi] = end
        skipped = False
        if ins.conditional_on is not None:
            skipped = self._rng(_COND, gi).random() >= 0.5
        label = "Idle" if skipped else ins.kind.value
        self.timeline.append(
            TraceSegment(gi, tuple(ins.patches), start, end, label, skipped)
        )
        for q in ins.patches:
            qs = self.pstate[q]
            if qs.birth is None:
                qs.birth = start
            qs.prev_gi = gi
            qs.next_i += 1
            self._ensure_upto(q, end)
            if qs.next_i >= len(qs.order):
                qs.death = end
                self._apply_death(q)
        if ins.merging and len(ins.patches) > 1:
            patches = list(ins.patches)
            for i, pa in enumerate(patches):
                for pb in patches[i + 1:]:
                    if abs(pa[0] - pb[0]) + abs(pa[1] - pb[1]) == 1:
                        self._connect(pa, pb, start, end)
        if ins.blocking:
            rel = _Release(gi, end)
            for q in ins.patches:
                for cell in self.pstate[q].cells:
                    if cell.win.t0 < end and cell.win.t1 > start:
                        rel.pending.add(cell)
                        cell.hooks.append(rel)
            self.releases[gi] = rel

    # -- generation ---------------------------------------------------------

    def _gen_value(self, cell: _Cell) -> int:
        g = cell.win.t1
        for f in cell.win.faces:
            if f.kind == "source":
                g = max(g, self.cells[f.neighbor].win.t1)
        return g

    def _on_gen(self, cid: int, v: int) -> None:
        cell = self.cells[cid]
        if cell.gen_fired or cell.vgen != v:
            return
        self._ensure_next(cell)
        g = self._gen_value(cell)
        if g > self.clock:
            cell.vgen += 1
            self._push(g, _PH_GEN, ("gen", cid, cell.vgen))
            return
        cell.gen_fired = True
        cell.gen_time = self.clock
        if self.spec_on and cell.win.source_faces():
            self._push(self.clock + self.cfg.t_spec, _PH_SPEC, ("spec", cid))
        self._try_start(cell)

    # -- speculation --------------------------------------------------------

    def _on_spec(self, cid: int) -> None:
        cell = self.cells[cid]
        if cell.verified_at is not None:
            return
        cell.spec_time = self.clock
        if self.cfg.speculation == "integrated":
            self._integrated_predict(cell)
        waiters = sorted(cell.waiters, key=lambda c: c.cid)
        cell.waiters.clear()
        for w in waiters:
            self._try_start(w)
        self._dispatch()

    # -- decode task lifecycle ----------------------------------------------

    def _try_start(self, cell: _Cell) -> None:
        if (
            not cell.gen_fired
            or cell.verified_at is not None
            or cell.running is not None
            or cell.done is not None
            or cell.queued
        ):
            return
        consumed = []
        for f in sorted(cell.win.sink_faces(), key=_tag):
            src = self.cells[f.neighbor]
            if src.verified_at is not None:
                consumed.append((f, src, "verified"))
            elif self.spec_on and src.spec_time is not None:
                consumed.append((f, src, "spec"))
            else:
                src.waiters.add(cell)
                return
        if self.cfg.processors is not None and self.running_count >= self.cfg.processors:
            cell.queued = True
            self.queue.append(cell)
            return
        self._start(cell, consumed)

    def _start(self, cell: _Cell, consumed: list) -> None:
        attempt = cell.attempts
        cell.attempts += 1
        rng = None
        if self.cfg.latency.kind == "empirical":
            rng = self._rng(_LAT, *cell.key, attempt)
        dur = decode_latency(cell.win.task_units, self.d, self.cfg.latency, rng)
        now = self.clock
        if cell.first_start is None:
            cell.first_start = now
        cell.running = (now, now + dur, attempt, tuple(consumed))
        for f, src, mode in consumed:
            if mode == "spec":
                src.spec_consumers.setdefault(_owner_tag(f), set()).add(cell)
        self.running_count += 1
        self.occupancy.append((now, self.running_count))
        self._push(now + dur, _PH_DONE, ("done", cell.cid, attempt))

    def _dispatch(self) -> None:
        if self.cfg.processors is None:
            return
        while self.queue and self.running_count < self.cfg.processors:
            cell = self.queue.popleft()
            cell.queued = False
            self._try_start(cell)

    def _unbind(self, cell: _Cell, consumed: tuple) -> None:
        for f, src, mode in consumed:
            if mode == "spec":
                src.spec_consumers.get(_owner_tag(f), set()).discard(cell)

    def _on_done(self, cid: int, attempt: int) -> None:
        cell = self.cells[cid]
        if cell.running is None or cell.running[2] != attempt:
            return
        start, end, _, consumed = cell.running
        cell.running = None
        self.running_count -= 1
        self.occupancy.append((self.clock, self.running_count))
        busy = end - start
        pending = {src for _, src, mode in consumed if mode == "spec" and src.verified_at is None}
        cell.done = (end, busy, consumed, pending)
        if pending:
            for src in pending:
                src.pending_children.add(cell)
        else:
            self._verify_cascade(cell)
        self._dispatch()

    # -- verification and recovery ------------------------------------------

    def _verify_cascade(self, root: _Cell) -> None:
        work = deque([root])
        while work:
            cell = work.popleft()
            if cell.verified_at is not None or cell.done is None or cell.done[3]:
                continue
            _, busy, consumed, _ = cell.done
            cell.done = None
            cell.final_consumed = consumed
            cell.verified_at = self.clock
            self.valid += busy
            for rel in cell.hooks:
                self._note_release(rel, self.clock)
            wrongs = self._judge_speculation(cell)
            for tag in wrongs:
                self.wrong_faces.add((cell.cid, tag))
                self.mispredictions += 1
            for tag in wrongs:
                self._recover(cell, tag)
            for child in sorted(cell.pending_children, key=lambda c: c.cid):
                child.done[3].discard(cell)
                if not child.done[3]:
                    work.append(child)
            cell.pending_children.clear()
            for w in sorted(cell.waiters, key=lambda c: c.cid):
                self._try_start(w)
            cell.waiters.clear()
        self._dispatch()
        if self._need_sweep:
            self._need_sweep = False
            self._sweep()

    def _judge_speculation(self, cell: _Cell) -> list[int]:
        if not self.spec_on:
            return []
        if self.cfg.speculation == "integrated":
            self._integrated_truth(cell)
            return sorted(
                tag for tag, pred in cell.pred.items() if pred != cell.truth[tag]
            )
        if cell.spec_time is None:
            return []
        wrongs = []
        for f in sorted(cell.win.source_faces(), key=_tag):
            tag = _tag(f)
            u = self._rng(_SPEC, *cell.key, tag).random()
            thr = self.cfg.accuracy
            if any(ident in self.wrong_faces for ident in self._adjacent_faces(cell, f)):
                thr = self.cfg.accuracy_adjacent
            if u > thr:
                wrongs.append(tag)
        return wrongs

    def _adjacent_faces(self, cell: _Cell, f: Face) -> set[tuple[int, int]]:
        """Identities (owner cell, owner tag) of faces meeting f at a corner."""
        out: set[tuple[int, int]] = set()
        nbr = self.cells[f.neighbor]
        for z in (cell, nbr):
            for g in z.win.faces:
                if _AXIS[g.side] == _AXIS[f.side]:
                    continue
                if g.kind == "source":
                    out.add((z.cid, _tag(g)))
                else:
                    out.add((g.neighbor, _owner_tag(g)))
        return out

    def _note_release(self, rel: _Release, now: int) -> None:
        if rel.resolved:
            return
        rel.release = max(rel.release, now)
        rel.pending = {c for c in rel.pending if c.verified_at is None}
        if rel.pending:
            return
        rel.resolved = True
        reaction = rel.release - rel.t_b
        self.reactions.append((rel.gi, reaction))
        blocks = (max(0, reaction) + 2 * self.d - 1) // (2 * self.d)
        rel.resume = rel.t_b + 2 * self.d * blocks
        self._need_sweep = True

    def _recover(self, src: _Cell, tag: int) -> None:
        targets = set(src.spec_consumers.get(tag, ()))
        if self.cfg.recovery in ("adjacent", "pessimistic"):
            face = next(f for f in src.win.source_faces() if _tag(f) == tag)
            for oid, otag in self._adjacent_faces(src, face):
                owner = self.cells[oid]
                if owner.verified_at is None:
                    targets |= owner.spec_consumers.get(otag, set())
        if self.cfg.recovery == "pessimistic":
            frontier = list(targets)
            seen = {c.cid for c in targets}
            while frontier:
                cur = frontier.pop()
                for f in cur.win.source_faces():
                    child = self.cells[f.neighbor]
                    if child.cid in seen:
                        continue
                    seen.add(child.cid)
                    frontier.append(child)
                    if child.verified_at is None and (child.running or child.done):
                        targets.add(child)
        now = self.clock
        for cell in sorted(targets, key=lambda c: c.cid):
            if cell.verified_at is not None:
                continue
            if cell.running is not None:
                start, _, _, consumed = cell.running
                self.wasted += now - start
                cell.running = None
                self.running_count -= 1
                self.occupancy.append((now, self.running_count))
                self._unbind(cell, consumed)
            elif cell.done is not None:
                _, busy, consumed, pending = cell.done
                self.wasted += busy
                cell.done = None
                for s in pending:
                    s.pending_children.discard(cell)
                self._unbind(cell, consumed)
            else:
                continue
            self._try_start(cell)
        self._dispatch()

    # -- integrated speculation ----------------------------------------------

    def _graph(self, cell: _Cell):
        if cell.graph is None:
            faces = sorted(cell.win.source_faces(), key=_tag)
            cell.plane_tags = tuple(_tag(f) for f in faces)
            cell.graph = build_window_graph(
                self.d, cell.win.rounds, [(f.orientation, f.side) for f in faces]
            )
        return cell.graph

    def _ensure_synd(self, cell: _Cell) -> None:
        if cell.synd is None:
            g = self._graph(cell)
            _, synd = g.sample_errors(self.cfg.noise_p, self._rng(_WIN, *cell.key))
            cell.synd = synd

    def _integrated_predict(self, cell: _Cell) -> None:
        self._ensure_synd(cell)
        g = cell.graph
        for i, tag in enumerate(cell.plane_tags):
            view = boundary_view(g, g.planes[i], cell.synd)
            cell.pred[tag] = predict_3step(view).bits

    def _integrated_truth(self, cell: _Cell) -> None:
        self._ensure_synd(cell)
        g = cell.graph
        bits = np.array(cell.synd.bits, copy=True)
        for f, src, _ in cell.final_consumed:
            toggles = src.truth[_owner_tag(f)]
            for nid in toggles.nonzero():
                loc = self._project(f, src, cell, int(nid))
                if loc is not None:
                    bits[int(g.node_id(*loc))] ^= 1
        try:
            m = decode(g, Syndrome(bits), mode="exact")
        except ExactCapExceeded:
            m = decode(g, Syndrome(bits), mode="greedy")
        for i, tag in enumerate(cell.plane_tags):
            cell.truth[tag] = extract_dependency_bits(m, g, g.planes[i])

    def _project(self, f: Face, src: _Cell, dst: _Cell, nid: int):
        """Map one source-plane toggle site into the consumer's frame."""
        t, r, c = (int(x) for x in src.graph.node_coords(nid))
        if f.orientation == "temporal":
            layer = 0 if f.side == "past" else dst.win.rounds - 1
            return (layer, r, c)
        t_local = src.win.t0 + t - dst.win.t0
        if not (0 <= t_local < dst.win.rounds):
            return None
        rows, cols = self.d - 1, (self.d + 1) // 2
        if f.side == "north":
            return (t_local, 0, c)
        if f.side == "south":
            return (t_local, rows - 1, c)
        if f.side == "west":
            return (t_local, r, 0)
        return (t_local, r, cols - 1)

    # -- run ------------------------------------------------------------------

    def run(self) -> SimResult:
        self._sweep()
        handlers = {"gen": self._on_gen, "done": self._on_done, "spec": self._on_spec}
        while self.heap:
            time, _, _, payload = heapq.heappop(self.heap)
            self.clock = time
            handlers[payload[0]](*payload[1:])
        missing = [i for i, s in enumerate(self.exec_start) if s is None]
        if missing:
            raise RuntimeError(f"scheduling deadlock; instructions never ran: {missing}")
        loose = [c.cid for c in self.cells if c.verified_at is None]
        if loose:
            raise RuntimeError(f"cells never verified: {loose}")
        return self._result()

    def _result(self) -> SimResult:
        runtime = max(e for e in self.exec_end if e is not None)
        occ: list[tuple[int, int]] = []
        for t, n in self.occupancy:
            if occ and occ[-1][0] == t:
                occ[-1] = (t, n)
            else:
                occ.append((t, n))
        log = []
        for p in self.patch_order:
            for i, cell in enumerate(self.pstate[p].cells):
                log.append(
                    CellRecord(
                        patch=p,
                        index=i,
                        t0=cell.win.t0,
                        t1=cell.win.t1,
                        gen_round=cell.gen_time,
                        first_start=cell.first_start,
                        verified_round=cell.verified_at,
                        attempts=cell.attempts,
                    )
                )
        return SimResult(
            runtime_rounds=runtime,
            runtime_us=runtime * self.cfg.round_time_us,
            reactions=sorted(self.reactions),
            timeline=sorted(self.timeline, key=lambda s: (s.start, s.instruction)),
            occupancy=occ,
            valid_compute=self.valid,
            wasted_compute=self.wasted,
            mispredictions=self.mispredictions,
            cell_log=log,
        )


# -- public entry points -----------------------------------------------------


def simulate(program: Program, cfg: SimConfig | None = None) -> SimResult:
    """Simulate one program run and return its full trace."""
    cfg = cfg or SimConfig()
    cfg.validate()
    diags = validate(program)
    if diags:
        raise ProgramError("; ".join(diags))
    if not program.instructions:
        raise ProgramError("program has no instructions")
    return _Engine(program, cfg).run()


def processor_heuristic(program: Program, cfg: SimConfig) -> int:
    """Processor count that keeps a limited run at unlimited-run speed.

    Probes the program with perfect speculation on unlimited processors,
    then pads the observed peak by the expected misprediction rework.
    """
    probe = replace(
        cfg,
        processors=None,
        speculation="stochastic",
        accuracy=1.0,
        accuracy_adjacent=1.0,
    )
    result = simulate(program, probe)
    peak, mean = occupancy_stats(result)
    eps = 1.0 - cfg.accuracy
    return max(1, int(math.ceil(peak + eps * mean - 1e-9)))
