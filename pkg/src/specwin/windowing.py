"""Window tiling and boundary ownership.

Every patch's active lifetime is tiled into consecutive d-round window
cells starting at the patch's first active round (the final cell may be
shorter).  Consecutive cells of one patch share a temporal face, and a
multi-patch merging instruction puts spatial faces between overlapping
cells of grid-adjacent participants.

Each shared face is then owned by exactly one side (the source), which
decodes the d-deep buffer past the face and hands dependency bits to
the other side (the sink):

* sliding: every face feeds forward, earlier cell first, lower patch
  first on simultaneous spatial faces.
* parallel: cells are two-colored by time layer plus a patch
  checkerboard; one color owns every face around it.
* aligned: parallel, except each patch's coloring is phase-shifted so
  that the cell finishing that patch's first conditional-source
  instruction lands on the owning color.

Color ties (possible between phase-shifted patches) fall back to the
sliding rule, yielding mixed cells rather than a failure.

A cell's volume counts its commit region plus one d^3 unit per owned
buffer.  Its decode task additionally re-covers received buffer regions
when it owns none itself (a pure sink decodes commit plus every
neighboring buffer).
"""
from __future__ import annotations

import graphlib
from dataclasses import dataclass, field

from .program import Instruction, PatchId, Program

__all__ = [
    "Face",
    "WindowCell",
    "WindowGraph",
    "STRATEGIES",
    "SOURCE_COLOR",
    "build_windows",
    "aligned_phases",
    "cell_color",
    "checkerboard",
    "patch_activity",
    "tile_interval",
]

STRATEGIES = ("sliding", "parallel", "aligned")
SOURCE_COLOR = 0

_SPATIAL_SIDE = {(-1, 0): "north", (1, 0): "south", (0, -1): "west", (0, 1): "east"}


@dataclass
class Face:
    orientation: str
    side: str
    neighbor: int
    kind: str


@dataclass
class WindowCell:
    """One d-round commit region on one patch, with its boundary faces."""

    id: int
    patch: PatchId
    t0: int
    t1: int
    d: int
    faces: list[Face] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return self.t1 - self.t0

    @property
    def commit_units(self) -> float:
        return self.rounds / self.d

    def source_faces(self) -> list[Face]:
        return [f for f in self.faces if f.kind == "source"]

    def sink_faces(self) -> list[Face]:
        return [f for f in self.faces if f.kind == "sink"]

    @property
    def volume(self) -> float:
        """Commit region plus owned buffers, in d^3 units."""
        return self.commit_units + len(self.source_faces())

    @property
    def task_units(self) -> float:
        """Decode problem size in d^3 units.

        Received buffers add no volume while the cell owns at least one
        buffer of its own; a pure sink re-covers everything it receives.
        """
        sources = len(self.source_faces())
        if sources:
            return self.volume
        return self.volume + len(self.sink_faces())


def checkerboard(patch: PatchId) -> int:
    return (patch[0] + patch[1]) % 2


def cell_color(t0: int, d: int, patch: PatchId, phase: int = 0) -> int:
    return (t0 // d + checkerboard(patch) + phase) % 2


def patch_activity(program: Program) -> dict[PatchId, tuple[int, int]]:
    """First and last active round per patch."""
    spans: dict[PatchId, tuple[int, int]] = {}
    for ins in program.instructions:
        for p in ins.patches:
            lo, hi = spans.get(p, (ins.start_round, ins.end_round))
            spans[p] = (min(lo, ins.start_round), max(hi, ins.end_round))
    return spans


def tile_interval(birth: int, death: int, d: int) -> list[tuple[int, int]]:
    return [(t, min(t + d, death)) for t in range(birth, death, d)]


def aligned_phases(program: Program) -> dict[PatchId, int]:
    """Per-patch color phases for the aligned strategy.

    Each patch's phase makes the cell holding the final round of its
    earliest blocking instruction an owner; patches never blocked keep
    the parallel coloring.
    """
    first_blocking: dict[PatchId, Instruction] = {}
    for ins in sorted(program.instructions, key=lambda i: i.start_round):
        if not ins.blocking:
            continue
        for p in ins.patches:
            first_blocking.setdefault(p, ins)
    spans = patch_activity(program)
    phases: dict[PatchId, int] = {}
    for p, ins in first_blocking.items():
        birth = spans[p][0]
        cell_start = birth + ((ins.end_round - 1 - birth) // program.distance) * program.distance
        phases[p] = (cell_color(cell_start, program.distance, p) - SOURCE_COLOR) % 2
    return phases


def _a_is_source(
    strategy: str,
    d: int,
    phases: dict[PatchId, int],
    a: tuple[int, PatchId],
    b: tuple[int, PatchId],
) -> bool:
    """Decide face ownership between cells keyed by (t0, patch)."""
    if strategy != "sliding":
        ca = cell_color(a[0], d, a[1], phases.get(a[1], 0))
        cb = cell_color(b[0], d, b[1], phases.get(b[1], 0))
        if ca != cb:
            return ca == SOURCE_COLOR
    return a < b


@dataclass
class WindowGraph:
    strategy: str
    d: int
    cells: list[WindowCell]
    by_patch: dict[PatchId, list[int]]
    edges: list[tuple[int, int]]

    def cell(self, cid: int) -> WindowCell:
        return self.cells[cid]

    def generation_complete(self, cid: int) -> int:
        """Round by which the cell's commit and owned buffers all exist."""
        cell = self.cells[cid]
        done = cell.t1
        for f in cell.source_faces():
            done = max(done, self.cells[f.neighbor].t1)
        return done

    def topological_order(self) -> list[int]:
        ts = graphlib.TopologicalSorter({c.id: set() for c in self.cells})
        for src, dst in self.edges:
            ts.add(dst, src)
        return list(ts.static_order())

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "d": self.d,
            "cells": [
                {
                    "id": c.id,
                    "patch": list(c.patch),
                    "start": c.t0,
                    "end": c.t1,
                    "volume": c.volume,
                    "task_units": c.task_units,
                    "faces": [
                        {
                            "orientation": f.orientation,
                            "side": f.side,
                            "neighbor": f.neighbor,
                            "kind": f.kind,
                        }
                        for f in c.faces
                    ],
                }
                for c in self.cells
            ],
            "edges": [list(e) for e in self.edges],
        }


def build_windows(program: Program, strategy: str = "sliding") -> WindowGraph:
    """Tile the program's nominal schedule and assign face ownership."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    d = program.distance
    phases = aligned_phases(program) if strategy == "aligned" else {}

    cells: list[WindowCell] = []
    by_patch: dict[PatchId, list[int]] = {}
    activity = patch_activity(program)
    for patch in sorted(activity):
        birth, death = activity[patch]
        ids = []
        for t0, t1 in tile_interval(birth, death, d):
            cells.append(WindowCell(len(cells), patch, t0, t1, d))
            ids.append(cells[-1].id)
        by_patch[patch] = ids

    pairs: set[tuple[int, int]] = set()
    for patch, ids in by_patch.items():
        for prev, nxt in zip(ids, ids[1:]):
            pairs.add((prev, nxt))
    spatial: set[tuple[int, int]] = set()
    for ins in program.instructions:
        if not ins.merging:
            continue
        ps = sorted(ins.patches)
        for i, p in enumerate(ps):
            for q in ps[i + 1 :]:
                dr, dc = q[0] - p[0], q[1] - p[1]
                if (dr, dc) not in _SPATIAL_SIDE:
                    continue
                for cp in by_patch[p]:
                    for cq in by_patch[q]:
                        lo = max(cells[cp].t0, cells[cq].t0, ins.start_round)
                        hi = min(cells[cp].t1, cells[cq].t1, ins.end_round)
                        if lo < hi:
                            spatial.add((cp, cq))

    edges: list[tuple[int, int]] = []

    def connect(ca: int, cb: int, orientation: str, side_a: str, side_b: str):
        a, b = cells[ca], cells[cb]
        a_src = _a_is_source(strategy, d, phases, (a.t0, a.patch), (b.t0, b.patch))
        a_kind, b_kind = ("source", "sink") if a_src else ("sink", "source")
        a.faces.append(Face(orientation, side_a, cb, a_kind))
        b.faces.append(Face(orientation, side_b, ca, b_kind))
        edges.append((ca, cb) if a_src else ((cb, ca)))

    for prev, nxt in sorted(pairs):
        connect(prev, nxt, "temporal", "future", "past")
    for cp, cq in sorted(spatial):
        p, q = cells[cp].patch, cells[cq].patch
        side = _SPATIAL_SIDE[(q[0] - p[0], q[1] - p[1])]
        opposite = _SPATIAL_SIDE[(p[0] - q[0], p[1] - q[1])]
        connect(cp, cq, "spatial", side, opposite)

    graph = WindowGraph(strategy, d, cells, by_patch, edges)
    graph.topological_order()
    return graph
