"""Lattice-surgery program representation.

A program is a list of timed instructions acting on surface-code patches
laid out on a rectangular grid.  Rounds are integer QEC rounds; a patch is
active from the first round of its first instruction to the last round of
its last instruction and generates one round of syndrome data per round
while active.  ``TTeleport`` instructions are blocking: the device must
stall the instruction's patches until the decoder has caught up before any
dependent conditional correction can be applied.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

__all__ = [
    "PatchId",
    "InstructionKind",
    "Instruction",
    "Program",
    "ProgramError",
    "SchemaError",
    "OverlapError",
    "ConditionalError",
    "parse_program",
    "serialize_program",
    "validate",
    "builtin_program",
    "BUILTIN_PROGRAMS",
]

PatchId = tuple[int, int]

PROGRAM_FORMAT = 1


class ProgramError(ValueError):
    """Base error for malformed programs."""


class SchemaError(ProgramError):
    """Raised when program JSON violates the schema."""


class OverlapError(ProgramError):
    """Raised when two instructions occupy the same (patch, round)."""


class ConditionalError(ProgramError):
    """Raised when a conditional reference is dangling or ill-typed."""


class InstructionKind(str, Enum):
    IDLE = "Idle"
    MERGE_ZZ = "MergeZZ"
    MERGE_XX = "MergeXX"
    SPLIT = "Split"
    T_TELEPORT = "TTeleport"
    MEASURE = "Measure"
    S_GATE = "SGate"
    Y_MEASURE = "YMeasure"


# Kinds whose multi-patch footprint couples the patches into one decoding
# region for the duration of the instruction.
MERGING_KINDS = frozenset(
    {
        InstructionKind.MERGE_ZZ,
        InstructionKind.MERGE_XX,
        InstructionKind.SPLIT,
        InstructionKind.T_TELEPORT,
    }
)


@dataclass(frozen=True)
class Instruction:
    """One timed operation on one or more patches.

    Args:
        kind: Operation type.
        patches: Patches occupied for the full duration, including any
            ancilla or routing patches.
        start_round: First syndrome round of the operation (nominal
            schedule; the simulator may shift it later in time).
        duration: Number of rounds occupied, at least 1.
        conditional_on: Index of an earlier blocking instruction whose
            decoded outcome gates this operation, or None.
    """

    kind: InstructionKind
    patches: tuple[PatchId, ...]
    start_round: int
    duration: int
    conditional_on: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", InstructionKind(self.kind))
        object.__setattr__(
            self, "patches", tuple((int(r), int(c)) for r, c in self.patches)
        )
        if not self.patches:
            raise SchemaError("instruction requires at least one patch")
        if len(set(self.patches)) != len(self.patches):
            raise SchemaError(f"duplicate patches in {self.kind.value}")
        if self.duration < 1:
            raise SchemaError(f"duration must be >= 1, got {self.duration}")
        if self.start_round < 0:
            raise SchemaError(f"start_round must be >= 0, got {self.start_round}")

    @property
    def blocking(self) -> bool:
        return self.kind is InstructionKind.T_TELEPORT

    @property
    def end_round(self) -> int:
        """Exclusive end round."""
        return self.start_round + self.duration

    @property
    def merging(self) -> bool:
        return self.kind in MERGING_KINDS and len(self.patches) > 1


@dataclass
class Program:
    """A lattice-surgery program on a patch grid.

    Args:
        distance: Code distance d (odd, >= 3); also the default window
            cell height in rounds.
        grid: (rows, cols) extent of the patch grid.
        instructions: Instructions in nominal schedule order.
        name: Optional label used in traces and output files.
    """

    distance: int
    grid: tuple[int, int]
    instructions: list[Instruction] = field(default_factory=list)
    name: str = "program"

    def __post_init__(self):
        if self.distance < 3 or self.distance % 2 == 0:
            raise SchemaError(f"distance must be odd and >= 3, got {self.distance}")
        rows, cols = self.grid
        if rows < 1 or cols < 1:
            raise SchemaError(f"grid must be at least 1x1, got {self.grid}")
        self.grid = (int(rows), int(cols))

    @property
    def patches(self) -> list[PatchId]:
        seen: dict[PatchId, None] = {}
        for inst in self.instructions:
            for p in inst.patches:
                seen.setdefault(p)
        return list(seen)

    def instructions_on(self, patch: PatchId) -> list[int]:
        """Indices of instructions touching ``patch``, by nominal start."""
        idx = [i for i, inst in enumerate(self.instructions) if patch in inst.patches]
        idx.sort(key=lambda i: (self.instructions[i].start_round, i))
        return idx

    def patch_interval(self, patch: PatchId) -> tuple[int, int]:
        """Nominal [first, last) active rounds of ``patch``."""
        starts = [i.start_round for i in self.instructions if patch in i.patches]
        ends = [i.end_round for i in self.instructions if patch in i.patches]
        if not starts:
            raise ProgramError(f"patch {patch} never used")
        return min(starts), max(ends)

    @property
    def end_round(self) -> int:
        return max((i.end_round for i in self.instructions), default=0)


def validate(program: Program) -> list[str]:
    """Check program invariants and return a list of diagnostics.

    An empty list means the program is valid.  Checks grid bounds,
    spacetime exclusivity (no two instructions on the same patch in the
    same round), and conditional reference validity.
    """
    diags: list[str] = []
    rows, cols = program.grid
    for i, inst in enumerate(program.instructions):
        for r, c in inst.patches:
            if not (0 <= r < rows and 0 <= c < cols):
                diags.append(f"instruction {i}: patch ({r},{c}) outside grid {program.grid}")
    # Spacetime exclusivity via per-patch interval sweep.
    by_patch: dict[PatchId, list[tuple[int, int, int]]] = {}
    for i, inst in enumerate(program.instructions):
        for p in inst.patches:
            by_patch.setdefault(p, []).append((inst.start_round, inst.end_round, i))
    for p, spans in by_patch.items():
        spans.sort()
        for (s0, e0, i0), (s1, e1, i1) in zip(spans, spans[1:]):
            if s1 < e0:
                diags.append(
                    f"instructions {i0} and {i1} overlap on patch {p} at round {s1}"
                )
    for i, inst in enumerate(program.instructions):
        if inst.conditional_on is None:
            continue
        j = inst.conditional_on
        if inst.kind is not InstructionKind.S_GATE:
            diags.append(f"instruction {i}: conditional_on only allowed on SGate")
            continue
        if not (0 <= j < len(program.instructions)):
            diags.append(f"instruction {i}: conditional_on {j} out of range")
            continue
        target = program.instructions[j]
        if not target.blocking:
            diags.append(f"instruction {i}: conditional target {j} is not blocking")
        if target.start_round >= inst.start_round:
            diags.append(f"instruction {i}: conditional target {j} does not precede it")
    return diags


def _require_valid(program: Program) -> Program:
    for diag in validate(program):
        if "overlap" in diag:
            raise OverlapError(diag)
        if "conditional" in diag:
            raise ConditionalError(diag)
        raise SchemaError(diag)
    return program


def serialize_program(program: Program) -> dict:
    """Serialize to the JSON-compatible program schema (format 1)."""
    return {
        "format": PROGRAM_FORMAT,
        "name": program.name,
        "distance": program.distance,
        "grid": {"rows": program.grid[0], "cols": program.grid[1]},
        "instructions": [
            {
                "kind": inst.kind.value,
                "patches": [list(p) for p in inst.patches],
                "start_round": inst.start_round,
                "duration": inst.duration,
                **(
                    {"conditional_on": inst.conditional_on}
                    if inst.conditional_on is not None
                    else {}
                ),
            }
            for inst in program.instructions
        ],
    }


def parse_program(source: str | dict) -> Program:
    """Parse and validate a program from JSON text or a decoded dict.

    Raises SchemaError, OverlapError, or ConditionalError with a
    diagnostic message on the first violation found.
    """
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    else:
        data = source
    if not isinstance(data, dict):
        raise SchemaError("program must be a JSON object")
    if data.get("format") != PROGRAM_FORMAT:
        raise SchemaError(f"unsupported format {data.get('format')!r}")
    try:
        grid = (int(data["grid"]["rows"]), int(data["grid"]["cols"]))
        raw_instructions = data["instructions"]
        distance = int(data["distance"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"missing or malformed field: {exc}") from exc
    instructions = []
    for k, raw in enumerate(raw_instructions):
        try:
            instructions.append(
                Instruction(
                    kind=InstructionKind(raw["kind"]),
                    patches=tuple((int(r), int(c)) for r, c in raw["patches"]),
                    start_round=int(raw["start_round"]),
                    duration=int(raw["duration"]),
                    conditional_on=(
                        int(raw["conditional_on"])
                        if raw.get("conditional_on") is not None
                        else None
                    ),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ProgramError):
                raise
            raise SchemaError(f"instruction {k}: {exc}") from exc
    program = Program(
        distance=distance,
        grid=grid,
        instructions=instructions,
        name=str(data.get("name", "program")),
    )
    return _require_valid(program)


# ---------------------------------------------------------------------------
# Built-in programs


def _repeated_t(d: int, count: int = 10, gap: int = 0) -> Program:
    """`count` T teleportations on one idling logical qubit.

    Each TTeleport (d rounds) is followed by an SGate conditioned on its
    outcome; the S fires with probability 1/2 at simulation time.  The
    nominal period is 2d rounds per T (a leading idle and the post-S slack
    keep every teleportation ending on a window boundary); ``gap`` adds
    idle rounds between iterations.
    """
    patch = (0, 0)
    instructions: list[Instruction] = [
        Instruction(InstructionKind.IDLE, (patch,), 0, d)
    ]
    t = d
    for _ in range(count):
        t_idx = len(instructions)
        instructions.append(
            Instruction(InstructionKind.T_TELEPORT, (patch,), t, d)
        )
        instructions.append(
            Instruction(
                InstructionKind.S_GATE, (patch,), t + d, 2, conditional_on=t_idx
            )
        )
        t += 2 * d + gap
    return Program(d, (1, 1), instructions, name=f"repeated_t[{count}]")


def _msd_15to1(d: int) -> Program:
    """15-to-1 magic state distillation on a 4x8 patch footprint.

    Five row merges build the encoding, then 15 T teleportations (half-d
    merges against freshly injected states on rows 1 and 3) are consumed,
    each followed by a conditional S on its target patch.  The output
    patch (0,7) is measured last.
    """
    half = d // 2
    instructions: list[Instruction] = []

    def add(kind, patches, start, dur, cond=None):
        instructions.append(Instruction(kind, tuple(patches), start, dur, cond))
        return len(instructions) - 1

    route = [(1, c) for c in range(8)]
    merges = [
        [(0, 0), (0, 1), (0, 2), (0, 3), (2, 0), (2, 1), (2, 2), (2, 4)] + route[:5],
        [(0, 0), (0, 1), (0, 4), (0, 5), (2, 0), (2, 1), (2, 3), (2, 5)] + route[:6],
        [(0, 0), (0, 2), (0, 4), (0, 6), (2, 0), (2, 2), (2, 3), (2, 6)] + route[:7],
        [(0, 0), (0, 3), (0, 5), (0, 6), (2, 1), (2, 2), (2, 3), (2, 7)] + route[:8],
        [(0, c) for c in range(8)] + route[:8],
    ]
    for k, patches in enumerate(merges):
        add(InstructionKind.MERGE_ZZ, patches, k * d, d)

    # Row-3 injections run beside the final row merge; row-1 injections
    # wait for the routing row to free up.
    for c in range(8):
        add(InstructionKind.IDLE, [(3, c)], 4 * d, d)
    lower_t = []
    for c in range(8):
        lower_t.append(
            add(InstructionKind.T_TELEPORT, [(3, c), (2, c)], 5 * d, half)
        )
    for c in range(7):
        add(InstructionKind.IDLE, [(1, c)], 5 * d, d)
    upper_t = []
    for c in range(7):
        upper_t.append(
            add(InstructionKind.T_TELEPORT, [(1, c), (0, c)], 6 * d, half)
        )

    for c in range(8):
        add(InstructionKind.IDLE, [(2, c)], 5 * d + half, half)
        add(InstructionKind.S_GATE, [(2, c)], 6 * d, 2, cond=lower_t[c])
        add(InstructionKind.MEASURE, [(2, c)], 6 * d + 2, 1)
    for c in range(7):
        add(InstructionKind.IDLE, [(0, c)], 6 * d + half, half)
        add(InstructionKind.S_GATE, [(0, c)], 7 * d, 2, cond=upper_t[c])
        add(InstructionKind.MEASURE, [(0, c)], 7 * d + 2, 1)
    add(InstructionKind.MEASURE, [(0, 7)], 7 * d + 3, 1)
    return Program(d, (4, 8), instructions, name="msd_15to1")


def _zigzag_chain(d: int, count: int = 100) -> Program:
    """Idle-duration workload whose window graph is one zig-zag chain.

    Patches step down a grid staircase; each patch overlaps its successor
    for d rounds under a merge, so consecutive window boundaries alternate
    between temporal and spatial orientation (always mutually adjacent).
    ``count`` is the total number of window cells and must be even and
    >= 4.
    """
    if count < 4 or count % 2:
        raise ProgramError(f"zigzag_chain needs an even count >= 4, got {count}")
    m = count // 2
    coords = [(i // 2, (i + 1) // 2) for i in range(m)]
    instructions = [Instruction(InstructionKind.IDLE, (coords[0],), 0, d)]
    for i in range(m - 1):
        instructions.append(
            Instruction(
                InstructionKind.MERGE_ZZ,
                (coords[i], coords[i + 1]),
                (i + 1) * d,
                d,
            )
        )
    instructions.append(Instruction(InstructionKind.IDLE, (coords[-1],), m * d, d))
    rows = max(r for r, _ in coords) + 1
    cols = max(c for _, c in coords) + 1
    return Program(d, (rows, cols), instructions, name=f"zigzag_chain[{count}]")


def _toffoli(d: int) -> Program:
    """Schematic Toffoli: 7 T teleportations across three data patches.

    Three data patches share a workspace row with magic-state patches; the
    T gates alternate over the data patches with conditional S fixups.
    Footprint is 3x3 patches.
    """
    data = [(0, 0), (0, 1), (0, 2)]
    magic = [(1, 0), (1, 1), (1, 2)]
    instructions: list[Instruction] = []
    instructions.append(
        Instruction(InstructionKind.MERGE_ZZ, tuple(data + [(1, 0), (1, 1), (1, 2)]), 0, d)
    )
    t = d
    for k in range(7):
        q = data[k % 3]
        a = magic[k % 3]
        t_idx = len(instructions)
        instructions.append(Instruction(InstructionKind.T_TELEPORT, (q, a), t, d))
        instructions.append(
            Instruction(InstructionKind.S_GATE, (q,), t + d, 2, conditional_on=t_idx)
        )
        t += d + 2
    for q in data:
        instructions.append(Instruction(InstructionKind.MEASURE, (q,), t, 1))
    return Program(d, (2, 3), instructions, name="toffoli")


BUILTIN_PROGRAMS = {
    "repeated_t": _repeated_t,
    "msd_15to1": _msd_15to1,
    "zigzag_chain": _zigzag_chain,
    "toffoli": _toffoli,
}


def builtin_program(name: str, d: int, **params) -> Program:
    """Build one of the bundled benchmark programs at distance ``d``."""
    try:
        builder = BUILTIN_PROGRAMS[name]
    except KeyError:
        raise ProgramError(
            f"unknown builtin {name!r}; available: {sorted(BUILTIN_PROGRAMS)}"
        ) from None
    return _require_valid(builder(d, **params))
