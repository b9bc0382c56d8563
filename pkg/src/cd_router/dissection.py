"""Laminar dissection of a path into nested blocks, plain and shifted.

A ladder of block lengths is produced by repeated square-rooting (on the
exponent, so every length stays a power of two) until blocks are at most
delta^2 long. Each level carries a waiting budget: the root level's budget
equals the whole path length, deeper levels get the fourth root of their
block length, rounded up to a power of two.

The plain tree aligns all levels at position 1; the shifted tree offsets each
sublevel by half its block length (so coarser boundaries sit mid-block one
level down) and distributes waiting over designated edges: position j with
odd(j) * 2^q form is handled by level L - q, and positions divisible by 2^L
stay unassigned.
"""
from __future__ import annotations

from dataclasses import dataclass


class LadderError(ValueError):
    pass


@dataclass(frozen=True)
class Level:
    block_len: int
    wait_budget: int


@dataclass(frozen=True)
class LevelLadder:
    length: int  # common (padded) path length, a power of two
    delta: int
    levels: tuple[Level, ...]

    @property
    def depth(self) -> int:
        """Index of the last level (number of sublevels)."""
        return len(self.levels) - 1

    def sublevel_budget_sum(self) -> int:
        """Sum over sublevels of (#blocks * budget); bounded by 2 * length."""
        return sum(
            (self.length // lv.block_len) * lv.wait_budget for lv in self.levels[1:]
        )

    def total_wait_budget(self) -> int:
        """Waiting issued to one packet by a full plain assignment (any values)."""
        return self.levels[0].wait_budget + self.sublevel_budget_sum()

    def horizon(self, buffered: bool = False) -> int:
        """Upper bound on any crossing slot under the policy."""
        if not buffered:
            return self.length + self.total_wait_budget()
        per_level = sum(
            (self.length // lv.block_len + 1) * lv.wait_budget for lv in self.levels[1:]
        )
        return self.length + self.levels[0].wait_budget + per_level


def build_ladder(length: int, delta: int) -> LevelLadder:
    """Block-length ladder for a path of `length` edges (power of two).

    Exponent recurrence e -> ceil(e/2), stopping at the first level whose
    block length is at most delta^2. Budgets: root = length, deeper levels
    2^ceil(e/4) (fourth root rounded up to a power of two).
    """
    if length < 1 or length & (length - 1):
        raise LadderError(f"path length {length} is not a power of two")
    if delta < 1:
        raise LadderError(f"delta {delta} must be at least 1")
    if length >= 2 and delta < 2:
        raise LadderError("delta must be at least 2 for paths of length >= 2")
    if length < delta:
        raise LadderError(f"path too short for ladder: length {length} < delta {delta}")
    exps = [length.bit_length() - 1]
    while (1 << exps[-1]) > delta * delta:
        exps.append((exps[-1] + 1) // 2)
    levels = [Level(block_len=length, wait_budget=length)]
    for e in exps[1:]:
        levels.append(Level(block_len=1 << e, wait_budget=1 << -(-e // 4)))
    return LevelLadder(length=length, delta=delta, levels=tuple(levels))


@dataclass(frozen=True)
class Block:
    level: int
    index: int
    start: int  # first edge position; may be < 1 in the shifted tree
    end: int    # last edge position; may be > length in the shifted tree
    assigned: tuple[int, ...] = ()  # shifted tree only; notional, may leave [1, length]


class BlockTree:
    """Aligned dissection: every level partitions positions 1..length."""

    kind = "plain"

    def __init__(self, ladder: LevelLadder):
        self.ladder = ladder
        self.length = ladder.length
        self._blocks: list[list[Block]] = []
        for level, lv in enumerate(ladder.levels):
            row = [
                Block(level, b, b * lv.block_len + 1, (b + 1) * lv.block_len)
                for b in range(self.length // lv.block_len)
            ]
            self._blocks.append(row)

    def n_blocks(self, level: int) -> int:
        return len(self._blocks[level])

    def blocks(self, level: int) -> list[Block]:
        return self._blocks[level]

    def block_index(self, level: int, pos: int) -> int:
        return (pos - 1) // self.ladder.levels[level].block_len

    def dump(self) -> str:
        lines = [f"ladder: delta={self.ladder.delta} length={self.length} kind={self.kind}"]
        for level, lv in enumerate(self.ladder.levels):
            spans = " ".join(f"[{b.start}..{b.end}]" for b in self._blocks[level])
            lines.append(f"level {level}: D={lv.block_len} W={lv.wait_budget} | {spans}")
        return "\n".join(lines)


def dissect_plain(ladder: LevelLadder) -> BlockTree:
    tree = BlockTree(ladder)
    # laminar sanity: each level partitions the path and nests in the one above
    for level in range(1, len(ladder.levels)):
        assert ladder.levels[level - 1].block_len % ladder.levels[level].block_len == 0
    return tree


def assigned_level(pos: int, depth: int) -> int | None:
    """Level handling edge position `pos` in a shifted tree of given depth.

    pos = odd * 2^q maps to level depth - q for q in 0..depth-1; positions
    divisible by 2^depth (including the top level's q) get nothing. Extends to
    non-positive positions via the same 2-adic pattern.
    """
    if depth == 0:
        return None
    step = 1 << depth
    residue = pos % step
    if residue == 0:
        return None
    q = (residue & -residue).bit_length() - 1
    return depth - q


class ShiftedBlockTree:
    """Shifted dissection with per-edge waiting duty.

    Sublevel blocks are offset by half their length, so each block's middle
    node falls on the grid of the level above; the first and last block of a
    level are truncated at the path ends but keep their notional interval
    (waiting duty landing before position 1 is served at the source, duty
    past the path end lapses at the sink).
    """

    kind = "buffered"

    def __init__(self, ladder: LevelLadder):
        self.ladder = ladder
        self.length = ladder.length
        self.depth = ladder.depth
        self._blocks: list[list[Block]] = [[Block(0, 0, 1, self.length)]]
        for level in range(1, len(ladder.levels)):
            lv = ladder.levels[level]
            half = lv.block_len // 2
            row = []
            for b in range(self.length // lv.block_len + 1):
                start = b * lv.block_len - half + 1
                end = b * lv.block_len + half
                row.append(Block(level, b, start, end, self._assigned(level, start, end)))
            self._blocks.append(row)
        self._check_budget_coverage()

    def _assigned(self, level: int, start: int, end: int) -> tuple[int, ...]:
        q = self.depth - level
        step = 1 << (q + 1)
        offset = 1 << q
        first = start + (offset - start) % step
        return tuple(range(first, end + 1, step))

    def _check_budget_coverage(self) -> None:
        for level in range(1, len(self.ladder.levels)):
            budget = self.ladder.levels[level].wait_budget
            for block in self._blocks[level]:
                if len(block.assigned) < budget:
                    raise LadderError(
                        f"level {level} block {block.index} has "
                        f"{len(block.assigned)} duty edges < budget {budget}"
                    )

    def n_blocks(self, level: int) -> int:
        return len(self._blocks[level])

    def blocks(self, level: int) -> list[Block]:
        return self._blocks[level]

    def block_index(self, level: int, pos: int) -> int:
        if level == 0:
            return 0
        d = self.ladder.levels[level].block_len
        return (pos - 1 + d // 2) // d

    def dump(self) -> str:
        lines = [f"ladder: delta={self.ladder.delta} length={self.length} kind={self.kind}"]
        for level, lv in enumerate(self.ladder.levels):
            parts = []
            for b in self._blocks[level]:
                clipped_start, clipped_end = max(1, b.start), min(self.length, b.end)
                mark = "*" if (b.start != clipped_start or b.end != clipped_end) else ""
                parts.append(f"[{clipped_start}..{clipped_end}]{mark}")
            lines.append(
                f"level {level}: D={lv.block_len} W={lv.wait_budget} | " + " ".join(parts)
            )
        return "\n".join(lines)


def dissect_shifted(ladder: LevelLadder) -> ShiftedBlockTree:
    return ShiftedBlockTree(ladder)
