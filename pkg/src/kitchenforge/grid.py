"""Kitchen layout representation, text serialization, and solvability checking.

A kitchen is a rectangular grid of single-character tile tokens. The token
alphabet has exactly 8 entries:

    h  human start       r  robot start
    c  counter           e  empty floor
    s  serve point       d  dish dispenser
    n  onion dispenser   p  pot (with stove)

Blocking tiles (B) stop agent movement but may still be interaction targets;
walkable tiles are everything else. A layout is solvable when the border is
fully blocking, object counts are within bounds, and every key tile can be
reached from the human start through walkable tiles (paths may end on a
blocking target but never pass through one).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

HUMAN = "h"
ROBOT = "r"
COUNTER = "c"
FLOOR = "e"
SERVE = "s"
DISH = "d"
ONION = "n"
POT = "p"

TOKENS = (HUMAN, ROBOT, COUNTER, FLOOR, SERVE, DISH, ONION, POT)

#: Tile types that impede agent movement.
BLOCKING = frozenset({COUNTER, SERVE, DISH, ONION, POT})
#: Tile types that must be reachable from the human start.
REACH_TARGETS = frozenset({FLOOR, SERVE, DISH, ONION, POT, ROBOT})
#: Station types with per-type count bounds of 1..2.
STATIONS = (SERVE, ONION, DISH, POT)

DEFAULT_WIDTH = 15
DEFAULT_HEIGHT = 10


class GridParseError(ValueError):
    """Raised for malformed layout text (bad token or ragged rows)."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class KitchenGrid:
    """Immutable rectangular grid of tile tokens, row-major."""

    width: int
    height: int
    tiles: tuple[str, ...]

    def __post_init__(self):
        if len(self.tiles) != self.width * self.height:
            raise ValueError("tiles length does not match width*height")

    def get(self, x: int, y: int) -> str:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise IndexError((x, y))
        return self.tiles[y * self.width + x]

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_border(self, x: int, y: int) -> bool:
        return x in (0, self.width - 1) or y in (0, self.height - 1)

    def find_all(self, token: str) -> list[tuple[int, int]]:
        return [
            (i % self.width, i // self.width)
            for i, t in enumerate(self.tiles)
            if t == token
        ]

    def with_tile(self, x: int, y: int, token: str) -> "KitchenGrid":
        if token not in TOKENS:
            raise ValueError(f"unknown token {token!r}")
        tiles = list(self.tiles)
        tiles[y * self.width + x] = token
        return KitchenGrid(self.width, self.height, tuple(tiles))

    def mirrored_horizontal(self) -> "KitchenGrid":
        tiles = []
        for y in range(self.height):
            row = self.tiles[y * self.width : (y + 1) * self.width]
            tiles.extend(reversed(row))
        return KitchenGrid(self.width, self.height, tuple(tiles))

    def mirrored_vertical(self) -> "KitchenGrid":
        tiles = []
        for y in reversed(range(self.height)):
            tiles.extend(self.tiles[y * self.width : (y + 1) * self.width])
        return KitchenGrid(self.width, self.height, tuple(tiles))

    def neighbors(self, x: int, y: int) -> list[tuple[int, int]]:
        out = []
        for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0)):
            nx, ny = x + dx, y + dy
            if self.in_bounds(nx, ny):
                out.append((nx, ny))
        return out


@dataclass
class Violation:
    """One violated solvability constraint with the offending locations."""

    kind: str
    message: str
    locations: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class SolvabilityReport:
    violations: list[Violation]

    @property
    def is_solvable(self) -> bool:
        return not self.violations


def parse_grid(text: str) -> KitchenGrid:
    """Parse a newline-separated block of tile tokens into a KitchenGrid."""
    lines = [ln.rstrip() for ln in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise GridParseError("empty layout", 1, 1)
    width = len(lines[0])
    tiles: list[str] = []
    for y, line in enumerate(lines):
        if len(line) != width:
            raise GridParseError(
                f"ragged row: expected width {width}, got {len(line)}",
                y + 1,
                len(line) + 1,
            )
        for x, ch in enumerate(line):
            if ch not in TOKENS:
                raise GridParseError(f"unknown token {ch!r}", y + 1, x + 1)
            tiles.append(ch)
    return KitchenGrid(width, len(lines), tuple(tiles))


def serialize_grid(grid: KitchenGrid) -> str:
    rows = [
        "".join(grid.tiles[y * grid.width : (y + 1) * grid.width])
        for y in range(grid.height)
    ]
    return "\n".join(rows) + "\n"


def reachable_from_human(grid: KitchenGrid) -> set[tuple[int, int]]:
    """Tiles reachable from the human start.

    Walkable tiles are traversed; blocking tiles are included when adjacent to
    a reached walkable tile (a path may terminate on them) but never expanded.
    Returns the empty set when there is no unique human start.
    """
    starts = grid.find_all(HUMAN)
    if len(starts) != 1:
        return set()
    seen = {starts[0]}
    queue = deque(starts)
    while queue:
        x, y = queue.popleft()
        if grid.get(x, y) in BLOCKING:
            continue
        for nx, ny in grid.neighbors(x, y):
            if (nx, ny) not in seen:
                seen.add((nx, ny))
                queue.append((nx, ny))
    return seen


def check_solvability(grid: KitchenGrid) -> SolvabilityReport:
    """Check border, count, and reachability constraints. Total function."""
    violations: list[Violation] = []

    bad_border = [
        (x, y)
        for y in range((grid.height))
        for x in range(grid.width)
        if grid.is_border(x, y) and grid.get(x, y) not in BLOCKING
    ]
    if bad_border:
        violations.append(
            Violation("border", "border tiles must be blocking-type", bad_border)
        )

    for token, name in ((HUMAN, "human start"), (ROBOT, "robot start")):
        locs = grid.find_all(token)
        if len(locs) != 1:
            violations.append(
                Violation("counts", f"{name} count {len(locs)} != 1", locs)
            )

    station_total = 0
    for token in STATIONS:
        locs = grid.find_all(token)
        station_total += len(locs)
        if len(locs) < 1:
            violations.append(Violation("counts", f"{token} count < 1", []))
        elif len(locs) > 2:
            violations.append(
                Violation("counts", f"{token} count {len(locs)} > 2", locs)
            )
    if station_total > 6:
        violations.append(
            Violation("counts", f"station total {station_total} > 6", [])
        )

    humans = grid.find_all(HUMAN)
    if len(humans) == 1:
        reached = reachable_from_human(grid)
        unreachable = [
            (x, y)
            for y in range(grid.height)
            for x in range(grid.width)
            if grid.get(x, y) in REACH_TARGETS and (x, y) not in reached
        ]
        if unreachable:
            violations.append(
                Violation(
                    "reachability",
                    "key tiles unreachable from human start",
                    unreachable,
                )
            )

    return SolvabilityReport(violations)
