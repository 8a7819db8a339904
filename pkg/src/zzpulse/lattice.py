"""Qubit coupling graphs, driving patterns, and commuting-block decomposition.

A driven subset of a ZZ-coupled array is chosen so that the total Hamiltonian
splits into mutually commuting star-shaped blocks: a connected set of driven
qubits in the center plus its undriven neighbors on the boundary.  A pattern
is usable when

  (a) every undriven qubit has at least one driven neighbor,
  (b) every coupling edge touches at least one driven qubit,
  (c) driven qubits are never adjacent unless the edge is a designated
      gate pair (two-qubit-gate block).

Honeycomb patches use a brick-wall embedding: vertices live on a grid with
all horizontal bonds present and vertical bonds only where (row + col) is
even.  Vertices are numbered row-major over the kept grid points, so pattern
generation is reproducible from the (row, col) coordinates stored on the
graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

Edge = tuple[int, int, float]

GEOMETRIES = ("honeycomb", "square", "chain", "custom")

# degree caps implied by nearest-neighbor connectivity of each geometry
_MAX_DEGREE = {"honeycomb": 3, "square": 4, "chain": 2}

# largest supported block: square-lattice two-qubit block (5 driven + 8 boundary)
MAX_BLOCK_QUBITS = 13


def _norm_pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class QubitGraph:
    """Immutable array description: vertices, ZZ-coupled edges, geometry.

    Couplings are in units of the nominal coupling strength.  ``positions``
    holds the (row, col) embedding coordinate of each vertex for generated
    geometries; it is ``None`` for custom graphs.
    """

    num_qubits: int
    edges: tuple[Edge, ...]
    geometry: str = "custom"
    positions: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        seen = set()
        for i, j, coupling in self.edges:
            if not (0 <= i < self.num_qubits and 0 <= j < self.num_qubits):
                raise ValueError(f"edge ({i},{j}) out of range")
            if i == j:
                raise ValueError(f"self-loop on qubit {i}")
            pair = _norm_pair(i, j)
            if pair in seen:
                raise ValueError(f"duplicate edge {pair}")
            seen.add(pair)
            if not (coupling == coupling and abs(coupling) != float("inf")) or coupling == 0.0:
                raise ValueError(f"edge {pair}: coupling must be finite and nonzero")
        cap = _MAX_DEGREE.get(self.geometry)
        if cap is not None:
            for q, deg in enumerate(self.degrees()):
                if deg > cap:
                    raise ValueError(
                        f"qubit {q} has degree {deg}, exceeds {cap} for {self.geometry}"
                    )
        if self.positions is not None and len(self.positions) != self.num_qubits:
            raise ValueError("positions length must match num_qubits")

    def degrees(self) -> list[int]:
        deg = [0] * self.num_qubits
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def neighbors(self, q: int) -> list[int]:
        out = []
        for i, j, _ in self.edges:
            if i == q:
                out.append(j)
            elif j == q:
                out.append(i)
        return sorted(out)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {q: [] for q in range(self.num_qubits)}
        for i, j, _ in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return {q: sorted(v) for q, v in adj.items()}

    def edge_set(self) -> set[tuple[int, int]]:
        return {_norm_pair(i, j) for i, j, _ in self.edges}

    def coupling_of(self, i: int, j: int) -> float:
        pair = _norm_pair(i, j)
        for a, b, coupling in self.edges:
            if _norm_pair(a, b) == pair:
                return coupling
        raise KeyError(f"no edge {pair}")

    def has_edge(self, i: int, j: int) -> bool:
        return _norm_pair(i, j) in self.edge_set()


@dataclass(frozen=True)
class DrivingPattern:
    """A driven vertex subset plus the driven pairs reserved for 2-qubit gates."""

    driven: frozenset[int]
    gate_pairs: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(
            self, "gate_pairs", frozenset(_norm_pair(a, b) for a, b in self.gate_pairs)
        )


@dataclass(frozen=True)
class Block:
    """One commuting star block: driven center, undriven boundary, local couplings.

    Local qubit ordering is center qubits first (ascending global index),
    then boundary qubits (ascending global index); ``couplings`` uses these
    local indices and covers every graph edge incident to the center.
    """

    center: tuple[int, ...]
    boundary: tuple[int, ...]
    couplings: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.num_qubits > MAX_BLOCK_QUBITS:
            raise ValueError(
                f"block with {self.num_qubits} qubits exceeds supported size "
                f"{MAX_BLOCK_QUBITS}"
            )

    @property
    def num_center(self) -> int:
        return len(self.center)

    @property
    def num_boundary(self) -> int:
        return len(self.boundary)

    @property
    def num_qubits(self) -> int:
        return len(self.center) + len(self.boundary)

    @property
    def dim(self) -> int:
        return 2 ** self.num_qubits

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.center + self.boundary

    def global_to_local(self) -> dict[int, int]:
        return {g: l for l, g in enumerate(self.qubits)}

    def shape_signature(self) -> tuple:
        """Canonical label of the block's geometry and coupling values.

        Blocks with equal signatures are interchangeable targets for one
        optimized pulse: same center count, and boundary qubits with the
        same multiset of (center attachment, coupling) profiles.
        """
        nc = self.num_center
        cc = sorted(
            (min(i, j), max(i, j), round(J, 12))
            for i, j, J in self.couplings
            if i < nc and j < nc
        )
        profiles: dict[int, list[tuple[int, float]]] = {}
        for i, j, J in self.couplings:
            if (i < nc) == (j < nc):
                continue
            b, c = (i, j) if i >= nc else (j, i)
            profiles.setdefault(b, []).append((c, round(J, 12)))
        boundary_profile = sorted(tuple(sorted(p)) for p in profiles.values())
        return (nc, self.num_boundary, tuple(cc), tuple(boundary_profile))


# ---------------------------------------------------------------------------
# graph builders


def _resolve_coupling(coupling, i: int, j: int) -> float:
    if isinstance(coupling, Mapping):
        return float(coupling[_norm_pair(i, j)])
    if callable(coupling):
        return float(coupling(i, j))
    return float(coupling)


def _grid_graph(
    vertex_rows: int,
    vertex_cols: int,
    vertical_rule: Callable[[int, int], bool],
    removed: Iterable[tuple[int, int]],
    geometry: str,
    coupling,
) -> QubitGraph:
    removed = set(removed)
    index: dict[tuple[int, int], int] = {}
    positions: list[tuple[int, int]] = []
    for r in range(vertex_rows):
        for c in range(vertex_cols):
            if (r, c) in removed:
                continue
            index[(r, c)] = len(positions)
            positions.append((r, c))
    edges: list[Edge] = []
    for (r, c), i in index.items():
        if (r, c + 1) in index:
            j = index[(r, c + 1)]
            edges.append((i, j, _resolve_coupling(coupling, i, j)))
        if (r + 1, c) in index and vertical_rule(r, c):
            j = index[(r + 1, c)]
            edges.append((i, j, _resolve_coupling(coupling, i, j)))
    return QubitGraph(
        num_qubits=len(positions),
        edges=tuple(edges),
        geometry=geometry,
        positions=tuple(positions),
    )


def build_honeycomb(rows: int, cols: int, coupling=1.0) -> QubitGraph:
    """Honeycomb patch of ``rows`` x ``cols`` hexagonal cells.

    Brick-wall embedding: vertex grid of (rows+1) x (2*cols+2) with vertical
    bonds where (row+col) is even, minus the two dangling corner vertices.
    Yields 2*(rows+1)*(cols+1) - 2 qubits; every interior vertex has degree 3.

    ``coupling`` may be a constant, a mapping keyed by normalized index
    pairs, or a callable (i, j) -> value.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    vr, vc = rows + 1, 2 * cols + 2
    # corners left with degree 1 by the vertical-bond parity rule
    removed = [(0, vc - 1), (rows, 0) if rows % 2 == 0 else (rows, vc - 1)]
    return _grid_graph(vr, vc, lambda r, c: (r + c) % 2 == 0, removed, "honeycomb", coupling)


def honeycomb_fragment(vertex_rows: int, vertex_cols: int, coupling=1.0) -> QubitGraph:
    """Rectangular brick-wall fragment without corner trimming.

    A subgraph of the infinite honeycomb; useful for small test arrays with
    an exact qubit count (e.g. 2 x 4 -> 8 qubits).
    """
    if vertex_rows < 1 or vertex_cols < 2:
        raise ValueError("fragment needs at least 1 row and 2 columns")
    return _grid_graph(
        vertex_rows, vertex_cols, lambda r, c: (r + c) % 2 == 0, (), "honeycomb", coupling
    )


def build_chain(n: int, coupling=1.0) -> QubitGraph:
    """Open chain of ``n`` qubits with nearest-neighbor coupling."""
    if n < 2:
        raise ValueError("chain needs at least 2 qubits")
    edges = tuple((i, i + 1, _resolve_coupling(coupling, i, i + 1)) for i in range(n - 1))
    positions = tuple((0, i) for i in range(n))
    return QubitGraph(n, edges, "chain", positions)


def build_square(rows: int, cols: int, coupling=1.0) -> QubitGraph:
    """Square grid of rows x cols qubits with nearest-neighbor coupling."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise ValueError("square grid needs at least 2 qubits")
    return _grid_graph(rows, cols, lambda r, c: True, (), "square", coupling)


# ---------------------------------------------------------------------------
# driving patterns


def _require_positions(graph: QubitGraph) -> tuple[tuple[int, int], ...]:
    if graph.positions is None:
        raise ValueError(
            "custom geometry has no embedding coordinates; construct the "
            "DrivingPattern explicitly and check it with validate_pattern"
        )
    return graph.positions


def single_qubit_pattern(graph: QubitGraph, parity: int | None = None) -> DrivingPattern:
    """Driving pattern for parallel single-qubit gates.

    honeycomb/square: drive the checkerboard class with (row+col) % 2 ==
    parity (default 0).  chain: drive indices with i % 2 == parity (default
    1, so a 3-qubit chain drives its middle qubit).  Undriven qubits then
    sit on block boundaries only.
    """
    pos = _require_positions(graph)
    if graph.geometry == "chain":
        p = 1 if parity is None else parity % 2
        driven = frozenset(q for q in range(graph.num_qubits) if q % 2 == p)
    elif graph.geometry in ("honeycomb", "square"):
        p = 0 if parity is None else parity % 2
        driven = frozenset(q for q, (r, c) in enumerate(pos) if (r + c) % 2 == p)
    else:
        raise ValueError(f"no built-in single-qubit pattern for {graph.geometry!r}")
    return DrivingPattern(driven=driven)


def two_qubit_pattern(graph: QubitGraph, target_pair: tuple[int, int]) -> DrivingPattern:
    """Driving pattern that makes ``target_pair`` a driven two-qubit gate block.

    honeycomb: the pair must be a vertical (rung) bond of the brick-wall
    embedding.  The checkerboard phase is slipped across the seam between
    the pair's two rows, which drives every rung of that seam and tiles it
    with six-qubit blocks (all rungs become gate pairs); the rest of the
    array falls back to four-qubit single-drive blocks.

    chain: drive the pair plus every second qubit away from it, giving one
    four-qubit gate block.

    square: drive the full checkerboard class of the pair's odd-parity
    endpoint plus the even-parity endpoint itself, creating one five-driven
    plus-shaped block (13 qubits in the bulk) whose internal bonds are all
    gate pairs.
    """
    a, b = target_pair
    if not graph.has_edge(a, b):
        raise ValueError(f"target pair ({a},{b}) is not an edge of the graph")
    pos = _require_positions(graph)
    a, b = _norm_pair(a, b)

    if graph.geometry == "chain":
        n = graph.num_qubits
        driven = {a, b}
        driven.update(range(a - 2, -1, -2))
        driven.update(range(b + 2, n, 2))
        return DrivingPattern(frozenset(driven), frozenset({(a, b)}))

    if graph.geometry == "honeycomb":
        (ra, ca), (rb, cb) = pos[a], pos[b]
        if ca != cb or abs(ra - rb) != 1:
            raise ValueError(
                "honeycomb two-qubit blocks require a rung pair (vertically "
                f"adjacent in the brick-wall embedding); ({a},{b}) is a "
                "horizontal bond -- pick one of its endpoints' rung partners"
            )
        r0 = min(ra, rb)
        # phase slip: checkerboard class flips across the seam, so every
        # rung between rows r0 and r0+1 is doubly driven
        driven = frozenset(
            q
            for q, (r, c) in enumerate(pos)
            if (r + c) % 2 == (0 if r <= r0 else 1)
        )
        by_pos = {p: q for q, p in enumerate(pos)}
        pairs = set()
        for q, (r, c) in enumerate(pos):
            if r == r0 and (r + c) % 2 == 0 and (r + 1, c) in by_pos:
                pairs.add(_norm_pair(q, by_pos[(r + 1, c)]))
        return DrivingPattern(driven, frozenset(pairs))

    if graph.geometry == "square":
        (ra, ca), _ = pos[a], pos[b]
        # plus-block center = the even-parity endpoint; its arms are the odd
        # checkerboard class, which is driven in full
        center = a if (ra + ca) % 2 == 0 else b
        driven = {q for q, (r, c) in enumerate(pos) if (r + c) % 2 == 1}
        driven.add(center)
        pairs = frozenset(_norm_pair(center, nb) for nb in graph.neighbors(center))
        return DrivingPattern(frozenset(driven), pairs)

    raise ValueError(f"no built-in two-qubit pattern for {graph.geometry!r}")


# ---------------------------------------------------------------------------
# validation and decomposition

VIOLATION_KINDS = (
    "undriven_without_driven_neighbor",  # (a)
    "edge_without_driven_endpoint",      # (b)
    "adjacent_driven_not_gate_pair",     # (c)
    "malformed_pattern",
)


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: tuple
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "pattern valid"
        lines = [f"{len(self.violations)} violation(s):"]
        lines += [f"  [{v.kind}] {v.subject}: {v.detail}" for v in self.violations]
        return "\n".join(lines)


def validate_pattern(graph: QubitGraph, pattern: DrivingPattern) -> ValidationReport:
    """Check decomposability of a driving pattern.  Reports, never raises."""
    out: list[Violation] = []
    edge_set = graph.edge_set()
    for q in pattern.driven:
        if not (0 <= q < graph.num_qubits):
            out.append(Violation("malformed_pattern", (q,), "driven index out of range"))
    for pair in pattern.gate_pairs:
        if pair not in edge_set:
            out.append(Violation("malformed_pattern", pair, "gate pair is not an edge"))
        elif not (pair[0] in pattern.driven and pair[1] in pattern.driven):
            out.append(Violation("malformed_pattern", pair, "gate pair endpoint undriven"))
    if out:
        return ValidationReport(tuple(out))

    adj = graph.adjacency()
    driven = pattern.driven
    for q in range(graph.num_qubits):
        if q not in driven and not any(nb in driven for nb in adj[q]):
            out.append(
                Violation(
                    "undriven_without_driven_neighbor",
                    (q,),
                    "residual coupling evolution cannot be cancelled",
                )
            )
    for i, j, _ in graph.edges:
        pair = _norm_pair(i, j)
        di, dj = i in driven, j in driven
        if not di and not dj:
            out.append(
                Violation(
                    "edge_without_driven_endpoint",
                    pair,
                    "coupling term commutes with all drives and cannot be cancelled",
                )
            )
        elif di and dj and pair not in pattern.gate_pairs:
            out.append(
                Violation(
                    "adjacent_driven_not_gate_pair",
                    pair,
                    "adjacent drives break the commuting decomposition",
                )
            )
    return ValidationReport(tuple(out))


def decompose_blocks(graph: QubitGraph, pattern: DrivingPattern) -> list[Block]:
    """Split a valid pattern into commuting star blocks.

    Each maximal connected driven set, together with all its undriven
    neighbors, forms one block.  Blocks are returned sorted by smallest
    center index; every edge with a driven endpoint lands in exactly one
    block.
    """
    report = validate_pattern(graph, pattern)
    if not report.ok:
        raise ValueError(f"invalid driving pattern:\n{report}")
    adj = graph.adjacency()
    driven = pattern.driven
    unvisited = set(driven)
    blocks: list[Block] = []
    while unvisited:
        seed = min(unvisited)
        comp = {seed}
        frontier = [seed]
        while frontier:
            q = frontier.pop()
            for nb in adj[q]:
                if nb in driven and nb not in comp:
                    comp.add(nb)
                    frontier.append(nb)
        unvisited -= comp
        center = tuple(sorted(comp))
        boundary = tuple(sorted({nb for q in comp for nb in adj[q]} - comp))
        local = {g: l for l, g in enumerate(center + boundary)}
        couplings = tuple(
            (local[i], local[j], J)
            for i, j, J in graph.edges
            if i in comp or j in comp
        )
        blocks.append(Block(center, boundary, couplings))
    blocks.sort(key=lambda blk: blk.center[0])
    return blocks


# ---------------------------------------------------------------------------
# serialization


def graph_to_document(graph: QubitGraph, pattern: DrivingPattern | None = None) -> dict:
    doc: dict = {
        "num_qubits": graph.num_qubits,
        "edges": [[i, j, J] for i, j, J in graph.edges],
        "geometry": graph.geometry,
    }
    if graph.positions is not None:
        doc["positions"] = [list(p) for p in graph.positions]
    if pattern is not None:
        doc["driven"] = sorted(pattern.driven)
        doc["gate_pairs"] = [list(p) for p in sorted(pattern.gate_pairs)]
    return doc


def graph_from_document(doc: Mapping) -> tuple[QubitGraph, DrivingPattern | None]:
    positions = doc.get("positions")
    graph = QubitGraph(
        num_qubits=int(doc["num_qubits"]),
        edges=tuple((int(i), int(j), float(J)) for i, j, J in doc["edges"]),
        geometry=doc.get("geometry", "custom"),
        positions=tuple(tuple(p) for p in positions) if positions is not None else None,
    )
    pattern = None
    if "driven" in doc:
        pattern = DrivingPattern(
            driven=frozenset(int(q) for q in doc["driven"]),
            gate_pairs=frozenset(
                (int(a), int(b)) for a, b in doc.get("gate_pairs", [])
            ),
        )
    return graph, pattern


def save_graph(path, graph: QubitGraph, pattern: DrivingPattern | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(graph_to_document(graph, pattern), fh, indent=1)


def load_graph(path) -> tuple[QubitGraph, DrivingPattern | None]:
    with open(path) as fh:
        return graph_from_document(json.load(fh))
