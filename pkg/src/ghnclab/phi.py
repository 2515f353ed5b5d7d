"""Wise's weighted graph of a graph of free groups with cyclic edge groups."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .gog import Edge, GraphOfGroups, GraphOfGroupsError, free_product_decompose
from .words import CyclicWord, Word, format_word, primitive_root

O_TO_T = "O_TO_T"
T_TO_O = "T_TO_O"
TORUS = "TORUS"
KLEIN = "KLEIN"


class WeightedGraphError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class PhiVertex:
    id: str
    gog_vertex: str | None = None
    root: tuple[int, ...] = ()
    conjugacy_flag: bool = False


@dataclass(frozen=True)
class PhiEdge:
    id: str
    source: str
    target: str
    weight_o: int
    weight_t: int

    def __post_init__(self):
        if self.weight_o == 0 or self.weight_t == 0:
            raise WeightedGraphError(f"edge {self.id}: weights must be nonzero")

    @property
    def sign(self) -> int:
        return (1 if self.weight_o > 0 else -1) * (1 if self.weight_t > 0 else -1)

    def flipped(self) -> "PhiEdge":
        return PhiEdge(self.id, self.target, self.source, self.weight_t, self.weight_o)


@dataclass(frozen=True)
class WeightedGraph:
    vertices: tuple[PhiVertex, ...]
    edges: tuple[PhiEdge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        ids = [v.id for v in self.vertices]
        if len(set(ids)) != len(ids):
            raise WeightedGraphError("duplicate vertex id")
        known = set(ids)
        for e in self.edges:
            if e.source not in known or e.target not in known:
                raise WeightedGraphError(f"edge {e.id}: unknown endpoint")

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], vertices: Iterable[str] = ()) -> "WeightedGraph":
        """Build from (id, v1, w1, v2, w2) tuples; vertices are created on sight."""
        order = list(vertices)
        out = []
        for eid, v1, w1, v2, w2 in edges:
            for v in (v1, v2):
                if v not in order:
                    order.append(v)
            out.append(PhiEdge(str(eid), v1, v2, w1, w2))
        return cls(tuple(PhiVertex(v) for v in order), tuple(out))

    @property
    def vertex_ids(self) -> list[str]:
        return [v.id for v in self.vertices]

    def edge(self, edge_id: str) -> PhiEdge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)

    def components(self) -> list[tuple[list[str], list[PhiEdge]]]:
        nbrs: dict[str, list[str]] = {v: [] for v in self.vertex_ids}
        for e in self.edges:
            nbrs[e.source].append(e.target)
            nbrs[e.target].append(e.source)
        seen: set[str] = set()
        out = []
        for v in self.vertex_ids:
            if v in seen:
                continue
            comp = []
            queue = deque([v])
            seen.add(v)
            while queue:
                u = queue.popleft()
                comp.append(u)
                for w in nbrs[u]:
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
            members = set(comp)
            out.append((comp, [e for e in self.edges if e.source in members]))
        return out

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    # serialisation ------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"vertex {v.id}" for v in self.vertices]
        lines += [f"edge {e.id} {e.source} {e.weight_o} {e.target} {e.weight_t}" for e in self.edges]
        return "\n".join(lines) + "\n"

    def to_dot(self, name: str = "Phi") -> str:
        lines = [f"digraph {name} {{"]
        for v in self.vertices:
            lines.append(f'  "{v.id}";')
        for e in self.edges:
            lines.append(
                f'  "{e.source}" -> "{e.target}" [label="{e.id}", taillabel="{e.weight_o}", headlabel="{e.weight_t}"];'
            )
        lines.append("}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {
            "vertices": [
                {"id": v.id, "gog_vertex": v.gog_vertex, "root": list(v.root), "conjugacy_flag": v.conjugacy_flag}
                for v in self.vertices
            ],
            "edges": [
                {"id": e.id, "from": e.source, "to": e.target, "weight_from": e.weight_o, "weight_to": e.weight_t}
                for e in self.edges
            ],
        }


def parse_weighted_graph(text: str) -> WeightedGraph:
    """Parse ``vertex <id>`` and ``edge <id> <v1> <w1> <v2> <w2>`` lines."""
    vertices: list[str] = []
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        parts = line.split()
        if not parts:
            continue
        col = len(line) - len(line.lstrip()) + 1
        if parts[0] == "vertex" and len(parts) == 2:
            if parts[1] in vertices:
                raise WeightedGraphError(f"duplicate vertex {parts[1]!r}", lineno, col)
            vertices.append(parts[1])
        elif parts[0] == "edge" and len(parts) == 6:
            eid, v1, w1, v2, w2 = parts[1:]
            try:
                w1, w2 = int(w1), int(w2)
            except ValueError:
                raise WeightedGraphError("weights must be integers", lineno, line.find(parts[3]) + 1) from None
            if w1 == 0 or w2 == 0:
                raise WeightedGraphError("weights must be nonzero", lineno, col)
            for v in (v1, v2):
                if v not in vertices:
                    raise WeightedGraphError(f"unknown vertex {v!r}", lineno, line.find(v, col + 5) + 1)
            edges.append(PhiEdge(eid, v1, v2, w1, w2))
        else:
            raise WeightedGraphError(f"cannot parse {line.strip()!r}", lineno, col)
    return WeightedGraph(tuple(PhiVertex(v) for v in vertices), tuple(edges))


# --- construction -----------------------------------------------------------------


def _tail(w: Word) -> tuple[int, ...]:
    """The part of ``w`` peeled off by cyclic reduction (the hanging path)."""
    i = 0
    while len(w) - 2 * i >= 2 and w[i] == -w[len(w) - 1 - i]:
        i += 1
    return tuple(w[:i])


def build_phi(g: GraphOfGroups) -> WeightedGraph:
    """One vertex per (vertex, primitive root class), one edge per edge.

    The canonical cyclic representative of each root fixes the positive
    orientation; the weight at an end is the exponent, negated when the
    attaching word runs against that orientation.  A vertex is flagged when
    words sharing its root class are not cyclically reduced in the same way,
    i.e. they differ by conjugation inside the vertex group.
    """
    vertices: dict[tuple[str, tuple[int, ...]], PhiVertex] = {}
    literal: dict[tuple[str, tuple[int, ...]], set] = {}
    ends = []
    for e in g.edges:
        if e.is_trivial:
            raise GraphOfGroupsError(f"edge {e.id} has trivial edge group; decompose the free product first")
        pair = []
        for v, w in ((e.source, e.word_from), (e.target, e.word_to)):
            root, exponent = primitive_root(w)
            rep, sign = root.canonical_with_orientation()
            key = (v, rep)
            if key not in vertices:
                rank = g.vertex_ranks[v]
                vertices[key] = PhiVertex(f"{v}:{format_word(rep, rank)}", v, rep)
                literal[key] = set()
            literal[key].add(_tail(w))
            pair.append((key, sign * exponent))
        ends.append((e, pair))
    verts = {
        key: PhiVertex(pv.id, pv.gog_vertex, pv.root, len(literal[key]) > 1) for key, pv in vertices.items()
    }
    edges = tuple(PhiEdge(e.id, verts[ko].id, verts[kt].id, wo, wt) for e, ((ko, wo), (kt, wt)) in ends)
    return WeightedGraph(tuple(verts.values()), edges)


# --- balance ----------------------------------------------------------------------


@dataclass(frozen=True)
class CycleWitness:
    edges: tuple[str, ...]
    gain: Fraction

    def as_dict(self) -> dict:
        return {"edges": list(self.edges), "gain": str(self.gain)}


def _spanning_forest(
    vertex_ids: list[str], edges: list[PhiEdge], tree: set[str] | None = None
) -> tuple[dict[str, tuple[str | None, PhiEdge | None]], list[PhiEdge]]:
    """Parent pointers of a spanning forest and the remaining edges.

    ``tree`` proposes edge ids to use first; they must not contain cycles.
    """
    parent: dict[str, tuple[str | None, PhiEdge | None]] = {}
    uf = {v: v for v in vertex_ids}

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    chosen = []
    preferred = [e for e in edges if tree is not None and e.id in tree]
    rest = [e for e in edges if not (tree is not None and e.id in tree)]
    for e in preferred + rest:
        a, b = find(e.source), find(e.target)
        if a != b:
            uf[a] = b
            chosen.append(e)
    chosen_ids = {e.id for e in chosen}
    nbrs: dict[str, list[tuple[str, PhiEdge]]] = {v: [] for v in vertex_ids}
    for e in chosen:
        nbrs[e.source].append((e.target, e))
        nbrs[e.target].append((e.source, e))
    for v in vertex_ids:
        if v in parent:
            continue
        parent[v] = (None, None)
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w, e in nbrs[u]:
                if w not in parent:
                    parent[w] = (u, e)
                    queue.append(w)
    return parent, [e for e in edges if e.id not in chosen_ids]


def _potentials(parent) -> dict[str, Fraction]:
    pot: dict[str, Fraction] = {}

    def get(v):
        if v in pot:
            return pot[v]
        chain = []
        while v not in pot and parent[v][0] is not None:
            chain.append(v)
            v = parent[v][0]
        if v not in pot:
            pot[v] = Fraction(1)
        for u in reversed(chain):
            p, e = parent[u]
            if e.source == p:
                step = Fraction(e.weight_t, e.weight_o)
            else:
                step = Fraction(e.weight_o, e.weight_t)
            pot[u] = pot[p] * step
        return pot[chain[0]] if chain else pot[v]

    for v in parent:
        get(v)
    return pot


def _tree_path(parent, v: str) -> list[str]:
    out = []
    while parent[v][0] is not None:
        p, e = parent[v]
        out.append(e.id)
        v = p
    return out


def _cycle_edges(parent, e: PhiEdge) -> tuple[str, ...]:
    up = _tree_path(parent, e.source)
    down = _tree_path(parent, e.target)
    while up and down and up[-1] == down[-1]:
        up.pop()
        down.pop()
    return tuple(up[::-1]) + (e.id,) + tuple(down)


def fundamental_gains(w: WeightedGraph, tree: Iterable[str] | None = None) -> list[CycleWitness]:
    """Gain of every fundamental cycle, taking each non-tree edge from o to t."""
    tree = set(tree) if tree is not None else None
    parent, rest = _spanning_forest(w.vertex_ids, list(w.edges), tree)
    pot = _potentials(parent)
    out = []
    for e in rest:
        gain = pot[e.source] * Fraction(e.weight_t, e.weight_o) / pot[e.target]
        out.append(CycleWitness(_cycle_edges(parent, e), gain))
    return out


def is_balanced(w: WeightedGraph, tree: Iterable[str] | None = None) -> tuple[bool, CycleWitness | None]:
    for c in fundamental_gains(w, tree):
        if abs(c.gain) != 1:
            return False, c
    return True, None


# --- solvability ------------------------------------------------------------------


def is_solvable(w: WeightedGraph) -> tuple[bool, dict[str, str] | None]:
    """Orient edges so each vertex is the tail of at most one edge and heads carry weight +-1.

    Solved as a bipartite matching of edges to tail vertices.
    """
    options: list[list[tuple[str, str]]] = []
    for e in w.edges:
        opts = []
        if abs(e.weight_t) == 1:
            opts.append((e.source, O_TO_T))
        if abs(e.weight_o) == 1 and (e.target, T_TO_O) not in opts:
            if not (e.source == e.target and opts):
                opts.append((e.target, T_TO_O))
        options.append(opts)
    owner: dict[str, int] = {}

    def augment(i: int, seen: set[str]) -> bool:
        for v, _ in options[i]:
            if v in seen:
                continue
            seen.add(v)
            if v not in owner or augment(owner[v], seen):
                owner[v] = i
                return True
        return False

    for i in range(len(w.edges)):
        if not augment(i, set()):
            return False, None
    orientation = {}
    for v, i in owner.items():
        e = w.edges[i]
        for u, d in options[i]:
            if u == v:
                orientation[e.id] = d
                break
    return True, {e.id: orientation[e.id] for e in w.edges}


def check_orientation(w: WeightedGraph, orientation: dict[str, str]) -> bool:
    tails: dict[str, int] = {}
    for e in w.edges:
        d = orientation.get(e.id)
        if d == O_TO_T:
            tail, head_weight = e.source, e.weight_t
        elif d == T_TO_O:
            tail, head_weight = e.target, e.weight_o
        else:
            return False
        if abs(head_weight) != 1:
            return False
        tails[tail] = tails.get(tail, 0) + 1
    return all(n <= 1 for n in tails.values())


# --- classification ---------------------------------------------------------------


@dataclass
class ComponentReport:
    factor: int
    vertices: list[str]
    edges: list[str]
    balanced: bool
    solvable: bool
    cycle: CycleWitness | None = None
    orientation: dict[str, str] | None = None

    def as_dict(self) -> dict:
        return {
            "factor": self.factor,
            "vertices": self.vertices,
            "edges": self.edges,
            "balanced": self.balanced,
            "solvable": self.solvable,
            "cycle": self.cycle.as_dict() if self.cycle else None,
            "orientation": self.orientation,
        }


@dataclass
class ClassReport:
    balanced: bool
    solvable: bool
    lerf: bool
    rf: bool
    rel_hyp_virt_abelian: bool
    l2_hall_predicted: bool
    components: list[ComponentReport] = field(default_factory=list)
    flagged_vertices: list[str] = field(default_factory=list)

    @property
    def residually_finite(self) -> bool:
        return self.rf

    def as_dict(self) -> dict:
        return {
            "balanced": self.balanced,
            "solvable": self.solvable,
            "lerf": self.lerf,
            "rf": self.rf,
            "rel_hyp_virt_abelian": self.rel_hyp_virt_abelian,
            "l2_hall_predicted": self.l2_hall_predicted,
            "l2_hall_is_conjectural": True,
            "components": [c.as_dict() for c in self.components],
            "flagged_vertices": self.flagged_vertices,
        }


def classify(g: GraphOfGroups) -> ClassReport:
    comps: list[ComponentReport] = []
    flagged: list[str] = []
    for i, factor in enumerate(free_product_decompose(g).factors):
        if not factor.edges:
            continue
        w = build_phi(factor)
        flagged += [v.id for v in w.vertices if v.conjugacy_flag]
        for verts, edges in w.components():
            sub = WeightedGraph(tuple(v for v in w.vertices if v.id in verts), tuple(edges))
            bal, cycle = is_balanced(sub)
            sol, orient = is_solvable(sub)
            comps.append(ComponentReport(i, verts, [e.id for e in edges], bal, sol, cycle, orient))
    balanced = all(c.balanced for c in comps)
    solvable = all(c.solvable for c in comps)
    return ClassReport(
        balanced=balanced,
        solvable=solvable,
        lerf=balanced,
        rf=all(c.balanced or c.solvable for c in comps),
        rel_hyp_virt_abelian=balanced and solvable,
        l2_hall_predicted=solvable,
        components=comps,
        flagged_vertices=flagged,
    )


# --- GBS complexes, loops and covers ----------------------------------------------


def gbs_complex(w: WeightedGraph) -> GraphOfGroups:
    """Graph of infinite cyclic groups realising the weights."""
    if not w.is_connected():
        raise WeightedGraphError("weighted graph is not connected")
    a = Word((1,))
    ranks = {v.id: 1 for v in w.vertices}
    edges = tuple(Edge(e.id, e.source, e.target, a ** e.weight_o, a ** e.weight_t) for e in w.edges)
    return GraphOfGroups(ranks, edges)


def same_weighted_shape(w1: WeightedGraph, w2: WeightedGraph) -> bool:
    """Equality after renaming vertices by their position."""
    if len(w1.vertices) != len(w2.vertices) or len(w1.edges) != len(w2.edges):
        return False
    pos1 = {v: i for i, v in enumerate(w1.vertex_ids)}
    pos2 = {v: i for i, v in enumerate(w2.vertex_ids)}
    return [(pos1[e.source], pos1[e.target], e.weight_o, e.weight_t) for e in w1.edges] == [
        (pos2[e.source], pos2[e.target], e.weight_o, e.weight_t) for e in w2.edges
    ]


@dataclass(frozen=True)
class SignedLoop:
    edges: tuple[str, ...]
    kind: str


def detect_klein_torus_loops(w: WeightedGraph) -> list[SignedLoop]:
    """Fundamental cycles of the all-(+-1) subgraph, typed by their sign product."""
    unit = [e for e in w.edges if abs(e.weight_o) == 1 and abs(e.weight_t) == 1]
    parent, rest = _spanning_forest(w.vertex_ids, unit)
    by_id = {e.id: e for e in unit}
    out = []
    for e in rest:
        cycle = _cycle_edges(parent, e)
        sign = 1
        for eid in cycle:
            sign *= by_id[eid].sign
        out.append(SignedLoop(cycle, TORUS if sign == 1 else KLEIN))
    return out


def orientation_double_cover(w: WeightedGraph) -> WeightedGraph:
    """Degree-two cover killing the sign of every cycle.

    Vertex ``v`` lifts to ``v.0`` and ``v.1``; an edge of sign -1 swaps sheets.
    """
    if not w.is_connected():
        raise WeightedGraphError("weighted graph is not connected")
    vertices = tuple(
        PhiVertex(f"{v.id}.{i}", v.gog_vertex, v.root, v.conjugacy_flag) for i in (0, 1) for v in w.vertices
    )
    edges = []
    for i in (0, 1):
        for e in w.edges:
            j = i ^ (e.sign == -1)
            edges.append(PhiEdge(f"{e.id}.{i}", f"{e.source}.{i}", f"{e.target}.{j}", e.weight_o, e.weight_t))
    return WeightedGraph(vertices, tuple(edges))


def gbs_euler_characteristic(w: WeightedGraph) -> int:
    """Euler characteristic of the GBS complex, summed over components."""
    from .gog import euler_characteristic

    total = 0
    for verts, edges in w.components():
        sub = WeightedGraph(tuple(v for v in w.vertices if v.id in verts), tuple(edges))
        total += euler_characteristic(gbs_complex(sub))
    return total


__all__ = [
    "O_TO_T",
    "T_TO_O",
    "TORUS",
    "KLEIN",
    "WeightedGraphError",
    "PhiVertex",
    "PhiEdge",
    "WeightedGraph",
    "parse_weighted_graph",
    "build_phi",
    "CycleWitness",
    "fundamental_gains",
    "is_balanced",
    "is_solvable",
    "check_orientation",
    "ComponentReport",
    "ClassReport",
    "classify",
    "gbs_complex",
    "same_weighted_shape",
    "SignedLoop",
    "detect_klein_torus_loops",
    "orientation_double_cover",
    "gbs_euler_characteristic",
]
