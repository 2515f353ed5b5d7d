"""Finite graphs of free groups with infinite cyclic or trivial edge groups.

Vertex groups are free of a given rank; each vertex has its own alphabet
(generators ``a``, ``b``, ... local to that vertex).  An edge group is either
trivial or infinite cyclic, in which case it is given by the images of its
generator in the two endpoint groups.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .words import Word, WordParseError, format_word, free_reduce, invert, parse_word

TRIVIAL = "trivial"


class GraphOfGroupsError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: str
    word_from: Word | None = None
    word_to: Word | None = None

    @property
    def is_trivial(self) -> bool:
        return self.word_from is None


@dataclass(frozen=True)
class GraphOfGroups:
    vertex_ranks: dict[str, int]
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))

    @property
    def vertices(self) -> list[str]:
        return list(self.vertex_ranks)

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)

    @property
    def cyclic_edges(self) -> list[Edge]:
        return [e for e in self.edges if not e.is_trivial]

    def to_json(self) -> str:
        return dumps(self)

    def to_dot(self, name: str = "GoG") -> str:
        lines = [f"digraph {name} {{"]
        for v, r in self.vertex_ranks.items():
            lines.append(f'  "{v}" [label="{v}\\nF{r}"];')
        for e in self.edges:
            if e.is_trivial:
                label = f"{e.id}: 1"
            else:
                label = (
                    f"{e.id}: {format_word(e.word_from, self.vertex_ranks[e.source])}"
                    f" ~ {format_word(e.word_to, self.vertex_ranks[e.target])}"
                )
            lines.append(f'  "{e.source}" -> "{e.target}" [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


def _components(vertices: Iterable[str], edges: Iterable[Edge]) -> list[list[str]]:
    vertices = list(vertices)
    nbrs: dict[str, list[str]] = {v: [] for v in vertices}
    for e in edges:
        if e.source in nbrs and e.target in nbrs:
            nbrs[e.source].append(e.target)
            nbrs[e.target].append(e.source)
    seen: set[str] = set()
    out = []
    for v in vertices:
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
        out.append(comp)
    return out


def validate(g: GraphOfGroups) -> ValidationReport:
    report = ValidationReport()
    bad = report.violations
    if not g.vertex_ranks:
        bad.append("graph has no vertices")
        return report
    for v, r in g.vertex_ranks.items():
        if not isinstance(r, int) or isinstance(r, bool) or r < 0:
            bad.append(f"vertex {v}: rank must be a non-negative integer, got {r!r}")
    ids = set()
    for e in g.edges:
        if e.id in ids:
            bad.append(f"edge {e.id}: duplicate id")
        ids.add(e.id)
        for end in (e.source, e.target):
            if end not in g.vertex_ranks:
                bad.append(f"edge {e.id}: unknown vertex {end}")
        if (e.word_from is None) != (e.word_to is None):
            bad.append(f"edge {e.id}: edge group must be trivial at both ends or at neither")
            continue
        if e.is_trivial:
            continue
        for end, w in ((e.source, e.word_from), (e.target, e.word_to)):
            letters = w.letters
            if not letters:
                bad.append(f"edge {e.id}: empty attaching word at {end}")
            elif free_reduce(letters) != letters:
                bad.append(f"edge {e.id}: attaching word at {end} is not freely reduced")
            r = g.vertex_ranks.get(end)
            if isinstance(r, int) and any(abs(x) > r for x in letters):
                bad.append(f"edge {e.id}: attaching word at {end} leaves the rank-{r} alphabet")
    if len(_components(g.vertex_ranks, g.edges)) > 1:
        bad.append("underlying graph is not connected")
    return report


# --- presentations ------------------------------------------------------------


@dataclass(frozen=True)
class Presentation:
    generators: tuple[str, ...]
    relations: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    def _fmt(self, letters) -> str:
        if not letters:
            return "1"
        parts = []
        i = 0
        while i < len(letters):
            j = i
            while j < len(letters) and letters[j] == letters[i]:
                j += 1
            name = self.generators[abs(letters[i]) - 1]
            power = (j - i) * (1 if letters[i] > 0 else -1)
            parts.append(name if power == 1 else f"{name}^{power}")
            i = j
        return " ".join(parts)

    def __str__(self) -> str:
        rels = ", ".join(f"{self._fmt(lhs)} = {self._fmt(rhs)}" for lhs, rhs in self.relations)
        return f"< {', '.join(self.generators)} | {rels} >"


def spanning_tree(g: GraphOfGroups) -> list[str]:
    """Breadth-first spanning tree in edge order, as a list of edge ids."""
    start = next(iter(g.vertex_ranks))
    seen = {start}
    tree = []
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for e in g.edges:
            for a, b in ((e.source, e.target), (e.target, e.source)):
                if a == v and b not in seen:
                    seen.add(b)
                    tree.append(e.id)
                    queue.append(b)
    return tree


def _vertex_generator_names(g: GraphOfGroups) -> list[str]:
    total = sum(g.vertex_ranks.values())
    if total <= 26:
        return [chr(ord("a") + i) for i in range(total)]
    return [f"x{i + 1}" for i in range(total)]


def presentation_rel_tree(g: GraphOfGroups, tree: Iterable[str] | None = None) -> Presentation:
    """Presentation of the fundamental group relative to a spanning tree."""
    tree = set(spanning_tree(g) if tree is None else tree)
    ids = {e.id for e in g.edges}
    if not tree <= ids:
        raise GraphOfGroupsError(f"tree mentions unknown edges {sorted(tree - ids)}")
    tree_edges = [e for e in g.edges if e.id in tree]
    if len(tree_edges) != len(g.vertex_ranks) - 1 or len(_components(g.vertex_ranks, tree_edges)) != 1:
        raise GraphOfGroupsError("edges do not form a spanning tree")

    offsets = {}
    n = 0
    for v, r in g.vertex_ranks.items():
        offsets[v] = n
        n += r
    names = _vertex_generator_names(g)
    stable = {}
    for e in g.edges:
        if e.id not in tree:
            n += 1
            stable[e.id] = n
            names.append("t" if sum(1 for x in g.edges if x.id not in tree) == 1 else f"t_{e.id}")

    def lift(word: Word, v: str) -> tuple[int, ...]:
        off = offsets[v]
        return tuple(x + off if x > 0 else x - off for x in word.letters)

    relations = []
    for e in g.edges:
        if e.is_trivial:
            continue
        lhs = lift(e.word_from, e.source)
        rhs = lift(e.word_to, e.target)
        if e.id in stable:
            t = stable[e.id]
            lhs = (t,) + lhs + (-t,)
        relations.append((lhs, rhs))
    return Presentation(tuple(names), tuple(relations))


# --- Euler characteristic and L2-Betti predictions ------------------------------


def euler_characteristic(g: GraphOfGroups) -> int:
    chi = sum(1 - r for r in g.vertex_ranks.values())
    chi -= sum(1 for e in g.edges if e.is_trivial)
    return chi


def is_trivial_group(g: GraphOfGroups) -> bool:
    return all(r == 0 for r in g.vertex_ranks.values()) and len(g.edges) == len(g.vertex_ranks) - 1


@dataclass(frozen=True)
class BettiPrediction:
    b0: int
    b1: int
    b2: int
    b2_conditional: bool
    b1_conditional: bool
    reason: str

    def as_dict(self) -> dict:
        return {
            "b0": self.b0,
            "b1": self.b1,
            "b2": self.b2,
            "b2_conditional": self.b2_conditional,
            "b1_conditional": self.b1_conditional,
            "reason": self.reason,
        }


def predicted_l2_betti(g: GraphOfGroups) -> BettiPrediction:
    """First L2-Betti numbers predicted from the Euler characteristic.

    b1 = max(-chi, 0) is exact once b2 vanishes.  b2 = 0 is unconditional for
    free fundamental groups and cyclic ones; otherwise it is justified only
    when the group is hyperbolic relative to virtually abelian subgroups,
    which is read off the weighted graph of the splitting.
    """
    from .phi import classify

    chi = euler_characteristic(g)
    if is_trivial_group(g):
        return BettiPrediction(1, 0, 0, False, False, "trivial group")
    if not g.cyclic_edges:
        return BettiPrediction(0, max(-chi, 0), 0, False, False, "free group")
    report = classify(g)
    if report.rel_hyp_virt_abelian:
        reason = "hyperbolic relative to virtually abelian subgroups"
        conditional = False
    else:
        reason = "b2 = 0 assumed; no relative hyperbolicity certificate"
        conditional = True
    return BettiPrediction(0, max(-chi, 0), 0, conditional, conditional, reason)


# --- free product decomposition -------------------------------------------------


@dataclass(frozen=True)
class FreeProductDecomposition:
    factors: tuple[GraphOfGroups, ...]
    removed_edges: tuple[str, ...]
    free_rank: int

    def free_factor(self) -> GraphOfGroups | None:
        """The free group F_k carried by the surplus trivial edges, if any."""
        if self.free_rank == 0:
            return None
        return GraphOfGroups({"free": self.free_rank}, ())


def free_product_decompose(g: GraphOfGroups) -> FreeProductDecomposition:
    """Cut every trivial edge; the pieces are the free factors.

    Trivial edges beyond those needed to reconnect the pieces contribute a
    free group of rank ``free_rank``.
    """
    removed = tuple(e.id for e in g.edges if e.is_trivial)
    kept = [e for e in g.edges if not e.is_trivial]
    factors = []
    for comp in _components(g.vertex_ranks, kept):
        members = set(comp)
        ranks = {v: g.vertex_ranks[v] for v in g.vertex_ranks if v in members}
        edges = tuple(e for e in kept if e.source in members)
        factors.append(GraphOfGroups(ranks, edges))
    free_rank = len(removed) - (len(factors) - 1)
    return FreeProductDecomposition(tuple(factors), removed, free_rank)


# --- JSON ------------------------------------------------------------------------


def as_dict(g: GraphOfGroups) -> dict:
    edges = []
    for e in g.edges:
        if e.is_trivial:
            wf = wt = TRIVIAL
        else:
            wf = format_word(e.word_from, g.vertex_ranks[e.source])
            wt = format_word(e.word_to, g.vertex_ranks[e.target])
        edges.append({"id": e.id, "from": e.source, "to": e.target, "word_from": wf, "word_to": wt})
    return {"alphabet_ranks": dict(g.vertex_ranks), "edges": edges}


def dumps(g: GraphOfGroups) -> str:
    return json.dumps(as_dict(g), indent=2) + "\n"


def _locate(text: str, needle: str) -> tuple[int, int]:
    pos = text.find(needle)
    if pos < 0:
        return 1, 1
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def from_dict(data: dict, text: str = "") -> GraphOfGroups:
    if not isinstance(data, dict) or "alphabet_ranks" not in data:
        raise GraphOfGroupsError("expected an object with 'alphabet_ranks'", 1, 1)
    ranks = data["alphabet_ranks"]
    if not isinstance(ranks, dict):
        raise GraphOfGroupsError("'alphabet_ranks' must be an object", *_locate(text, '"alphabet_ranks"'))
    ranks = {str(k): v for k, v in ranks.items()}
    for v, r in ranks.items():
        if not isinstance(r, int) or isinstance(r, bool) or r < 0:
            raise GraphOfGroupsError(f"vertex {v}: bad rank {r!r}", *_locate(text, f'"{v}"'))
    edges = []
    for i, raw in enumerate(data.get("edges", [])):
        try:
            eid = str(raw.get("id", i))
            src, dst = str(raw["from"]), str(raw["to"])
            wf, wt = raw["word_from"], raw["word_to"]
        except (AttributeError, KeyError) as exc:
            raise GraphOfGroupsError(f"edge #{i}: missing field {exc}", *_locate(text, '"edges"')) from None
        for end in (src, dst):
            if end not in ranks:
                raise GraphOfGroupsError(f"edge {eid}: unknown vertex {end!r}", *_locate(text, f'"{eid}"'))
        if wf == TRIVIAL and wt == TRIVIAL:
            edges.append(Edge(eid, src, dst))
            continue
        words = []
        for end, w in ((src, wf), (dst, wt)):
            if w == TRIVIAL or not isinstance(w, str):
                raise GraphOfGroupsError(
                    f"edge {eid}: edge group must be trivial at both ends or given by two words",
                    *_locate(text, f'"{eid}"'),
                )
            try:
                words.append(parse_word(w, max(ranks[end], 1)))
            except WordParseError as exc:
                line, col = _locate(text, f'"{w}"')
                raise GraphOfGroupsError(f"edge {eid}: {exc}", line, col + 1 + exc.offset) from None
        edges.append(Edge(eid, src, dst, words[0], words[1]))
    return GraphOfGroups(ranks, tuple(edges))


def loads(text: str) -> GraphOfGroups:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphOfGroupsError(exc.msg, exc.lineno, exc.colno) from None
    return from_dict(data, text)


# --- convenience constructors ------------------------------------------------------


def baumslag_solitar(m: int, n: int) -> GraphOfGroups:
    """BS(m, n) = < a, t | t a^m t^-1 = a^n > as a one-loop graph of groups."""
    a = Word((1,))
    return GraphOfGroups({"v": 1}, (Edge("e", "v", "v", a ** m, a ** n),))


def surface_genus_two() -> GraphOfGroups:
    """The splitting F(a, b) *_{[a,b] = [c,d]} F(c, d)."""
    comm = Word((1, 2, -1, -2))
    return GraphOfGroups({"u": 2, "v": 2}, (Edge("e", "u", "v", comm, comm),))


def free_product(*ranks: int) -> GraphOfGroups:
    """Free product of free groups joined along a path of trivial edges."""
    names = [f"v{i}" for i in range(len(ranks))]
    edges = tuple(Edge(f"e{i}", names[i], names[i + 1]) for i in range(len(ranks) - 1))
    return GraphOfGroups(dict(zip(names, ranks)), edges)


__all__ = [
    "Edge",
    "GraphOfGroups",
    "GraphOfGroupsError",
    "Presentation",
    "ValidationReport",
    "BettiPrediction",
    "FreeProductDecomposition",
    "validate",
    "spanning_tree",
    "presentation_rel_tree",
    "euler_characteristic",
    "predicted_l2_betti",
    "free_product_decompose",
    "dumps",
    "loads",
    "as_dict",
    "from_dict",
    "baumslag_solitar",
    "surface_genus_two",
    "free_product",
    "invert",
]
