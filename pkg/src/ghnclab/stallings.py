"""Stallings graphs of finitely generated subgroups of free groups.

A :class:`StallingsGraph` is a folded, connected, based graph whose edges are
labelled by positive generator indices.  Vertices are numbered in shortlex
breadth-first order from the base (vertex 0), so two graphs are equal exactly
when they are isomorphic as labelled based graphs.

Conjugation convention: ``conjugate(g, t)`` is the subgroup t^-1 H t.  The
component of the fiber product with representative ``t`` carries the
subgroup U ∩ t V t^-1, the stabiliser of the coset tV, so the double coset
is UtV and ``conjugate(intersection, t)`` lies in V.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .words import (
    Alphabet,
    AlphabetError,
    Letters,
    Word,
    WordParseError,
    format_letter,
    free_reduce,
    invert,
    multiply,
    parse_word,
    shortlex_key,
)

INFINITE = math.inf


class _Folder:
    """Union-find folding of a labelled graph, edge by edge."""

    def __init__(self):
        self.parent: list[int] = []
        self.adj: list[dict[int, int] | None] = []

    def new_vertex(self) -> int:
        v = len(self.parent)
        self.parent.append(v)
        self.adj.append({})
        return v

    def find(self, v: int) -> int:
        parent = self.parent
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def merge(self, a: int, b: int) -> None:
        find, adj, parent = self.find, self.adj, self.parent
        stack = [(a, b)]
        while stack:
            a, b = stack.pop()
            a, b = find(a), find(b)
            if a == b:
                continue
            if len(adj[a]) < len(adj[b]):
                a, b = b, a
            parent[b] = a
            adj_a, adj_b = adj[a], adj[b]
            adj[b] = None
            for label, w in adj_b.items():
                cur = adj_a.get(label)
                if cur is None:
                    adj_a[label] = w
                elif find(cur) != find(w):
                    stack.append((cur, w))

    def add_edge(self, u: int, label: int, v: int) -> None:
        u, v = self.find(u), self.find(v)
        t = self.adj[u].get(label)
        if t is not None:
            self.merge(t, v)
            return
        s = self.adj[v].get(-label)
        if s is not None:
            self.merge(s, u)
            return
        self.adj[u][label] = v
        self.adj[v][-label] = u

    def add_path(self, start: int, word: Sequence[int], end: int) -> None:
        """Add a path spelling ``word`` from ``start`` to ``end``."""
        if not word:
            self.merge(start, end)
            return
        cur = start
        last = len(word) - 1
        for i, x in enumerate(word):
            if i == last:
                self.add_edge(cur, x, end)
                return
            cur = self.find(cur)
            nxt = self.adj[cur].get(x)
            if nxt is None:
                nxt = self.new_vertex()
                self.add_edge(cur, x, nxt)
            cur = nxt

    def adjacency(self) -> dict[int, dict[int, int]]:
        find = self.find
        return {
            v: {label: find(w) for label, w in a.items()}
            for v, a in enumerate(self.adj)
            if a is not None and self.parent[v] == v
        }


def _trim(adj: dict[int, dict[int, int]], keep: Iterable[int] = ()) -> None:
    """Delete hanging trees in place, never deleting vertices in ``keep``."""
    keep = set(keep)
    queue = [v for v, a in adj.items() if len(a) <= 1 and v not in keep]
    while queue:
        v = queue.pop()
        a = adj.get(v)
        if a is None or len(a) > 1 or v in keep:
            continue
        for label, w in a.items():
            adj[w].pop(-label, None)
            if len(adj[w]) <= 1 and w not in keep:
                queue.append(w)
        del adj[v]


def _bfs_words(adj, base, letters) -> dict[int, Letters]:
    """Shortlex-least path word from ``base`` to every reachable vertex."""
    words = {base: ()}
    queue = deque([base])
    while queue:
        v = queue.popleft()
        a = adj[v]
        for x in letters:
            w = a.get(x)
            if w is not None and w not in words:
                words[w] = words[v] + (x,)
                queue.append(w)
    return words


class StallingsGraph:
    """Folded based graph with vertices numbered canonically from base 0."""

    __slots__ = ("rank", "_adj", "_geodesics")

    def __init__(self, rank: int, adj: dict[int, dict[int, int]], base: int):
        self.rank = rank
        letters = Alphabet(rank).letters()
        order = _bfs_words(adj, base, letters)
        numbering = {v: i for i, v in enumerate(sorted(order, key=lambda v: shortlex_key(order[v])))}
        self._adj: tuple[dict[int, int], ...] = tuple(
            {label: numbering[w] for label, w in adj[v].items()}
            for v in sorted(numbering, key=numbering.__getitem__)
        )
        self._geodesics = tuple(order[v] for v in sorted(numbering, key=numbering.__getitem__))

    # construction --------------------------------------------------------

    @classmethod
    def trivial(cls, rank: int) -> "StallingsGraph":
        return cls(rank, {0: {}}, 0)

    # structure -----------------------------------------------------------

    @property
    def base(self) -> int:
        return 0

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.rank)

    @property
    def num_vertices(self) -> int:
        return len(self._adj)

    @property
    def vertices(self) -> range:
        return range(len(self._adj))

    @property
    def edges(self) -> list[tuple[int, int, int]]:
        """(source, target, label) with positive labels, in canonical order."""
        out = []
        for v, a in enumerate(self._adj):
            for label in sorted(a):
                if label > 0:
                    out.append((v, a[label], label))
        out.sort(key=lambda e: (e[0], e[2], e[1]))
        return out

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self._adj) // 2

    def target(self, v: int, letter: int) -> int | None:
        return self._adj[v].get(letter)

    def neighbours(self, v: int) -> dict[int, int]:
        return dict(self._adj[v])

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def geodesic(self, v: int) -> Letters:
        """Shortlex-least word labelling a path from the base to ``v``."""
        return self._geodesics[v]

    def is_core(self) -> bool:
        return all(len(a) >= 2 for a in self._adj[1:])

    def adjacency(self) -> dict[int, dict[int, int]]:
        return {v: dict(a) for v, a in enumerate(self._adj)}

    def read(self, word: Sequence[int], start: int = 0) -> int | None:
        """End vertex of the path spelling ``word`` from ``start``, if any."""
        adj = self._adj
        v = start
        for x in word:
            v = adj[v].get(x)
            if v is None:
                return None
        return v

    def __eq__(self, other) -> bool:
        return isinstance(other, StallingsGraph) and self.rank == other.rank and self._adj == other._adj

    def __hash__(self) -> int:
        return hash((self.rank, tuple(tuple(sorted(a.items())) for a in self._adj)))

    def __repr__(self) -> str:
        return f"StallingsGraph(rank={self.rank}, vertices={self.num_vertices}, edges={self.num_edges})"

    def to_dot(self, name: str = "G") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;"]
        for v in self.vertices:
            shape = "doublecircle" if v == 0 else "circle"
            style = ', style=filled, fillcolor="#ffd27f"' if v == 0 else ""
            lines.append(f'  {v} [shape={shape}{style}];')
        for s, t, label in self.edges:
            lines.append(f'  {s} -> {t} [label="{format_letter(label, self.rank)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DoubleCosetComponent:
    """One component of the fiber product of two Stallings graphs.

    ``intersection`` is the core graph of U ∩ t V t^-1 for ``t =
    representative``.  ``degenerate`` marks components whose intersection is
    trivial (the component is a tree).
    """

    representative: Word
    intersection: "StallingsGraph"
    rank: int
    reduced_rank: int
    degenerate: bool
    is_base: bool = False
    vertex: tuple[int, int] = field(default=(0, 0), compare=False)


def _check_alphabet(letters: Sequence[int], rank: int) -> None:
    for x in letters:
        if x == 0 or abs(x) > rank:
            raise AlphabetError(f"letter {x} outside alphabet of rank {rank}")


def _rank_of(alphabet: Alphabet | int) -> int:
    return alphabet.rank if isinstance(alphabet, Alphabet) else Alphabet(alphabet).rank


def fold(num_vertices: int, edges: Iterable[tuple[int, int, int]], rank: int, base: int = 0) -> StallingsGraph:
    """Fold a labelled graph given as (source, target, signed label) triples.

    Vertices unreachable from ``base`` are discarded.  No trimming is done.
    """
    folder = _Folder()
    for _ in range(num_vertices):
        folder.new_vertex()
    for s, t, label in edges:
        _check_alphabet((label,), rank)
        folder.add_edge(s, label, t)
    return StallingsGraph(rank, folder.adjacency(), folder.find(base))


def from_generators(gens: Iterable[Word | Sequence[int]], alphabet: Alphabet | int) -> StallingsGraph:
    """Folded core graph of the subgroup generated by ``gens``."""
    rank = _rank_of(alphabet)
    folder = _Folder()
    base = folder.new_vertex()
    for g in gens:
        letters = free_reduce(g.letters if isinstance(g, Word) else g)
        _check_alphabet(letters, rank)
        if letters:
            folder.add_path(base, letters, base)
    adj = folder.adjacency()
    b = folder.find(base)
    _trim(adj, keep=(b,))
    return StallingsGraph(rank, adj, b)


def core(g: StallingsGraph) -> StallingsGraph:
    adj = g.adjacency()
    _trim(adj, keep=(0,))
    return StallingsGraph(g.rank, adj, 0)


def membership(g: StallingsGraph, w: Word | Sequence[int]) -> bool:
    letters = w.letters if isinstance(w, Word) else free_reduce(w)
    _check_alphabet(letters, g.rank)
    return g.read(letters) == 0


def rank(g: StallingsGraph) -> int:
    return g.num_edges - g.num_vertices + 1


def reduced_rank(g: StallingsGraph) -> int:
    return max(rank(g) - 1, 0)


def index_in_ambient(g: StallingsGraph) -> int | float:
    letters = g.alphabet.letters()
    for v in g.vertices:
        if any(g.target(v, x) is None for x in letters):
            return INFINITE
    return g.num_vertices


def basis(g: StallingsGraph) -> list[Word]:
    """Free basis read off the shortlex geodesic spanning tree."""
    tree = set()
    for v in range(1, g.num_vertices):
        path = g.geodesic(v)
        x = path[-1]
        u = g.read(path[:-1])
        tree.add((u, x, v))
    out = []
    for s, t, label in g.edges:
        if (s, label, t) in tree or (t, -label, s) in tree:
            continue
        out.append(Word(multiply(g.geodesic(s), (label,), invert(g.geodesic(t)))))
    return out


def _with_stem(rank: int, adj: dict[int, dict[int, int]], base: int, stem: Sequence[int]) -> StallingsGraph:
    """Core graph of w π1(adj, base) w^-1 where ``w = stem``."""
    folder = _Folder()
    ids = {v: folder.new_vertex() for v in adj}
    for v, a in adj.items():
        for label, w in a.items():
            if label > 0:
                folder.add_edge(ids[v], label, ids[w])
    new_base = folder.new_vertex()
    folder.add_path(new_base, stem, ids[base])
    out = folder.adjacency()
    b = folder.find(new_base)
    _trim(out, keep=(b,))
    return StallingsGraph(rank, out, b)


def conjugate(g: StallingsGraph, t: Word | Sequence[int]) -> StallingsGraph:
    """Core graph of t^-1 H t where H is the subgroup of ``g``."""
    letters = t.letters if isinstance(t, Word) else free_reduce(t)
    _check_alphabet(letters, g.rank)
    if not letters:
        return g
    return _with_stem(g.rank, g.adjacency(), 0, invert(letters))


def is_isomorphic(g: StallingsGraph, h: StallingsGraph) -> bool:
    """Labelled based isomorphism by simultaneous traversal from the bases."""
    if g.rank != h.rank or g.num_vertices != h.num_vertices or g.num_edges != h.num_edges:
        return False
    mapping = {0: 0}
    stack = [0]
    while stack:
        v = stack.pop()
        a, b = g.neighbours(v), h.neighbours(mapping[v])
        if a.keys() != b.keys():
            return False
        for x, w in a.items():
            image = b[x]
            known = mapping.get(w)
            if known is None:
                mapping[w] = image
                stack.append(w)
            elif known != image:
                return False
    return len(set(mapping.values())) == len(mapping) == g.num_vertices


def _edges_by_label(g: StallingsGraph) -> dict[int, list[tuple[int, int]]]:
    out: dict[int, list[tuple[int, int]]] = {x: [] for x in range(1, g.rank + 1)}
    for s, t, label in g.edges:
        out[label].append((s, t))
    return out


def pullback(gU: StallingsGraph, gV: StallingsGraph) -> list[DoubleCosetComponent]:
    """Components of the fiber product of ``gU`` and ``gV``.

    The base component comes first (representative 1, intersection U ∩ V),
    followed by the remaining components that carry at least one edge, in
    order of their representatives.  Isolated product vertices are omitted.
    """
    if gU.rank != gV.rank:
        raise AlphabetError(f"alphabet mismatch: rank {gU.rank} vs rank {gV.rank}")
    r = gU.rank
    nV = gV.num_vertices
    eu, ev = _edges_by_label(gU), _edges_by_label(gV)

    parent: dict[int, int] = {0: 0}

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    product_edges: list[tuple[int, int, int]] = []
    for label in range(1, r + 1):
        for p, p2 in eu[label]:
            for q, q2 in ev[label]:
                a, b = p * nV + q, p2 * nV + q2
                product_edges.append((a, b, label))
                parent.setdefault(a, a)
                parent.setdefault(b, b)
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[rb] = ra

    groups: dict[int, list[int]] = {}
    for v in parent:
        groups.setdefault(find(v), []).append(v)
    edge_groups: dict[int, list[tuple[int, int, int]]] = {root: [] for root in groups}
    for e in product_edges:
        edge_groups[find(e[0])].append(e)

    base_root = find(0)
    out = []
    for root, verts in groups.items():
        out.append(_component(gU, gV, verts, edge_groups[root], root == base_root))
    out.sort(key=lambda c: (not c.is_base, shortlex_key(c.representative.letters), c.vertex))
    return out


def _component(gU, gV, verts, edges, is_base) -> DoubleCosetComponent:
    nV = gV.num_vertices
    r = gU.rank
    comp_rank = len(edges) - len(verts) + 1
    adj: dict[int, dict[int, int]] = {v: {} for v in verts}
    for a, b, label in edges:
        adj[a][label] = b
        adj[b][-label] = a

    if is_base:
        _trim(adj, keep=(0,))
        graph = StallingsGraph(r, adj, 0)
        return DoubleCosetComponent(
            representative=Word(),
            intersection=graph,
            rank=comp_rank,
            reduced_rank=max(comp_rank - 1, 0),
            degenerate=comp_rank == 0,
            is_base=True,
            vertex=(gU.base, gV.base),
        )

    degenerate = comp_rank == 0
    if not degenerate:
        _trim(adj)
    best = None
    for v in adj:
        p, q = divmod(v, nV)
        t = multiply(gU.geodesic(p), invert(gV.geodesic(q)))
        key = (shortlex_key(t), p, q)
        if best is None or key < best[0]:
            best = (key, v, t)
    _, v, t = best
    p, q = divmod(v, nV)
    if degenerate:
        graph = StallingsGraph.trivial(r)
    else:
        graph = _with_stem(r, adj, v, gU.geodesic(p))
    return DoubleCosetComponent(
        representative=Word(t),
        intersection=graph,
        rank=comp_rank,
        reduced_rank=max(comp_rank - 1, 0),
        degenerate=degenerate,
        is_base=False,
        vertex=(p, q),
    )


def intersection(gU: StallingsGraph, gV: StallingsGraph) -> StallingsGraph:
    """Core graph of U ∩ V: the component of the product at the base pair."""
    if gU.rank != gV.rank:
        raise AlphabetError(f"alphabet mismatch: rank {gU.rank} vs rank {gV.rank}")
    adj: dict[tuple[int, int], dict[int, tuple[int, int]]] = {(0, 0): {}}
    queue = deque([(0, 0)])
    while queue:
        p, q = queue.popleft()
        a = adj[(p, q)]
        nu, nv = gU.neighbours(p), gV.neighbours(q)
        for x, p2 in nu.items():
            q2 = nv.get(x)
            if q2 is None:
                continue
            w = (p2, q2)
            a[x] = w
            if w not in adj:
                adj[w] = {}
                queue.append(w)
    _trim(adj, keep=((0, 0),))
    return StallingsGraph(gU.rank, adj, (0, 0))


# --- subgroup files -----------------------------------------------------------


class SubgroupFileError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def parse_subgroup_file(text: str) -> tuple[Alphabet, list[Word]]:
    """Parse ``alphabet: <rank>`` followed by one word per line."""
    alphabet = None
    gens: list[Word] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        if alphabet is None:
            head, sep, value = stripped.partition(":")
            if head.strip() != "alphabet" or not sep:
                raise SubgroupFileError("expected 'alphabet: <rank>'", lineno, col)
            try:
                alphabet = Alphabet(int(value.strip()))
            except ValueError:
                raise SubgroupFileError(f"bad alphabet rank {value.strip()!r}", lineno, col + len(head) + 1) from None
            continue
        try:
            gens.append(parse_word(stripped, alphabet.rank))
        except WordParseError as exc:
            raise SubgroupFileError(str(exc), lineno, col + exc.offset) from None
    if alphabet is None:
        raise SubgroupFileError("missing 'alphabet: <rank>' header", 1, 1)
    return alphabet, gens


def format_subgroup_file(alphabet: Alphabet | int, gens: Iterable[Word | Sequence[int]]) -> str:
    alphabet = alphabet if isinstance(alphabet, Alphabet) else Alphabet(alphabet)
    lines = [f"alphabet: {alphabet.rank}"]
    lines.extend(alphabet.format(g) for g in gens)
    return "\n".join(lines) + "\n"
