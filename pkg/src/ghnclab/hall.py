"""Marshall Hall completions and structural independence certificates."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .gog import GraphOfGroups
from .stallings import (
    StallingsGraph,
    from_generators,
    index_in_ambient,
    intersection,
    membership,
    rank,
)
from .words import Word, invert, multiply


@dataclass(frozen=True)
class Embedding:
    """Injection of the input core into the cover."""

    vertices: dict[int, int]
    edges: dict[tuple[int, int, int], tuple[int, int, int]]


@dataclass(frozen=True)
class HallCompletion:
    cover: StallingsGraph
    index: int
    embedded_core: Embedding
    complement_basis: tuple[Word, ...]

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "cover_rank": rank(self.cover),
            "complement_basis": [self.cover.alphabet.format(w) for w in self.complement_basis],
        }


def hall_completion(g: StallingsGraph) -> HallCompletion:
    """Complete every generator's partial permutation without adding vertices.

    For each label, vertices lacking an outgoing edge are paired in index
    order with vertices lacking an incoming one.  The new edges, read along
    the geodesic tree of ``g``, give a basis of a free complement.
    """
    n = g.num_vertices
    adj = {v: dict(g.neighbours(v)) for v in g.vertices}
    added = []
    for x in range(1, g.rank + 1):
        sources = [v for v in range(n) if x not in adj[v]]
        targets = [v for v in range(n) if -x not in adj[v]]
        for s, t in zip(sources, targets):
            adj[s][x] = t
            adj[t][-x] = s
            added.append((s, t, x))
    cover = StallingsGraph(g.rank, adj, 0)

    vmap = {v: cover.read(g.geodesic(v)) for v in g.vertices}
    emap = {(s, t, x): (vmap[s], vmap[t], x) for s, t, x in g.edges}
    complement = tuple(
        Word(multiply(g.geodesic(s), (x,), invert(g.geodesic(t)))) for s, t, x in added
    )
    return HallCompletion(cover, n, Embedding(vmap, emap), complement)


# --- certificates ---------------------------------------------------------------


class CertificateKind(str, Enum):
    FREE_FACTOR = "FREE_FACTOR"
    MV_SUBGRAPH = "MV_SUBGRAPH"
    NONE = "NONE"


@dataclass(frozen=True)
class IndependenceCertificate:
    kind: CertificateKind
    witness: Any = None
    reasons: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.kind is not CertificateKind.NONE


def free_factor_certificate(h: StallingsGraph) -> IndependenceCertificate:
    completion = hall_completion(h)
    return IndependenceCertificate(CertificateKind.FREE_FACTOR, completion)


class SubgraphError(ValueError):
    """Malformed injection data for a subgraph of groups."""


@dataclass(frozen=True)
class SubEdge:
    """Sub-edge over ambient edge ``edge`` joining sub-vertices ``source`` and ``target``.

    The sub-edge group is generated by the ``exponent``-th power of the
    ambient edge generator; exponent 0 means trivial.  ``word_from`` and
    ``word_to`` optionally spell its images in the two vertex groups.
    """

    edge: str
    source: str
    target: str
    exponent: int = 1
    word_from: Word | None = None
    word_to: Word | None = None


@dataclass(frozen=True)
class SubgraphOfGroups:
    vertex_map: dict[str, str]
    vertex_groups: dict[str, StallingsGraph]
    edges: dict[str, SubEdge] = field(default_factory=dict)

    def euler_characteristic(self) -> int:
        chi = sum(1 - rank(h) for h in self.vertex_groups.values())
        return chi - sum(1 for f in self.edges.values() if f.exponent == 0)


@dataclass
class SubgraphReport:
    conditions: dict[str, list[str]]

    @property
    def ok(self) -> bool:
        return not any(self.conditions.values())

    def __bool__(self) -> bool:
        return self.ok


def _check_shape(sub: SubgraphOfGroups, amb: GraphOfGroups) -> None:
    if set(sub.vertex_map) != set(sub.vertex_groups):
        raise SubgraphError("vertex_map and vertex_groups name different sub-vertices")
    for s, v in sub.vertex_map.items():
        if v not in amb.vertex_ranks:
            raise SubgraphError(f"sub-vertex {s} maps to unknown vertex {v}")
    ids = {e.id for e in amb.edges}
    for fid, f in sub.edges.items():
        if f.edge not in ids:
            raise SubgraphError(f"sub-edge {fid} maps to unknown edge {f.edge}")
        for end in (f.source, f.target):
            if end not in sub.vertex_map:
                raise SubgraphError(f"sub-edge {fid} has unknown endpoint {end}")
        if f.exponent < 0:
            raise SubgraphError(f"sub-edge {fid} has negative exponent")


def is_subgraph_of_groups(sub: SubgraphOfGroups, amb: GraphOfGroups) -> SubgraphReport:
    """Check the four defining conditions; the report lists failures per condition."""
    _check_shape(sub, amb)
    c1: list[str] = []
    c2: list[str] = []
    c3: list[str] = []
    c4: list[str] = []

    images = list(sub.vertex_map.values())
    if len(set(images)) != len(images):
        c1.append("vertex map is not injective")
    edge_images = [f.edge for f in sub.edges.values()]
    if len(set(edge_images)) != len(edge_images):
        c1.append("edge map is not injective")

    for s, h in sub.vertex_groups.items():
        r = amb.vertex_ranks[sub.vertex_map[s]]
        if h.rank != max(r, 1) and not (r == 0 and rank(h) == 0):
            c2.append(f"sub-vertex {s}: group lives in rank {h.rank}, vertex has rank {r}")

    for fid, f in sub.edges.items():
        e = amb.edge(f.edge)
        if sub.vertex_map[f.source] != e.source or sub.vertex_map[f.target] != e.target:
            c1.append(f"sub-edge {fid}: endpoints do not map to those of {e.id}")
            continue
        if e.is_trivial:
            if f.exponent != 0:
                c2.append(f"sub-edge {fid}: nontrivial group over trivial edge {e.id}")
            continue
        ends = ((f.source, e.word_from, f.word_from), (f.target, e.word_to, f.word_to))
        for s, w, given in ends:
            h = sub.vertex_groups[s]
            image = w ** f.exponent
            if not membership(h, image):
                c2.append(f"sub-edge {fid}: image {h.alphabet.format(image)} not in group of {s}")
            meet = intersection(h, from_generators([w], h.rank))
            expected = from_generators([image] if f.exponent else [], h.rank)
            if meet != expected:
                c3.append(f"sub-edge {fid}: group is not the intersection at {s}")
            if given is not None and given != image:
                c4.append(f"sub-edge {fid}: word at {s} is not the restricted edge map")
    return SubgraphReport({"1": c1, "2": c2, "3": c3, "4": c4})


def mv_certificate(sub: SubgraphOfGroups, amb: GraphOfGroups) -> IndependenceCertificate:
    """Mayer-Vietoris certificate for free vertex groups.

    Each sub-vertex group must be cyclic or a free factor of its ambient
    vertex group, every ambient edge group cyclic or trivial, and every
    sub-edge group equal to the ambient one.
    """
    report = is_subgraph_of_groups(sub, amb)
    if not report:
        reasons = tuple(f"condition {k}: {m}" for k, ms in report.conditions.items() for m in ms)
        return IndependenceCertificate(CertificateKind.NONE, None, reasons)
    reasons = []
    vertex_certs = {}
    for s, h in sub.vertex_groups.items():
        if rank(h) <= 1:
            vertex_certs[s] = IndependenceCertificate(CertificateKind.FREE_FACTOR, None, ("cyclic",))
            continue
        cert = free_factor_certificate(h)
        if cert.witness.index != 1:
            reasons.append(f"sub-vertex {s}: only a free factor at index {cert.witness.index}")
        vertex_certs[s] = cert
    for e in amb.edges:
        if not e.is_trivial and (len(e.word_from) == 0 or len(e.word_to) == 0):
            reasons.append(f"edge {e.id}: edge group is not cyclic")
    for fid, f in sub.edges.items():
        if not amb.edge(f.edge).is_trivial and f.exponent != 1:
            reasons.append(f"sub-edge {fid}: proper subgroup of the edge group")
    if reasons:
        return IndependenceCertificate(CertificateKind.NONE, None, tuple(reasons))
    return IndependenceCertificate(CertificateKind.MV_SUBGRAPH, {"sub": sub, "vertices": vertex_certs})


def whole_graph(amb: GraphOfGroups) -> SubgraphOfGroups:
    """The graph of groups as a subgraph of itself."""
    groups = {v: from_generators([(x,) for x in range(1, r + 1)], max(r, 1)) for v, r in amb.vertex_ranks.items()}
    edges = {e.id: SubEdge(e.id, e.source, e.target, 0 if e.is_trivial else 1) for e in amb.edges}
    return SubgraphOfGroups({v: v for v in amb.vertex_ranks}, groups, edges)


__all__ = [
    "Embedding",
    "HallCompletion",
    "hall_completion",
    "CertificateKind",
    "IndependenceCertificate",
    "free_factor_certificate",
    "SubgraphError",
    "SubEdge",
    "SubgraphOfGroups",
    "SubgraphReport",
    "is_subgraph_of_groups",
    "mv_certificate",
    "whole_graph",
    "index_in_ambient",
]
