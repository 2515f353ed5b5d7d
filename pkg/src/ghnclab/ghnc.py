"""Verification harness for the geometric Hanna Neumann inequality in free groups."""

from __future__ import annotations

import json
import os
import random
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .stallings import (
    StallingsGraph,
    _Folder,
    from_generators,
    pullback,
    rank,
    reduced_rank,
)
from .words import (
    Alphabet,
    AlphabetError,
    Word,
    format_word,
    free_reduce,
    invert,
    multiply,
    reduced_words,
    shortlex_key,
)

MASK64 = (1 << 64) - 1


def _chi_bar(g: StallingsGraph) -> int:
    return reduced_rank(g)


@dataclass(frozen=True)
class ComponentSummary:
    representative: str
    rank: int
    reduced_rank: int
    is_base: bool


@dataclass(frozen=True)
class GhncReport:
    lhs: int
    rhs: int
    holds: bool
    components: tuple[ComponentSummary, ...]
    degenerate_components: int
    classical_lhs: int
    classical_rhs: int
    classical_holds: bool

    def as_dict(self) -> dict:
        d = asdict(self)
        d["components"] = [asdict(c) for c in self.components]
        return d


def _core(gens, rank_: int) -> StallingsGraph:
    return from_generators([g if isinstance(g, Word) else free_reduce(g) for g in gens], rank_)


def _rank(alphabet: Alphabet | int) -> int:
    return alphabet.rank if isinstance(alphabet, Alphabet) else Alphabet(alphabet).rank


def ghnc_report(gU: StallingsGraph, gV: StallingsGraph) -> GhncReport:
    if gU.rank != gV.rank:
        raise AlphabetError(f"alphabet mismatch: rank {gU.rank} vs rank {gV.rank}")
    comps = pullback(gU, gV)
    lhs = sum(c.reduced_rank for c in comps)
    rhs = _chi_bar(gU) * _chi_bar(gV)
    base = comps[0]
    summaries = tuple(
        ComponentSummary(format_word(c.representative, gU.rank), c.rank, c.reduced_rank, c.is_base)
        for c in comps
        if c.is_base or not c.degenerate
    )
    degenerate = sum(1 for c in comps if c.degenerate and not c.is_base)
    return GhncReport(
        lhs=lhs,
        rhs=rhs,
        holds=lhs <= rhs,
        components=summaries,
        degenerate_components=degenerate,
        classical_lhs=base.reduced_rank,
        classical_rhs=2 * rhs,
        classical_holds=base.reduced_rank <= 2 * rhs,
    )


def ghnc_check(U: Iterable, V: Iterable, alphabet: Alphabet | int) -> GhncReport:
    """Sum of reduced ranks over all double cosets against the product bound.

    Empty generator lists stand for the trivial subgroup.
    """
    r = _rank(alphabet)
    return ghnc_report(_core(U, r), _core(V, r))


def classical_hn_check(U: Iterable, V: Iterable, alphabet: Alphabet | int) -> bool:
    """rank(U ∩ V) - 1 <= 2 (rank U - 1)(rank V - 1), with reduced ranks."""
    from .stallings import intersection

    r = _rank(alphabet)
    gU, gV = _core(U, r), _core(V, r)
    return reduced_rank(intersection(gU, gV)) <= 2 * _chi_bar(gU) * _chi_bar(gV)


# --- brute-force oracle -----------------------------------------------------------


def _distances_to(g: StallingsGraph, target: int) -> list[int]:
    dist = [-1] * g.num_vertices
    dist[target] = 0
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for w in g.neighbours(v).values():
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def _lexmin_path(adj, dist, start: int, letters: list[int]) -> tuple[int, ...]:
    """Shortlex-least path label from ``start`` down a distance gradient."""
    out = []
    v = start
    while dist[v]:
        for x in letters:
            w = adj(v).get(x)
            if w is not None and dist[w] == dist[v] - 1:
                out.append(x)
                v = w
                break
    return tuple(out)


def in_double_coset(gU: StallingsGraph, gV: StallingsGraph, t: Sequence[int], t2: Sequence[int]) -> bool:
    """Exact test of t2 ∈ U t V.

    Equivalent to t2^-1 U t meeting V.  The coset t2^-1 U t is recognised by
    the folded graph of U with two stems; the test is reachability in its
    product with the graph of V.
    """
    folder = _Folder()
    ids = [folder.new_vertex() for _ in gU.vertices]
    for s, d, x in gU.edges:
        folder.add_edge(ids[s], x, ids[d])
    start, end = folder.new_vertex(), folder.new_vertex()
    folder.add_path(start, invert(free_reduce(t2)), ids[0])
    folder.add_path(ids[0], free_reduce(t), end)
    adj = folder.adjacency()
    start, end = folder.find(start), folder.find(end)
    seen = {(start, 0)}
    queue = deque(seen)
    while queue:
        a, q = queue.popleft()
        if a == end and q == 0:
            return True
        nv = gV.neighbours(q)
        for x, b in adj[a].items():
            q2 = nv.get(x)
            if q2 is not None and (b, q2) not in seen:
                seen.add((b, q2))
                queue.append((b, q2))
    return False


class DoubleCosetAutomaton:
    """Groups words t by double coset U t V without consulting the fiber product.

    Read the longest prefix of t in the U-graph from its base and the longest
    suffix of the rest backwards in the V-graph.  When a middle part m is
    left over, the two graphs joined by a path spelling m are already folded
    and that path is a cut, so the shortlex-least element of U t V is the
    least geodesic from the U-base through m to the V-base.  Otherwise t is
    absorbed and its double coset depends only on the pair of vertices where
    the two readings meet.
    """

    def __init__(self, gU: StallingsGraph, gV: StallingsGraph):
        self.gU, self.gV = gU, gV
        self.letters = Alphabet(gU.rank).letters()
        self._dist_V = _distances_to(gV, 0)
        self._down_V: dict[int, tuple[int, ...]] = {}

    def _to_V_base(self, v: int) -> tuple[int, ...]:
        if v not in self._down_V:
            self._down_V[v] = _lexmin_path(self.gV.neighbours, self._dist_V, v, self.letters)
        return self._down_V[v]

    def tag(self, t: Sequence[int]) -> tuple:
        """("min", least element) or ("glued", (u, v)); equal tags mean equal double cosets."""
        t = free_reduce(t)
        gU, gV = self.gU, self.gV
        u, i = 0, 0
        while i < len(t):
            w = gU.target(u, t[i])
            if w is None:
                break
            u, i = w, i + 1
        v, j = 0, len(t)
        while j > i:
            w = gV.target(v, -t[j - 1])
            if w is None:
                break
            v, j = w, j - 1
        if j > i:
            return ("min", multiply(gU.geodesic(u), t[i:j], self._to_V_base(v)))
        return ("glued", (u, v))

    def equivalent(self, t: Sequence[int], t2: Sequence[int]) -> bool:
        if self.tag(t) == self.tag(t2):
            return True
        return in_double_coset(self.gU, self.gV, t, t2)


def _closed_words(g: StallingsGraph, max_len: int, base: int = 0) -> list[tuple[int, ...]]:
    """Nontrivial reduced words of length <= max_len that are loops at ``base``."""
    letters = Alphabet(g.rank).letters()
    out = []
    stack = [(base, ())]
    while stack:
        v, w = stack.pop()
        if w and v == base:
            out.append(w)
        if len(w) == max_len:
            continue
        last = w[-1] if w else 0
        for x in letters:
            if x == -last:
                continue
            nxt = g.target(v, x)
            if nxt is not None:
                stack.append((nxt, w + (x,)))
    out.sort(key=shortlex_key)
    return out


def _schreier_step(g: StallingsGraph, state: tuple[int, tuple[int, ...]], x: int):
    """Right action of a letter on cosets, a coset being a core vertex plus a hanging word."""
    p, s = state
    if not s:
        q = g.target(p, x)
        return (q, ()) if q is not None else (p, (x,))
    if s[-1] == -x:
        return (p, s[:-1])
    return (p, s + (x,))


def _schreier_read(g: StallingsGraph, state, word: Sequence[int]):
    for x in word:
        state = _schreier_step(g, state, x)
    return state


@dataclass(frozen=True)
class OracleBucket:
    representative: Word
    members: int
    witness: Word
    elements: tuple[Word, ...]

    @property
    def nontrivial(self) -> bool:
        return bool(self.elements)


@dataclass(frozen=True)
class OracleResult:
    max_len: int
    buckets: tuple[OracleBucket, ...]

    @property
    def nontrivial(self) -> list[OracleBucket]:
        return [b for b in self.buckets if b.nontrivial]


def oracle_double_cosets(U: Iterable, V: Iterable, alphabet: Alphabet | int, max_len: int) -> OracleResult:
    """Enumerate every reduced t with |t| <= max_len, bucket by double coset,
    and look for elements of U ∩ t V t^-1 of length <= max_len.

    Complete only relative to ``max_len``.
    """
    r = _rank(alphabet)
    return oracle_from_graphs(_core(U, r), _core(V, r), max_len)


def oracle_from_graphs(gU: StallingsGraph, gV: StallingsGraph, max_len: int) -> OracleResult:
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    auto = DoubleCosetAutomaton(gU, gV)
    groups: dict[tuple, list[tuple[int, ...]]] = {}
    for t in reduced_words(gU.rank, max_len):
        groups.setdefault(auto.tag(t), []).append(t)

    # x fixes the coset V t^-1 = (p, s) exactly when x = s^-1 y s for a loop y at p
    v_loops = {p: _closed_words(gV, max_len, p) for p in gV.vertices}
    found_at: dict = {}

    def elements(t):
        state = _schreier_read(gV, (0, ()), invert(t))
        if state not in found_at:
            p, hang = state
            budget = max_len - 2 * len(hang)
            hang_inv = invert(hang)
            found_at[state] = tuple(
                x
                for y in v_loops[p]
                if len(y) <= budget and gU.read(x := hang_inv + y + hang) == 0
            )
        return found_at[state]

    # a group is nontrivial when some member has a short witness
    merged: list[list] = []  # [representative, members, witness, elements]
    trivial = []
    for tag in sorted(groups, key=lambda k: shortlex_key(groups[k][0])):
        members = groups[tag]
        hit = next(((t, e) for t in members if (e := elements(t))), None)
        if hit is None:
            trivial.append(OracleBucket(Word(members[0]), len(members), Word(members[0]), ()))
            continue
        for bucket in merged:
            if in_double_coset(gU, gV, bucket[0], members[0]):
                bucket[1] += len(members)
                break
        else:
            merged.append([members[0], len(members), hit[0], hit[1]])
    buckets = [OracleBucket(Word(t), n, Word(w), tuple(Word(x) for x in e)) for t, n, w, e in merged]
    buckets.sort(key=lambda b: shortlex_key(b.representative.letters))
    return OracleResult(max_len, tuple(buckets + trivial))


@dataclass(frozen=True)
class OracleComparison:
    """Outcome of checking the pullback against the word oracle.

    ``beyond_horizon`` counts nontrivial components for which no witness
    (t, x) with |t|, |x| <= max_len was found from the geodesic
    representatives; the truncated oracle is not obliged to see those.
    """

    agrees: bool
    pullback_nontrivial: int
    oracle_nontrivial: int
    problems: tuple[str, ...] = ()
    beyond_horizon: int = 0


def _short_witness(gU, gV, start: tuple[int, int], closed_u, max_len: int):
    """A pair (t, x) with x in U ∩ t V t^-1, both of length <= max_len, where
    t = geo_U(p) geo_V(q)^-1 for a vertex (p, q) of the component at ``start``."""
    seen = {start}
    queue = deque([start])
    letters = Alphabet(gU.rank).letters()
    while queue:
        p, q = queue.popleft()
        t = multiply(gU.geodesic(p), invert(gV.geodesic(q)))
        if len(t) <= max_len:
            tinv = invert(t)
            for x in closed_u:
                if gV.read(multiply(tinv, x, t)) == 0:
                    return t, x
        for y in letters:
            nxt = (gU.target(p, y), gV.target(q, y))
            if None not in nxt and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return None


def _membership_disagreement(gU, gV, g: StallingsGraph, t, max_len: int):
    """First word of length <= max_len on which the component graph and the
    predicate "x in U and t^-1 x t in V" differ, or None."""
    tinv = invert(t)
    letters = Alphabet(gU.rank).letters()
    stack = [((), 0, 0)]
    while stack:
        x, pu, pg = stack.pop()
        if x:
            expected = pu == 0 and gV.read(multiply(tinv, x, t)) == 0
            if expected != (pg == 0):
                return x
        if len(x) == max_len:
            continue
        last = x[-1] if x else 0
        for y in letters:
            if y == -last:
                continue
            qu = gU.target(pu, y) if pu is not None else None
            qg = g.target(pg, y) if pg is not None else None
            if qu is None and qg is None:
                continue  # neither side can accept any extension
            stack.append((x + (y,), qu, qg))
    return None


def compare_with_oracle(gU: StallingsGraph, gV: StallingsGraph, max_len: int) -> OracleComparison:
    """Pullback components with nontrivial intersection against the oracle.

    Every oracle bucket must match exactly one component and distinct
    buckets distinct components; every component with a witness inside the
    horizon must be found; membership must agree on every word of length
    <= max_len.  When no component lies beyond the horizon the counts are
    therefore equal.
    """
    oracle = oracle_from_graphs(gU, gV, max_len)
    buckets = oracle.nontrivial
    comps = [c for c in pullback(gU, gV) if not c.degenerate]
    closed_u = _closed_words(gU, max_len)
    problems = []
    matched: dict[int, str] = {}
    beyond = 0
    for c in comps:
        t = c.representative.letters
        hits = [i for i, b in enumerate(buckets) if in_double_coset(gU, gV, b.representative.letters, t)]
        if len(hits) > 1:
            problems.append(f"component {format_word(t)} matches {len(hits)} oracle buckets")
        elif hits and hits[0] in matched:
            problems.append(f"components {matched[hits[0]]} and {format_word(t)} share a double coset")
        elif hits:
            matched[hits[0]] = format_word(t)
        elif _short_witness(gU, gV, c.vertex, closed_u, max_len) is not None:
            problems.append(f"component {format_word(t)} has a short witness but no oracle bucket")
        else:
            beyond += 1
        bad = _membership_disagreement(gU, gV, c.intersection, t, max_len)
        if bad is not None:
            problems.append(f"membership of {format_word(bad)} differs at {format_word(t)}")
    for i, b in enumerate(buckets):
        if i not in matched:
            problems.append(f"oracle bucket {format_word(b.representative)} matches no component")
    return OracleComparison(not problems, len(comps), len(buckets), tuple(problems), beyond)


# --- random instances --------------------------------------------------------------


@dataclass(frozen=True)
class RandomModel:
    seed: int
    ambient_rank: int
    num_generators: int
    word_length: int

    def __post_init__(self):
        if self.ambient_rank < 1:
            raise ValueError("ambient rank must be positive")
        if self.num_generators < 0 or self.word_length < 1:
            raise ValueError("need num_generators >= 0 and word_length >= 1")


def random_word(rng: random.Random, rank_: int, length: int) -> Word:
    """Uniform reduced word of the given length."""
    letters = []
    for i in range(length):
        if i == 0:
            x = rng.randrange(2 * rank_)
        else:
            x = rng.randrange(2 * rank_ - 1)
            forbidden = -letters[-1]
            code = 2 * abs(forbidden) - 2 + (forbidden < 0)
            if x >= code:
                x += 1
        letters.append((x // 2 + 1) * (-1 if x % 2 else 1))
    return Word(tuple(letters))


def random_subgroup(model: RandomModel, rng: random.Random | None = None) -> list[Word]:
    rng = rng if rng is not None else random.Random(model.seed & MASK64)
    return [
        random_word(rng, model.ambient_rank, rng.randint(1, model.word_length))
        for _ in range(model.num_generators)
    ]


# --- batch harness ------------------------------------------------------------------


class ConfigError(ValueError):
    pass


class BatchIOError(OSError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    enabled: bool = False
    max_len: int = 8


@dataclass(frozen=True)
class BatchConfig:
    seed: int = 0
    instances: int = 0
    ambient_rank: tuple[int, ...] = (2,)
    max_generators: int = 3
    max_word_length: int = 8
    oracle: OracleConfig = OracleConfig()
    out: str | None = None
    figures: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "BatchConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        ranks = data.get("ambient_rank", 2)
        ranks = tuple(ranks) if isinstance(ranks, list) else (ranks,)
        oracle = data.get("oracle", {}) or {}
        try:
            cfg = cls(
                seed=int(data.get("seed", 0)) & MASK64,
                instances=int(data.get("instances", 0)),
                ambient_rank=tuple(int(r) for r in ranks),
                max_generators=int(data.get("max_generators", 3)),
                max_word_length=int(data.get("max_word_length", 8)),
                oracle=OracleConfig(bool(oracle.get("enabled", False)), int(oracle.get("max_len", 8))),
                out=data.get("out"),
                figures=data.get("figures"),
            )
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"bad config value: {exc}") from None
        if cfg.instances < 0 or cfg.max_generators < 0 or cfg.max_word_length < 1:
            raise ConfigError("instances, max_generators must be >= 0 and max_word_length >= 1")
        if not cfg.ambient_rank or any(r < 1 for r in cfg.ambient_rank):
            raise ConfigError("ambient_rank must be positive")
        if cfg.oracle.max_len < 1:
            raise ConfigError("oracle.max_len must be >= 1")
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "BatchConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise BatchIOError(f"{path}: {exc.strerror or exc}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)


def instance(cfg: BatchConfig, index: int) -> tuple[int, list[Word], list[Word]]:
    """The index-th instance: deterministic in (seed, index)."""
    rng = random.Random((cfg.seed ^ index) & MASK64)
    r = cfg.ambient_rank[rng.randrange(len(cfg.ambient_rank))]
    pair = []
    for _ in range(2):
        k = rng.randint(1, cfg.max_generators) if cfg.max_generators else 0
        pair.append(random_subgroup(RandomModel(0, r, k, cfg.max_word_length), rng))
    return r, pair[0], pair[1]


def run_instance(cfg: BatchConfig, index: int) -> dict:
    r, U, V = instance(cfg, index)
    start = time.perf_counter()
    gU, gV = _core(U, r), _core(V, r)
    report = ghnc_report(gU, gV)
    record = {
        "index": index,
        "seed": (cfg.seed ^ index) & MASK64,
        "rank": r,
        "U": [format_word(w, r) for w in U],
        "V": [format_word(w, r) for w in V],
        "rank_U": rank(gU),
        "rank_V": rank(gV),
        "lhs": report.lhs,
        "rhs": report.rhs,
        "holds": report.holds,
        "classical_lhs": report.classical_lhs,
        "classical_rhs": report.classical_rhs,
        "classical_holds": report.classical_holds,
        "components": len(report.components),
    }
    if cfg.oracle.enabled:
        cmp = compare_with_oracle(gU, gV, cfg.oracle.max_len)
        record["oracle_agrees"] = cmp.agrees
        record["oracle_beyond_horizon"] = cmp.beyond_horizon
    record["time_ms"] = (time.perf_counter() - start) * 1000.0
    return record


def _run_chunk(args) -> list[dict]:
    cfg, lo, hi = args
    return [run_instance(cfg, i) for i in range(lo, hi)]


def _percentile(sorted_values: list[float], q: float) -> float:
    if not sorted_values:
        return 0.0
    k = min(len(sorted_values) - 1, max(0, round(q * (len(sorted_values) - 1))))
    return sorted_values[k]


def aggregate(records: Iterable[dict]) -> dict:
    """Order-independent summary of instance records."""
    records = list(records)
    ratios = [rec["lhs"] / rec["rhs"] for rec in records if rec["rhs"] > 0]
    times = sorted(rec.get("time_ms", 0.0) for rec in records)
    out = {
        "instances": len(records),
        "violations": sum(1 for rec in records if not rec["holds"]),
        "classical_violations": sum(1 for rec in records if not rec["classical_holds"]),
        "max_ratio": max(ratios) if ratios else None,
        "equality_cases": sum(1 for rec in records if rec["rhs"] > 0 and rec["lhs"] == rec["rhs"]),
        "timing_ms": {
            "p50": _percentile(times, 0.5),
            "p90": _percentile(times, 0.9),
            "p99": _percentile(times, 0.99),
            "max": times[-1] if times else 0.0,
        },
    }
    if any("oracle_agrees" in rec for rec in records):
        out["oracle_disagreements"] = sum(1 for rec in records if rec.get("oracle_agrees") is False)
        out["oracle_beyond_horizon"] = sum(rec.get("oracle_beyond_horizon", 0) for rec in records)
    return out


def threads() -> int:
    raw = os.environ.get("GHNCLAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"GHNCLAB_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


@dataclass
class BatchResult:
    aggregate: dict
    records: list[dict] = field(repr=False, default_factory=list)

    @property
    def exit_code(self) -> int:
        a = self.aggregate
        return 1 if a["violations"] or a["classical_violations"] else 0


def batch_run(cfg: BatchConfig, workers: int | None = None) -> BatchResult:
    """Run every instance, stream JSONL to ``cfg.out`` and summarise."""
    n = cfg.instances
    workers = min(workers or threads(), max(n // 200, 1))
    if workers > 1:
        step = -(-n // (workers * 4))
        chunks = [(cfg, lo, min(lo + step, n)) for lo in range(0, n, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [rec for part in pool.map(_run_chunk, chunks) for rec in part]
    else:
        records = _run_chunk((cfg, 0, n))
    if cfg.out:
        path = Path(cfg.out)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w") as fh:
                for rec in records:
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
        except OSError as exc:
            raise BatchIOError(f"{path}: {exc.strerror or exc}") from None
    result = BatchResult(aggregate(records), records)
    if cfg.figures:
        from .plotting import render_batch_figures

        try:
            result.aggregate["figures"] = render_batch_figures(records, cfg.figures)
        except OSError as exc:
            raise BatchIOError(f"{cfg.figures}: {exc.strerror or exc}") from None
    return result


def read_records(path: str | Path) -> list[dict]:
    try:
        with Path(path).open() as fh:
            return [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        raise BatchIOError(f"{path}: {exc.strerror or exc}") from None


__all__ = [
    "GhncReport",
    "ComponentSummary",
    "ghnc_check",
    "ghnc_report",
    "classical_hn_check",
    "DoubleCosetAutomaton",
    "in_double_coset",
    "OracleBucket",
    "OracleResult",
    "oracle_double_cosets",
    "oracle_from_graphs",
    "OracleComparison",
    "compare_with_oracle",
    "RandomModel",
    "random_word",
    "random_subgroup",
    "ConfigError",
    "BatchIOError",
    "OracleConfig",
    "BatchConfig",
    "instance",
    "run_instance",
    "aggregate",
    "batch_run",
    "read_records",
    "threads",
]
