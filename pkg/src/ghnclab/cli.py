"""Command-line interface: ``ghnclab <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import ghnc as ghnc_mod
from .gog import GraphOfGroupsError, euler_characteristic, loads, predicted_l2_betti, validate
from .hall import hall_completion
from .phi import WeightedGraphError, build_phi, classify, gbs_complex, parse_weighted_graph
from .gog import presentation_rel_tree
from .stallings import (
    SubgroupFileError,
    basis,
    from_generators,
    index_in_ambient,
    intersection,
    parse_subgroup_file,
    rank,
)
from .words import AlphabetError


class UsageError(Exception):
    """Input problem; reported on stderr with exit status 2."""


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None


def _subgroup(path: str):
    try:
        alphabet, gens = parse_subgroup_file(_read(path))
    except SubgroupFileError as exc:
        raise UsageError(f"{path}: {exc}") from None
    return alphabet, gens, from_generators(gens, alphabet)


def _gog(path: str):
    try:
        g = loads(_read(path))
    except GraphOfGroupsError as exc:
        raise UsageError(f"{path}: {exc}") from None
    report = validate(g)
    if not report:
        raise UsageError(f"{path}: " + "; ".join(report.violations))
    return g


def _index(g) -> int | str:
    idx = index_in_ambient(g)
    return "infinite" if idx == float("inf") else idx


def _emit(args, payload, text: str | None = None) -> None:
    if args.quiet:
        return
    if text is None or args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _write_dot(args, dot: str) -> None:
    if args.dot:
        try:
            Path(args.dot).write_text(dot)
        except OSError as exc:
            raise UsageError(f"{args.dot}: {exc.strerror or exc}") from None


# --- commands ---------------------------------------------------------------------


def cmd_fold(args) -> int:
    alphabet, _, g = _subgroup(args.file)
    payload = {
        "vertices": g.num_vertices,
        "edges": g.num_edges,
        "rank": rank(g),
        "index": _index(g),
        "basis": [alphabet.format(w) for w in basis(g)],
    }
    text = "\n".join(f"{k}: {v if not isinstance(v, list) else ' '.join(v)}" for k, v in payload.items())
    _write_dot(args, g.to_dot())
    _emit(args, payload, text)
    return 0


def cmd_intersect(args) -> int:
    aU, _, gU = _subgroup(args.u)
    aV, _, gV = _subgroup(args.v)
    if aU != aV:
        raise UsageError(f"alphabet mismatch: rank {aU.rank} vs rank {aV.rank}")
    g = intersection(gU, gV)
    words = [aU.format(w) for w in basis(g)]
    payload = {"rank": rank(g), "basis": words}
    _write_dot(args, g.to_dot("Intersection"))
    _emit(args, payload, f"rank: {rank(g)}\nbasis: {' '.join(words) if words else '(trivial)'}")
    return 0


def cmd_ghnc(args) -> int:
    aU, _, gU = _subgroup(args.u)
    aV, _, gV = _subgroup(args.v)
    if aU != aV:
        raise UsageError(f"alphabet mismatch: rank {aU.rank} vs rank {aV.rank}")
    report = ghnc_mod.ghnc_report(gU, gV)
    payload = report.as_dict()
    if args.oracle:
        cmp = ghnc_mod.compare_with_oracle(gU, gV, args.oracle)
        payload["oracle"] = {
            "max_len": args.oracle,
            "agrees": cmp.agrees,
            "pullback_nontrivial": cmp.pullback_nontrivial,
            "oracle_nontrivial": cmp.oracle_nontrivial,
            "beyond_horizon": cmp.beyond_horizon,
            "problems": list(cmp.problems),
        }
    _emit(args, payload)
    return 0 if report.holds and report.classical_holds else 1


def cmd_phi(args) -> int:
    w = build_phi(_gog(args.file))
    _write_dot(args, w.to_dot())
    _emit(args, w.as_dict(), w.to_text().rstrip("\n"))
    return 0


def cmd_classify(args) -> int:
    report = classify(_gog(args.file))
    _emit(args, report.as_dict())
    return 0


def cmd_gbs(args) -> int:
    try:
        w = parse_weighted_graph(_read(args.file))
        g = gbs_complex(w)
    except WeightedGraphError as exc:
        raise UsageError(f"{args.file}: {exc}") from None
    pres = presentation_rel_tree(g)
    _write_dot(args, g.to_dot())
    _emit(args, {"generators": list(pres.generators), "presentation": str(pres)}, str(pres))
    return 0


def cmd_hall(args) -> int:
    alphabet, _, g = _subgroup(args.file)
    completion = hall_completion(g)
    _write_dot(args, completion.cover.to_dot("Cover"))
    _emit(args, completion.as_dict())
    return 0


def cmd_euler(args) -> int:
    g = _gog(args.file)
    betti = predicted_l2_betti(g)
    payload = {"chi": euler_characteristic(g), "b1_predicted": betti.b1, "betti": betti.as_dict()}
    _emit(args, payload)
    return 0


def cmd_batch(args) -> int:
    try:
        cfg = ghnc_mod.BatchConfig.load(args.config)
        if args.seed is not None:
            cfg = ghnc_mod.BatchConfig(**{**cfg.__dict__, "seed": args.seed & ghnc_mod.MASK64})
        result = ghnc_mod.batch_run(cfg)
    except ghnc_mod.ConfigError as exc:
        raise UsageError(str(exc)) from None
    except ghnc_mod.BatchIOError as exc:
        raise UsageError(str(exc)) from None
    _emit(args, result.aggregate)
    return result.exit_code


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--quiet", action="store_true", help="suppress stdout")
    common.add_argument("--dot", metavar="PATH", help="also write a DOT graph here")
    common.add_argument("--seed", type=int, help="override the seed (batch)")

    parser = argparse.ArgumentParser(prog="ghnclab", description="Subgroups of free groups and graphs of free groups.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fold", parents=[common], help="fold a subgroup to its core graph")
    p.add_argument("file")
    p.set_defaults(func=cmd_fold)

    p = sub.add_parser("intersect", parents=[common], help="basis of U ∩ V")
    p.add_argument("u")
    p.add_argument("v")
    p.set_defaults(func=cmd_intersect)

    p = sub.add_parser("ghnc", parents=[common], help="check the Hanna Neumann inequalities")
    p.add_argument("u")
    p.add_argument("v")
    p.add_argument("--oracle", type=int, metavar="L", help="cross-check with the word oracle up to length L")
    p.set_defaults(func=cmd_ghnc)

    for name, func, help_ in (
        ("phi", cmd_phi, "weighted graph of a graph of groups"),
        ("classify", cmd_classify, "separability and related flags"),
        ("euler", cmd_euler, "Euler characteristic and predicted L2-Betti numbers"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("file")
        p.set_defaults(func=func)

    p = sub.add_parser("gbs", parents=[common], help="presentation of the GBS group of a weighted graph")
    p.add_argument("file")
    p.set_defaults(func=cmd_gbs)

    p = sub.add_parser("hall", parents=[common], help="finite-index completion of a core graph")
    p.add_argument("file")
    p.set_defaults(func=cmd_hall)

    p = sub.add_parser("batch", parents=[common], help="seeded random batch")
    p.add_argument("config")
    p.set_defaults(func=cmd_batch)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except (UsageError, AlphabetError, GraphOfGroupsError, WeightedGraphError) as exc:
        print(f"ghnclab {args.command}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
