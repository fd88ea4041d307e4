"""Command-line front end: ``ptawit {check,witness,quotient,verify,volume} ...``.

Exit codes: 0 success, 1 usage or parse error, 2 threshold not attainable or
witness rejected, 3 proceed assumption violated.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .farkas import EmptySupport
from .minwit import Infeasible, UnboundedInvariant, minimize_inv, minimize_loc, minimize_vol, qs_heuristic
from .model import Witness, pta_volume
from .numeric import format_decimal, format_rational, parse_rational
from .parser import ParseError, load, save
from .quotient import QuotientError, build_quotient
from .reach import AssumptionViolated, reach_prob, verify_witness
from .volume import UnboundedZone, dbm_volume, zone_bound

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_ASSUMPTION = 3


@dataclass
class RunConfig:
    model: Path
    command: str
    direction: str = "max"
    lam: Fraction = Fraction(0)
    notion: str = "loc"
    K: int | None = None
    enumerate_all: bool = False
    out: Path | None = None
    dot: Path | None = None
    witness: Path | None = None
    iterations: int = 5
    full_sweep: bool = False
    as_json: bool = False


def _lambda(text: str) -> Fraction:
    try:
        v = parse_rational(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError("lambda must lie in [0, 1]")
    return v


def _prob(q: Fraction) -> str:
    return f"{format_rational(q)} (= {format_decimal(q)})"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptawit", description="Reachability and minimal witnesses for PTAs.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, direction=True):
        sp.add_argument("model", type=Path, help="model file (.pta)")
        if direction:
            sp.add_argument("--dir", dest="direction", choices=("min", "max"), default="max")
        sp.add_argument("-K", type=int, default=None, help="override the region clock bound")
        sp.add_argument("--json", dest="as_json", action="store_true", help="structured output")

    sp = sub.add_parser("check", help="exact min/max probability of reaching goal")
    common(sp)

    sp = sub.add_parser("witness", help="synthesize a minimal witnessing subsystem")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=_lambda, required=True, help="threshold, p/q or decimal")
    sp.add_argument("--notion", choices=("loc", "inv", "vol", "qs"), default="loc")
    sp.add_argument("--enumerate", dest="enumerate_all", action="store_true",
                    help="list all co-optimal location sets (loc)")
    sp.add_argument("--iterations", type=int, default=5, help="quotient-sum iterations (qs)")
    sp.add_argument("--full-sweep", action="store_true",
                    help="enumerate the whole Pareto frontier even after a volume-0 candidate (vol)")
    sp.add_argument("--out", type=Path, default=Path("."), help="directory for witness files and the report")

    sp = sub.add_parser("quotient", help="region quotient statistics and DOT export")
    common(sp, direction=False)
    sp.add_argument("--dot", type=Path, default=None, help="write the quotient as DOT")

    sp = sub.add_parser("verify", help="check a witness file against a model")
    common(sp)
    sp.add_argument("witness", type=Path, help="witness file (.pta)")
    sp.add_argument("--lambda", dest="lam", type=_lambda, required=True)

    sp = sub.add_parser("volume", help="invariant volume of a bounded model")
    common(sp, direction=False)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    cfg = RunConfig(**vars(args))
    try:
        return _COMMANDS[cfg.command](cfg)
    except (ParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (QuotientError, UnboundedInvariant, UnboundedZone, EmptySupport) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except AssumptionViolated as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ASSUMPTION


def cmd_check(cfg: RunConfig) -> int:
    T = load(cfg.model)
    M = build_quotient(T, cfg.K)
    r = reach_prob(M, cfg.direction)
    if cfg.as_json:
        print(json.dumps({
            "direction": cfg.direction,
            "probability": format_rational(r.initial_value),
            "decimal": format_decimal(r.initial_value),
            "states": M.n,
            "choices": M.num_rows(),
        }))
    else:
        print(_prob(r.initial_value))
    return EXIT_OK


def cmd_witness(cfg: RunConfig) -> int:
    T = load(cfg.model)
    M = build_quotient(T, cfg.K)
    try:
        if cfg.notion == "loc":
            rep = minimize_loc(T, M, cfg.lam, cfg.direction, enumerate_all=cfg.enumerate_all)
        elif cfg.notion == "inv":
            rep = minimize_inv(T, M, cfg.lam, cfg.direction)
        elif cfg.notion == "vol":
            rep = minimize_vol(T, M, cfg.lam, cfg.direction, full_sweep=cfg.full_sweep)
        else:
            rep = qs_heuristic(T, M, cfg.lam, cfg.direction, cfg.iterations)
    except Infeasible as e:
        print(f"threshold exceeds Pr^*: {format_rational(e.lam)} > {_prob(e.best)}", file=sys.stderr)
        return EXIT_INFEASIBLE
    paths = []
    if cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
        stem = f"{cfg.model.stem}-{cfg.direction}-{cfg.notion}"
        for k, W in enumerate(rep.witnesses):
            path = cfg.out / (f"{stem}.pta" if len(rep.witnesses) == 1 else f"{stem}-{k + 1}.pta")
            save(W.subsystem, path, _provenance(cfg, W, rep))
            paths.append(str(path))
        report = cfg.out / f"{stem}.report"
        report.write_text(json.dumps(rep.to_dict(), indent=2) if cfg.as_json else rep.to_text())
    if cfg.as_json:
        d = rep.to_dict()
        d["files"] = paths
        print(json.dumps(d, indent=2))
    else:
        print(rep.to_text(), end="")
        for path in paths:
            print(f"wrote {path}")
    return EXIT_OK


def _provenance(cfg: RunConfig, W: Witness, rep) -> list:
    pr = format_rational(W.probability) if W.probability is not None else "?"
    return [
        f"witness for Pr_{cfg.direction} >= {format_rational(cfg.lam)} in {cfg.model.name}",
        f"notion {rep.notion}, {W.strength} subsystem, Pr_{cfg.direction} = {pr}, optimum {rep.optimum}",
        f"support: {len(W.support)} regions",
    ]


def cmd_quotient(cfg: RunConfig) -> int:
    dot = cfg.dot
    T = load(cfg.model)
    M = build_quotient(T, cfg.K)
    if dot is not None:
        dot.write_text(M.to_dot())
    info = {"K": M.K, "states": M.n, "choices": M.num_rows(), "initial": M.name(M.initial)}
    if cfg.as_json:
        print(json.dumps(info))
    else:
        print(f"K = {M.K}, {M.n} states, {M.num_rows()} choices, initial {M.name(M.initial)}")
        if dot is not None:
            print(f"wrote {dot}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    T = load(cfg.model)
    W = load(cfg.witness)
    K = cfg.K if cfg.K is not None else max(T.max_constant(), W.max_constant())
    res = verify_witness(T, W, cfg.lam, cfg.direction, K=K)
    if cfg.as_json:
        print(json.dumps({
            "ok": res.ok,
            "strength": res.strength,
            "structural": res.structural,
            "probability": format_rational(res.probability) if res.probability is not None else None,
        }))
    elif res.probability is None:
        print(f"FAIL: not a {res.strength} subsystem ({res.structural})")
    elif res.ok:
        print(f"PASS ({res.strength} subsystem, Pr_{cfg.direction} = {format_rational_short(res.probability)})")
    else:
        print(f"FAIL: Pr_{cfg.direction} = {format_rational_short(res.probability)} "
              f"< {format_rational_short(cfg.lam)}")
    return EXIT_OK if res.ok else EXIT_INFEASIBLE


def format_rational_short(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def cmd_volume(cfg: RunConfig) -> int:
    T = load(cfg.model)
    per = {}
    for l in T.inner_locations:
        m = T.invariants[l].dbm
        if m.is_empty:
            per[l] = Fraction(0)
            continue
        k = zone_bound(m)
        if k is None:
            raise UnboundedZone(f"invariant of {l} is unbounded")
        per[l] = dbm_volume(m, k).value
    total = pta_volume(T)
    if cfg.as_json:
        print(json.dumps({"volume": str(total), "locations": {l: str(v) for l, v in per.items()}}))
    else:
        for l, v in per.items():
            print(f"{l}: {v}")
        print(f"total: {total}")
    return EXIT_OK


_COMMANDS = {
    "check": cmd_check,
    "witness": cmd_witness,
    "quotient": cmd_quotient,
    "verify": cmd_verify,
    "volume": cmd_volume,
}


if __name__ == "__main__":
    sys.exit(main())
