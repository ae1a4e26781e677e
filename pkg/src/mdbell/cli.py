"""mdbell command line: evaluate models, check relaxed Bell bounds, optimise GHZ settings.

Exit status is 0 when every check a command performs passes, 1 when a check
fails and 2 for unusable input (bad arguments, malformed model files).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from . import __version__
from .bound_search import (
    SCHEMA_VERSION, BoundViolation, lp_max_S, make_scenario, verify_bound_soundness,
)
from .dependence import MEASURE_IDS, complete_contexts, dependence_report, measure
from .inequalities import Kind, RelaxationScenario, Shape, check_model_against_bound, evaluate, get_spec
from .lp import LPError
from .modelfile import ModelFileError, dumps_model, read_model, read_strategy
from .paper_models import MODEL_IDS, PARAM_NAMES, PaperModelId, build_paper_model, expected_claims
from .quantum import optimize_settings
from .scenario import (
    ModelError, Pairing, PartialModelError, UndefinedCorrelatorError, behavior,
    check_context_consistency, check_hidden_variable_no_signaling, check_no_signaling, fmt_number,
)

QUANTUM_TOL = 1e-6


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers

def parse_number(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a rational number: {text!r}") from None


def parse_grid(text: str) -> List[Fraction]:
    """``a:b:step`` (inclusive) or a comma list such as ``0,829/1000,2``."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be a:b:step, got {text!r}")
        a, b, step = (parse_number(p) for p in parts)
        if step <= 0 or b < a:
            raise UsageError(f"grid {text!r} is empty")
        n = int((b - a) / step)
        vals = [a + k * step for k in range(n + 1)]
    else:
        vals = [parse_number(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise UsageError(f"grid {text!r} is empty")
    return vals


def parse_budgets(items: Optional[Sequence[str]]) -> Dict[str, Fraction]:
    out = {}
    for it in items or ():
        key, sep, val = it.partition("=")
        key = key.strip()
        if not sep or key not in MEASURE_IDS:
            raise UsageError(f"budget must look like M1=1/2 with a measure in {MEASURE_IDS}, got {it!r}")
        v = parse_number(val)
        if not 0 <= v <= 2:
            raise UsageError(f"budget {it!r} is outside [0, 2]")
        out[key] = v
    return out


def enc(v):
    if v is None:
        return None
    if isinstance(v, Fraction):
        return fmt_number(v)
    return float(v)


def emit(args, payload: dict, text: str, csv_rows: Optional[List[List]] = None) -> None:
    if args.format == "json":
        out = json.dumps(dict({"schema_version": SCHEMA_VERSION}, **payload), indent=2) + "\n"
    elif args.format == "csv":
        if csv_rows is None:
            raise UsageError(f"command {args.command} has no CSV output")
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(csv_rows)
        out = buf.getvalue()
    else:
        out = text if text.endswith("\n") else text + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def text_table(head: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [list(map(str, head))] + [[("" if c is None else str(c)) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands

def cmd_eval(args) -> int:
    model = read_model(args.model)
    kinds = [Kind.parse(args.inequality)] if args.inequality else list(Kind)
    values = {}
    for k in kinds:
        try:
            values[k.value] = evaluate(model, k)
        except (PartialModelError, UndefinedCorrelatorError) as e:
            if args.inequality:
                raise
            values[k.value] = None
    rep = dependence_report(model)
    ok = True
    ns = None
    if model.is_complete:
        ns = check_no_signaling(behavior(model), None if model.exact else 1e-12)
        ok &= ns.ok
    hv = check_hidden_variable_no_signaling(model)
    cons = check_context_consistency(model)
    bound = None
    if args.scenario:
        if not args.inequality:
            raise UsageError("--scenario needs --inequality")
        scen = RelaxationScenario(Shape.parse(args.scenario), parse_budgets(args.budget))
        bound = check_model_against_bound(model, kinds[0], scen)
        ok &= bound.verdict
    payload = {
        "command": "eval",
        "model": model.label,
        "L": model.L,
        "pairing": model.responses.pairing.value,
        "contexts": [str(c) for c in model.contexts],
        "S": {k: enc(v) for k, v in values.items()},
        "dependence": rep.to_json(),
        "no_signaling": None if ns is None else ns.to_json(),
        "hidden_variable_no_signaling": hv.to_json(),
        "context_consistency": list(cons.notes()),
        "bound": None if bound is None else bound.to_json(),
        "ok": ok,
    }
    lines = [f"model: {model.label or args.model}", f"pairing: {model.responses.pairing.value}  L={model.L}",
             "contexts: " + " ".join(str(c) for c in model.contexts)]
    for k, v in values.items():
        lines.append(f"S[{k}] = {'n/a (context not supplied)' if v is None else fmt_number(v)}")
    dj = rep.to_json()
    lines.append("dependence: " + "  ".join(f"{k}={'-' if dj[k] is None else dj[k]}" for k in MEASURE_IDS)
                 + ("  (given contexts only)" if rep.partial else ""))
    if ns is None:
        lines.append("no-signaling: n/a (partial model)")
    else:
        lines.append("no-signaling: " + ("pass" if ns.ok else "FAIL"))
        lines.extend("  " + v for v in ns.violations)
    lines.append("per-lambda no-signaling: " + ("pass" if hv.ok else "FAIL"))
    lines.extend("note: " + n for n in cons.notes())
    if bound is not None:
        bj = bound.to_json()
        lines.append(f"bound: S={bj['S']} bound={bj['bound']} budgets={bj['budgets']} "
                     f"verdict={'pass' if bound.verdict else 'FAIL'} tight={bound.tight}")
        lines.extend("note: " + n for n in bound.notes)
    csv_rows = [["inequality", "S"]] + [[k, enc(v)] for k, v in values.items()]
    emit(args, payload, "\n".join(lines), csv_rows)
    return 0 if ok else 1


def table_claims(grid: Sequence[Fraction]):
    """Rows (model, params, claim, expected, observed, pass) for all five models."""
    rows = []
    for mid in MODEL_IDS:
        cl = expected_claims(mid)
        if mid == "I":
            params = [(a, b) for a in grid for b in grid if a + b <= 1]
        else:
            params = [(p,) for p in grid]
        for ps in params:
            if any(not 0 <= p <= 1 for p in ps):
                continue
            model = build_paper_model(PaperModelId(mid, ps))
            pstr = ",".join(f"{n}={fmt_number(p)}" for n, p in zip(PARAM_NAMES[mid], ps))
            S, want = evaluate(model, cl.kind), cl.S(*ps)
            rows.append((mid, pstr, f"{cl.kind.value} {cl.S_text}", fmt_number(want), fmt_number(S), S == want))
            for k, f in cl.measures.items():
                got, want = measure(model, k), f(*ps)
                rows.append((mid, pstr, f"{k} = 2p", fmt_number(want),
                             "undefined" if got is None else fmt_number(got), got == want))
            if cl.completion is not None:
                bud = cl.completion(*ps)
                res = complete_contexts(model, bud)
                rows.append((mid, pstr, cl.measures_text, "feasible",
                             "feasible" if res.feasible else "infeasible", res.feasible))
            if model.is_complete:
                ns = check_no_signaling(behavior(model))
                rows.append((mid, pstr, "no-signaling (observed behavior)", "pass",
                             "pass" if ns.ok else f"fail: {ns.violations[0]}", ns.ok))
            hv = check_hidden_variable_no_signaling(model)
            rows.append((mid, pstr, "no-signaling (each hidden variable)", "pass",
                         "pass" if hv.ok else "fail", hv.ok))
    return rows


def cmd_tables(args) -> int:
    grid = parse_grid(args.grid or "0:1:1/8")
    rows = table_claims(grid)
    ok = all(r[-1] for r in rows)
    head = ["model", "params", "claim", "expected", "observed", "pass"]
    payload = {"command": "tables", "grid": [fmt_number(g) for g in grid], "ok": ok,
               "failed": sum(not r[-1] for r in rows),
               "rows": [dict(zip(head, r)) for r in rows]}
    text = text_table(head, [r[:-1] + ("pass" if r[-1] else "FAIL",) for r in rows])
    text += f"\n{len(rows) - payload['failed']}/{len(rows)} claims pass\n"
    emit(args, payload, text, [head] + [list(r) for r in rows])
    return 0 if ok else 1


def cmd_bounds(args) -> int:
    if not args.inequality or not args.scenario:
        raise UsageError("bounds needs --inequality and --scenario")
    grid = parse_grid(args.grid or "0:2:1/2")
    pairing = Pairing.parse(args.pairing)
    try:
        summary = verify_bound_soundness(
            args.inequality, args.scenario, args.L, grid, pairing=pairing, mode=args.mode,
            strict=not args.free_pairs, budget_mode=args.budget_mode, workers=args.workers)
    except BoundViolation as v:
        sys.stderr.write(f"bound violation: {v}\n")
        sys.stderr.write(json.dumps(v.certificate.to_json()) + "\n")
        summary = v.summary
    if args.format == "json":
        out = summary.to_jsonl()
    elif args.format == "csv":
        out = summary.to_csv()
    else:
        head = ["budget", "bound", "max_S", "tight", "lp_solved", "skipped"]
        rows = [(fmt_number(p.budget), fmt_number(p.bound), fmt_number(p.max_S) if p.max_S is not None else "",
                 p.tight, p.lp_solved, p.skipped) for p in summary.points]
        out = (f"{summary.kind.value} {summary.shape} L={summary.L} pairing={summary.pairing.value} "
               f"budgets={summary.budget_mode} strategies={summary.strategy_count} (raw {summary.raw_count})\n"
               + text_table(head, rows) + f"sound: {summary.sound}\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0 if summary.sound else 1


def cmd_quantum(args) -> int:
    kinds = [Kind.parse(args.inequality)] if args.inequality else list(Kind)
    results, ok = [], True
    for k in kinds:
        r = optimize_settings(k)
        target = get_spec(k).quantum_ghz_value
        passed = abs(r.S - target) <= QUANTUM_TOL
        ok &= passed
        results.append((r, target, passed))
    payload = {"command": "quantum", "ok": ok,
               "results": [dict(r.to_json(), target=t, pass_=p) for r, t, p in results]}
    for d in payload["results"]:
        d["pass"] = d.pop("pass_")
    lines = []
    for r, t, p in results:
        lines.append(f"{r.kind.value}: S = {r.S:.12f} (target {t:.12f}) {'pass' if p else 'FAIL'}")
        for name, v in r.settings.to_json().items():
            lines.append(f"  {name} = ({v[0]:+.9f}, {v[1]:+.9f}, {v[2]:+.9f})")
    csv_rows = [["inequality", "S", "target", "pass"]] + [[r.kind.value, repr(r.S), repr(t), p] for r, t, p in results]
    emit(args, payload, "\n".join(lines), csv_rows)
    return 0 if ok else 1


def cmd_search(args) -> int:
    if not args.inequality or not args.scenario:
        raise UsageError("search needs --inequality and --scenario")
    strategy = read_strategy(args.strategy)
    shape = Shape.parse(args.scenario)
    budgets = parse_budgets(args.budget)
    if budgets and args.grid:
        raise UsageError("give either --budget or --grid, not both")
    if budgets:
        scens = [RelaxationScenario(shape, budgets)]
    else:
        scens = [make_scenario(shape, m, args.budget_mode) for m in parse_grid(args.grid or "0:2:1/2")]
    certs = [lp_max_S(strategy, args.inequality, s, args.mode, strict=not args.free_pairs) for s in scens]
    ok = all(c.sound for c in certs)
    payload = {"command": "search", "ok": ok, "certificates": [c.to_json() for c in certs]}
    head = ["budgets", "lp_max_S", "bound", "sound", "tight"]
    rows = [(" ".join(f"{k}={fmt_number(v)}" for k, v in c.scenario.budgets.items()),
             enc(c.lp_max_S), enc(c.bound), c.sound, c.tight) for c in certs]
    emit(args, payload, text_table(head, rows), [head] + [list(r) for r in rows])
    return 0 if ok else 1


def cmd_complete(args) -> int:
    model = read_model(args.model)
    budgets = parse_budgets(args.budget)
    if not budgets:
        raise UsageError("complete needs at least one --budget")
    res = complete_contexts(model, budgets)
    payload = dict({"command": "complete", "budgets": {k: enc(v) for k, v in budgets.items()}}, **res.to_json())
    text = (f"budgets: {' '.join(f'{k}={fmt_number(v)}' for k, v in budgets.items())}\n"
            f"missing contexts: {' '.join(str(c) for c in res.missing) or 'none'}\n"
            f"feasible: {res.feasible}" + (f" ({res.reason})" if res.reason else "") + "\n")
    if res.witness is not None:
        text += "\n" + dumps_model(res.witness)
    if args.witness and res.witness is not None:
        with open(args.witness, "w", encoding="utf-8") as fh:
            fh.write(dumps_model(res.witness))
    emit(args, payload, text, [["feasible"], [res.feasible]])
    return 0 if res.feasible else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--inequality", choices=[k.value for k in Kind])
    common.add_argument("--scenario", help="one-sided:A|B|C or bipartite:AB|BC|AC")
    common.add_argument("--budget", action="append", metavar="K=V", help="dependence budget, repeatable")
    common.add_argument("--grid", metavar="A:B:STEP", help="inclusive grid, or a comma list")
    common.add_argument("--L", type=int, default=2, help="hidden variables for exhaustive search")
    common.add_argument("--mode", choices=["exact", "real"], default="exact")
    common.add_argument("--format", choices=["json", "csv", "text"], default="text")
    common.add_argument("--out", metavar="PATH")

    p = argparse.ArgumentParser(prog="mdbell", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="evaluate a model file")
    e.add_argument("model")
    e.set_defaults(func=cmd_eval)

    t = sub.add_parser("tables", parents=[common], help="rebuild the five tabulated models and check claims")
    t.set_defaults(func=cmd_tables)

    b = sub.add_parser("bounds", parents=[common], help="exhaustive relaxed-bound soundness check")
    b.add_argument("--pairing", default="FullyLocal", help="FullyLocal or JointAB/JointAC/JointBC")
    b.add_argument("--budget-mode", choices=["uniform", "single"], default="uniform")
    b.add_argument("--free-pairs", action="store_true", help="NS2: do not tie pair contexts to full contexts")
    b.add_argument("--workers", type=int, default=1)
    b.set_defaults(func=cmd_bounds)

    q = sub.add_parser("quantum", parents=[common], help="optimise GHZ measurement settings")
    q.set_defaults(func=cmd_quantum)

    s = sub.add_parser("search", parents=[common], help="lp_max_S for a strategy file")
    s.add_argument("strategy")
    s.add_argument("--budget-mode", choices=["uniform", "single"], default="uniform")
    s.add_argument("--free-pairs", action="store_true")
    s.set_defaults(func=cmd_search)

    c = sub.add_parser("complete", parents=[common], help="complete a partial model within budgets")
    c.add_argument("model")
    c.add_argument("--witness", metavar="PATH", help="write the completed model file here")
    c.set_defaults(func=cmd_complete)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ModelFileError, ModelError, ValueError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except LPError as e:
        sys.stderr.write(f"LP failure: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
