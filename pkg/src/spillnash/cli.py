"""Command-line front end: ``spillnash <verb> [instance source] [options]``.

Exit codes: 0 success, 1 usage error, 2 validation or verification failure,
3 phase budget exhausted.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .analysis import (LEMMAS, PreconditionError, braess_ratio, compare_models, poa_sweep,
                       price_of_anarchy, verify_lemma)
from .engine import MODES, SPILLBACK, EngineError, EquilibriumTrace, PhaseBudgetExceeded, compute_equilibrium
from .network import (GameInstance, InstanceError, as_rational, fmt, network_to_dict, parse_instance)
from .instances import BUILTINS, builtin_instance
from .quickest import QuickestFlowError, opt_completion
from .verifier import verify_feasible, verify_nash

OUTPUT_DIR_ENV = "SPILLNASH_OUTPUT_DIR"
VERBS = ("simulate", "quickest", "poa", "braess", "compare", "verify", "sweep", "instances")


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spillnash", description="Exact Nash flows over time with spillback.")
    p.add_argument("verb", choices=VERBS)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--builtin", help="bundled instance name")
    src.add_argument("--instance", help="instance JSON file, or a trace JSON for verify")
    p.add_argument("--param", action="append", default=[], metavar="K=V", help="builtin parameter, repeatable")
    p.add_argument("--amount", help="flow amount M as p/q; overrides the instance's amount")
    p.add_argument("--mode", choices=MODES, default=SPILLBACK)
    p.add_argument("--max-phases", type=int, default=10_000)
    p.add_argument("--delta", help="oracle packet width; simulate also reports the oracle completion")
    p.add_argument("--amounts", help="comma-separated amounts for sweep")
    p.add_argument("--lemma", action="append", default=[], help=f"verify a bound: one of {', '.join(LEMMAS)} or 'all'")
    p.add_argument("--limit", type=int, default=12, help="edge limit for braess")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", help=f"output file; relative paths resolve under ${OUTPUT_DIR_ENV} when set")
    p.add_argument("--decimal", type=int, metavar="K", help="add a K-digit decimal rendering next to exact values")
    return p


def _params(pairs: list[str]) -> dict[str, str]:
    out = {}
    for item in pairs:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects K=V, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _load_doc(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc


def _instance(args) -> GameInstance:
    if args.builtin:
        params = _params(args.param)
        if args.amount is not None:
            params["M"] = args.amount
        return builtin_instance(args.builtin, params)
    if args.instance:
        if args.param:
            raise UsageError("--param only applies to --builtin")
        with open(args.instance, encoding="utf-8") as fh:
            net, amount = parse_instance(fh.read())
        if args.amount is not None:
            amount = as_rational(args.amount, what="amount")
        if amount is None:
            raise UsageError("instance file has no amount; pass --amount")
        return GameInstance(net, amount, name=Path(args.instance).stem)
    raise UsageError("an instance source is required: --builtin NAME or --instance FILE")


def _decimal(value: Fraction, digits: int | None) -> dict:
    return {} if digits is None else {"decimal": f"{float(value):.{digits}f}"}


def _with_decimals(doc: dict, keys, digits: int | None) -> dict:
    if digits is not None:
        for key in keys:
            doc[f"{key}_decimal"] = f"{float(Fraction(doc[key])):.{digits}f}"
    return doc


def _emit(text: str, output: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if output is None:
        sys.stdout.write(text)
        return
    path = Path(output)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _dump(doc) -> str:
    return json.dumps(doc, indent=2)


def _cmd_instances(args) -> tuple[str, int]:
    if args.builtin:
        inst = _instance(args)
        return _dump(network_to_dict(inst.network, inst.amount)), 0
    listing = {name: {k: fmt(v) for k, v in defaults.items()} for name, (_, defaults) in BUILTINS.items()}
    return _dump({"kind": "builtin-list", "builtins": listing}), 0


def _cmd_simulate(args) -> tuple[str, int]:
    inst = _instance(args)
    trace = compute_equilibrium(inst, args.mode, args.max_phases)
    if args.format == "csv":
        return trace.labels_csv(), 0
    doc = trace.to_json()
    doc.update({f"completion_{k}": v for k, v in _decimal(trace.completion, args.decimal).items()})
    if args.delta is not None:
        from .oracle import KERNEL, simulate_oracle

        res = simulate_oracle(inst, args.mode, as_rational(args.delta, what="delta"))
        doc["oracle"] = {"delta": fmt(res.delta), "kernel": KERNEL, "completion": repr(res.completion)}
    return _dump(doc), 0


def _cmd_quickest(args) -> tuple[str, int]:
    inst = _instance(args)
    res = opt_completion(inst.network, inst.amount)
    if args.format == "csv":
        return res.value_csv(), 0
    doc = res.to_json()
    return _dump(_with_decimals(doc, ["horizon"], args.decimal)), 0


def _cmd_poa(args) -> tuple[str, int]:
    report = price_of_anarchy(_instance(args), args.mode, args.max_phases)
    doc = report.to_json()
    keys = ["computed_equilibrium_completion", "opt_completion", "ratio"]
    return _dump(_with_decimals(doc, keys, args.decimal)), 0


def _cmd_braess(args) -> tuple[str, int]:
    inst = _instance(args)
    ratio, kept = braess_ratio(inst, args.mode, args.limit, args.max_phases)
    removed = [i for i in range(len(inst.network.edges)) if i not in kept]
    doc = {"kind": "braess-ratio", "name": inst.name, "mode": args.mode, "ratio": fmt(ratio),
           "witness_kept_edges": list(kept), "witness_removed_edges": removed}
    return _dump(_with_decimals(doc, ["ratio"], args.decimal)), 0


def _cmd_compare(args) -> tuple[str, int]:
    inst = _instance(args)
    spill, ks = compare_models(inst, args.max_phases)
    doc = {"kind": "model-comparison", "name": inst.name, "amount": fmt(inst.amount),
           "spillback": fmt(spill), "koch-skutella": fmt(ks), "spillback_faster": spill < ks}
    return _dump(_with_decimals(doc, ["spillback", "koch-skutella"], args.decimal)), 0


def _cmd_sweep(args) -> tuple[str, int]:
    if not args.amounts:
        raise UsageError("sweep needs --amounts, e.g. --amounts 1,2,4")
    amounts = [as_rational(a.strip(), what="amount") for a in args.amounts.split(",") if a.strip()]
    inst = _instance(args) if args.builtin or args.instance else None
    if inst is None:
        raise UsageError("sweep needs an instance source")
    try:
        table = poa_sweep(inst.network, amounts, args.mode, args.max_phases)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.format == "csv":
        return table.csv(args.decimal), 0
    doc = {
        "kind": "poa-sweep",
        "mode": args.mode,
        "rows": [{"M": fmt(r.amount), "EQ": fmt(r.eq), "OPT": fmt(r.opt), "ratio": fmt(r.ratio),
                  "bounds_hold": r.bounds_hold, **_decimal(r.ratio, args.decimal)} for r in table.rows],
        "max_ratio": fmt(table.max_ratio),
    }
    if len(table.rows) > 1:
        # slope and intercept through the two largest amounts
        doc["tail_fit"] = {col: [fmt(x) for x in table.tail_fit(col)] for col in ("eq", "opt")}
    return _dump(doc), 0 if all(r.bounds_hold for r in table.rows) else 2


def _cmd_verify(args) -> tuple[str, int]:
    trace = None
    if args.instance:
        doc = _load_doc(args.instance)
        if doc.get("kind") == "equilibrium-trace":
            trace = EquilibriumTrace.from_json(doc)
    if trace is None:
        trace = compute_equilibrium(_instance(args), args.mode, args.max_phases)
    feasible, nash = verify_feasible(trace), verify_nash(trace)
    out = {"kind": "verification", "name": trace.instance.name, "mode": trace.mode,
           "feasible": [v.to_json() for v in feasible], "nash": [v.to_json() for v in nash]}
    failed = bool(feasible or nash)
    lemmas = list(LEMMAS) if "all" in args.lemma else args.lemma
    unknown = [x for x in lemmas if x not in LEMMAS]
    if unknown:
        raise UsageError(f"unknown lemma {unknown[0]!r}; choose from {', '.join(LEMMAS)} or 'all'")
    if lemmas:
        quick = opt_completion(trace.instance.network, trace.instance.amount)
        reports = {}
        for lemma in lemmas:
            try:
                rep = verify_lemma(trace, quick, lemma)
                reports[lemma] = rep.to_json()
                failed |= not rep.verdict
            except PreconditionError as exc:
                # a skipped bound is not a failed one
                reports[lemma] = {"lemma": lemma, "verdict": "precondition-not-met", "reason": exc.reason}
        out["lemmas"] = reports
    return _dump(out), 2 if failed else 0


_COMMANDS = {
    "simulate": _cmd_simulate, "quickest": _cmd_quickest, "poa": _cmd_poa, "braess": _cmd_braess,
    "compare": _cmd_compare, "verify": _cmd_verify, "sweep": _cmd_sweep, "instances": _cmd_instances,
}


def run(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.decimal is not None and args.decimal < 0:
        parser.print_usage(sys.stderr)
        print("spillnash: --decimal must be non-negative", file=sys.stderr)
        return 1
    try:
        text, code = _COMMANDS[args.verb](args)
    except (UsageError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"spillnash: {exc}", file=sys.stderr)
        return 1
    except PhaseBudgetExceeded as exc:
        print(f"spillnash: {exc}", file=sys.stderr)
        return 3
    except (InstanceError, QuickestFlowError, EngineError, ValueError) as exc:
        print(f"spillnash: {exc}", file=sys.stderr)
        return 2
    _emit(text, args.output)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
