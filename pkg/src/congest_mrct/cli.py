"""Command line front end: generate graphs, run experiments, query oracles, summarize.

    congest-mrct gen --graph grid --n 16 --out g.txt
    congest-mrct run --graph random_connected --n 10..20 --mode both --trials 20 --out rep.json
    congest-mrct run --config exp.cfg --alpha 0.5
    congest-mrct oracle --graph g.txt --terminals all
    congest-mrct report rep.json --out rep.csv

A config file holds ``key = value`` lines using the long flag names (dashes
or underscores); flags given on the command line win.  Exit status is 1 when
any checked invariant fails and 2 on bad input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import oracle
from .errors import CongestError, GraphError, InvalidTerminalSet, OracleBudgetExceeded
from .graph import KINDS, Graph, TerminalSet, diameter, generate, load_edge_list, save_edge_list
from .mrct import good_nodes, run_deterministic, run_randomized
from .sim import default_bandwidth

log = logging.getLogger("congest_mrct")

CSV_COLUMNS = ("n", "D", "S", "mode", "ratio", "bound", "rounds", "round_budget", "max_edge_bits")


@dataclass
class ExperimentConfig:
    graph: str = "random_connected"  # generator kind or path to an edge-list file
    n: list[int] = field(default_factory=lambda: [12])
    p: float = 0.3
    max_delay: int = 1
    terminals: str = "all"  # all | random | <k>
    mode: str = "det"  # det | rand | both
    alpha: float = 1.0
    c_sample: float = 2.0
    seeds: list[int] = field(default_factory=lambda: [0])
    trials: int = 1
    exact: bool = False  # also compare against the exact S-MRCT
    out: str | None = None

    def validate(self):
        if self.mode not in ("det", "rand", "both"):
            raise ValueError(f"mode must be det, rand or both, got {self.mode!r}")
        if self.graph not in KINDS and not os.path.exists(self.graph):
            raise ValueError(f"--graph: {self.graph!r} is neither a generator kind {KINDS} nor a file")
        if self.terminals not in ("all", "random") and not self.terminals.isdigit():
            raise ValueError(f"terminals must be 'all', 'random' or a count, got {self.terminals!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        return self


def parse_int_list(text: str) -> list[int]:
    """``"7"``, ``"4,8,16"`` or an inclusive range ``"4..12"``."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def _truthy(s: str) -> bool:
    return str(s).strip().lower() in ("1", "true", "yes", "on")


_CONVERT = {
    "n": parse_int_list, "seeds": parse_int_list, "p": float, "max_delay": int, "alpha": float,
    "c_sample": float, "trials": int, "exact": _truthy,
}


def read_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name for f in fields(ExperimentConfig)} | {"seed"}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, val = (x.strip() for x in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        out[key] = val
    return out


def build_config(file_values: dict, flag_values: dict) -> ExperimentConfig:
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    if "seed" in merged:
        merged["seeds"] = merged.pop("seed")
    kw = {}
    for k, v in merged.items():
        conv = _CONVERT.get(k)
        kw[k] = conv(v) if conv and isinstance(v, str) else v
    if isinstance(kw.get("n"), int):
        kw["n"] = [kw["n"]]
    if isinstance(kw.get("seeds"), int):
        kw["seeds"] = [kw["seeds"]]
    return ExperimentConfig(**kw).validate()


# --------------------------------------------------------------------------
# experiments


def pick_terminals(g: Graph, how: str, seed: int) -> TerminalSet:
    if how == "all":
        return TerminalSet.all_nodes(g)
    rng = np.random.default_rng([seed, 99])
    k = int(rng.integers(2, g.n + 1)) if how == "random" else min(int(how), g.n)
    return TerminalSet(g, rng.choice(np.arange(1, g.n + 1), size=k, replace=False).tolist())


def _trial_graph(cfg: ExperimentConfig, n: int, seed: int) -> Graph:
    if os.path.exists(cfg.graph) and cfg.graph not in KINDS:
        with open(cfg.graph) as fh:
            return load_edge_list(fh.read())
    return generate(cfg.graph, n, p=cfg.p, seed=seed, max_delay=cfg.max_delay)


def run_trial(cfg: ExperimentConfig, n: int, seed: int) -> list[dict]:
    g = _trial_graph(cfg, n, seed)
    S = pick_terminals(g, cfg.terminals, seed)
    d = diameter(g)
    rc_graph = oracle.rc_exact(g, S)
    exact_cost = None
    if cfg.exact:
        exact_cost = oracle.mrct_exact(g, S)[1]
    rows = []
    modes = {"det": ["det"], "rand": ["rand"], "both": ["det", "rand"]}[cfg.mode]
    for mode in modes:
        if mode == "det":
            res = run_deterministic(g, S)
        else:
            res = run_randomized(g, S, alpha=cfg.alpha, c_sample=cfg.c_sample, seed=seed)
        row = {
            "seed": seed, "n": g.n, "m": g.m, "D": d, "S": len(S), "mode": mode,
            "chosen_root": res.chosen_root, "rc_chosen": res.rc_chosen, "rc_graph": rc_graph,
            "ratio": res.rc_chosen / rc_graph, "bound": res.bound,
            "within_bound": res.within_bound(rc_graph),
            "rounds": res.rounds_used, "round_budget": res.round_budget(d),
            "max_edge_bits": res.max_edge_bits, "bandwidth": default_bandwidth(g.n),
            "phases": res.phases,
        }
        if exact_cost is not None:
            row["rc_exact_mrct"] = exact_cost
            row["ratio_exact"] = res.rc_chosen / exact_cost
            row["within_bound_exact"] = res.within_bound(exact_cost)
        if mode == "rand":
            row["sample"] = list(res.sample) if res.sample is not None else None
            row["fallback"] = res.fallback
            if res.sample is not None:
                good = good_nodes(oracle.all_ssrc(g, S), res.params.gamma)
                row["has_good_node"] = bool(good & set(res.sample))
        rows.append(row)
    return rows


def violations(row: dict) -> list[str]:
    """Invariant failures in one trial row (the randomized bound only counts when a good node was sampled)."""
    bad = []
    if row["mode"] == "det" or row.get("fallback") or row.get("has_good_node"):
        if not row["within_bound"]:
            bad.append("approximation bound")
    if row.get("within_bound_exact") is False:
        bad.append("bound vs exact S-MRCT")
    if row["rounds"] > row["round_budget"]:
        bad.append("round budget")
    if row["max_edge_bits"] > row["bandwidth"]:
        bad.append("bandwidth")
    return bad


def aggregate(rows: list[dict]) -> dict:
    """Per-mode summary; only uses the CSV columns so it can be recomputed from the CSV."""
    out = {}
    for mode in sorted({r["mode"] for r in rows}):
        rs = [r for r in rows if r["mode"] == mode]
        out[mode] = {
            "trials": len(rs),
            "max_ratio": max(float(r["ratio"]) for r in rs),
            "bound_failures": sum(float(r["ratio"]) > float(r["bound"]) + 1e-12 for r in rs),
            "failure_fraction": sum(float(r["ratio"]) > float(r["bound"]) + 1e-12 for r in rs) / len(rs),
            "max_rounds_per_budget": max(int(r["rounds"]) / int(r["round_budget"]) for r in rs),
            "c_rounds": max(int(r["rounds"]) / (int(r["S"]) + int(r["D"])) for r in rs),
            "max_edge_bits": max(int(r["max_edge_bits"]) for r in rs),
        }
    return out


def run_experiment(cfg: ExperimentConfig) -> dict:
    rows = []
    for n in cfg.n:
        for base in cfg.seeds:
            for k in range(cfg.trials):
                seed = base + k
                log.info("trial n=%d seed=%d", n, seed)
                rows.extend(run_trial(cfg, n, seed))
    bad = [{"seed": r["seed"], "n": r["n"], "mode": r["mode"], "what": v} for r in rows for v in violations(r)]
    return {
        "config": {f.name: getattr(cfg, f.name) for f in fields(cfg) if f.name != "out"},
        "trials": rows,
        "aggregate": aggregate(rows),
        "violations": bad,
    }


def emit_plotdata(report: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in report.get("trials", []):
        w.writerow(row)
    return buf.getvalue()


def read_plotdata(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


# --------------------------------------------------------------------------
# argparse


def _add_graph_flags(p):
    p.add_argument("--graph", help=f"generator kind {KINDS} or an edge-list file")
    p.add_argument("--n", help="node count: 7, 4,8,16 or 4..12")
    p.add_argument("--p", type=float, help="edge probability for random_connected")
    p.add_argument("--max-delay", dest="max_delay", type=int, help="delays are drawn from 1..max_delay")
    p.add_argument("--seed", help="seed, or several: 1,2,3 or 0..9")


def _write(text: str, path: str | None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    cfg = build_config({}, {"graph": args.graph or "random_connected", "n": args.n, "p": args.p,
                            "max_delay": args.max_delay, "seed": args.seed})
    g = generate(cfg.graph, cfg.n[0], p=cfg.p, seed=cfg.seeds[0], max_delay=cfg.max_delay)
    _write(save_edge_list(g), args.out)
    return 0


def cmd_run(args) -> int:
    file_values = {}
    if args.config:
        with open(args.config) as fh:
            file_values = read_config(fh.read())
    flags = {k: getattr(args, k) for k in ("graph", "n", "p", "max_delay", "terminals", "mode", "alpha",
                                           "trials", "out", "seed")}
    if args.exact:
        flags["exact"] = True
    cfg = build_config(file_values, flags)
    report = run_experiment(cfg)
    _write(json.dumps(report, sort_keys=True, indent=1) + "\n", cfg.out)
    for mode, agg in report["aggregate"].items():
        print(f"{mode}: {agg['trials']} trials, max ratio {agg['max_ratio']:.4f}, "
              f"rounds <= {agg['c_rounds']:.2f}*(|S|+D), max bits {agg['max_edge_bits']}", file=sys.stderr)
    for v in report["violations"]:
        print(f"VIOLATION n={v['n']} seed={v['seed']} {v['mode']}: {v['what']}", file=sys.stderr)
    return 1 if report["violations"] else 0


def cmd_oracle(args) -> int:
    cfg = build_config({}, {"graph": args.graph or "random_connected", "n": args.n, "p": args.p,
                            "max_delay": args.max_delay, "seed": args.seed, "terminals": args.terminals})
    g = _trial_graph(cfg, cfg.n[0], cfg.seeds[0])
    S = pick_terminals(g, cfg.terminals, cfg.seeds[0])
    out = {
        "n": g.n, "m": g.m, "diameter": diameter(g), "terminals": list(S.members),
        "rc_graph": oracle.rc_exact(g, S),
        "ssrc": {str(v): c for v, c in oracle.all_ssrc(g, S).items()},
    }
    try:
        tree, cost = oracle.mrct_exact(g, S)
        out["mrct_exact"] = {"cost": cost, "edges": [list(e) for e in tree]}
    except OracleBudgetExceeded as e:
        out["mrct_exact"] = None
        print(f"exact S-MRCT skipped: {e}", file=sys.stderr)
    _write(json.dumps(out, sort_keys=True, indent=1) + "\n", args.out)
    return 0


def cmd_report(args) -> int:
    with open(args.report) as fh:
        report = json.load(fh)
    _write(emit_plotdata(report), args.out)
    for mode, agg in aggregate(read_plotdata(emit_plotdata(report))).items():
        print(f"{mode}: {json.dumps(agg, sort_keys=True)}", file=sys.stderr)
    return 1 if report.get("violations") else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="congest-mrct", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen", help="write a generated graph as an edge list")
    _add_graph_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run the algorithms on a corpus and check them against the oracles")
    _add_graph_flags(p)
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--terminals", help="all, random or a count k")
    p.add_argument("--mode", choices=("det", "rand", "both"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--trials", type=int, help="trials per seed (consecutive seeds)")
    p.add_argument("--exact", action="store_true", help="also compare with the exact S-MRCT (small graphs)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("oracle", help="exact routing costs for one graph")
    _add_graph_flags(p)
    p.add_argument("--terminals", default="all")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="turn a run report into plot-ready CSV")
    p.add_argument("report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (GraphError, InvalidTerminalSet, OracleBudgetExceeded) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except CongestError as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
