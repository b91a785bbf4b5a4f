"""``datamarket`` command line.

Every command reads an INI manifest::

    [relations]
    D1 = d1.csv
    D2 = d2.csv

    [source]              ; optional, shopper-owned instances (priced 0)
    instances = D1

    [price]               ; optional, price = a * H + b
    a = 1
    b = 0

    [request]             ; optional defaults for acquire / eval
    source_attrs = S
    target_attrs = T

    [run]                 ; optional defaults for any flag below
    theta = 0.1
    seed = 7

Flags override the manifest.  Reports are JSON with sorted keys, so a
rerun with the same seed produces the same bytes.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, fields
from typing import Sequence

from . import __version__, kernels
from .errors import ArgumentError, CapacityError, DataMarketError, InfeasibleError
from .info import PriceModel, price_projection
from .joingraph import build_join_graph, precompute_landmarks
from .partition import AFDConfig, afd_report, discover_afds, quality_fds
from .purchase import PurchaseProblem, brute_force_bcqd, mcmc_purchase
from .relation import Catalog, load_manifest, write_csv
from .sampling import HashSampler, ResampleConfig
from .search import (
    AcquisitionRequest,
    Evaluator,
    acquire,
    brute_force,
    budget_bounds,
    budget_from_ratio,
    correlation_difference,
    real_correlation,
)
from .synth import make_marketplace

log = logging.getLogger("datamarket")


@dataclass
class RunConfig:
    manifest: str = ""
    theta: float = 0.1
    max_lhs: int = 3
    alpha: float = math.inf
    beta: float = 0.0
    budget: float | None = None
    budget_ratio: float | None = None
    ell: int = 500
    rate: float = 1.0
    eta: float = math.inf
    resample_rate: float = 1.0
    landmarks: int | None = None
    seed: int = 0
    source_attrs: str | None = None
    target_attrs: str | None = None
    relation: str | None = None
    rates: str | None = None
    brute: bool = False

    def validate(self) -> None:
        if self.budget is not None and self.budget_ratio is not None:
            raise ArgumentError("--budget and --budget-ratio are mutually exclusive")
        if self.budget_ratio is not None and not 0.0 < self.budget_ratio <= 1.0:
            raise ArgumentError("--budget-ratio must lie in (0, 1]")
        if not 0.0 < self.rate <= 1.0:
            raise ArgumentError("--rate must lie in (0, 1]")

    def digest(self) -> str:
        blob = json.dumps(_jsonable(self.__dict__), sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


_CASTS = {"float": float, "int": int, "bool": lambda s: str(s).lower() in ("1", "true", "yes", "on")}


def _cast(field_type: str, value):
    base = field_type.split("|")[0].strip()
    if value is None or base == "str":
        return value
    return _CASTS[base](value)


def resolve_config(args: argparse.Namespace, run_section: dict[str, str]) -> RunConfig:
    cfg = RunConfig()
    for f in fields(RunConfig):
        key = f.name
        if key in run_section:
            setattr(cfg, key, _cast(f.type, run_section[key]))
        v = getattr(args, key, None)
        if v is not None and v is not False:
            setattr(cfg, key, v)
    cfg.validate()
    return cfg


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (frozenset, set)):
        return sorted(_jsonable(v) for v in obj)
    return obj


def _split(text: str | None) -> list[str]:
    return [t.strip() for t in (text or "").split(",") if t.strip()]


@dataclass
class Context:
    cfg: RunConfig
    catalog: Catalog
    sections: dict[str, dict[str, str]]

    @property
    def price_model(self) -> PriceModel:
        p = self.sections.get("price", {})
        return PriceModel(float(p.get("a", 1.0)), float(p.get("b", 0.0)))

    @property
    def sources(self) -> frozenset[str]:
        return frozenset(_split(self.sections.get("source", {}).get("instances")))

    def attrs(self, which: str) -> frozenset[str]:
        flag = getattr(self.cfg, f"{which}_attrs")
        text = flag if flag is not None else self.sections.get("request", {}).get(f"{which}_attrs")
        out = frozenset(_split(text))
        if not out:
            raise ArgumentError(f"no {which} attributes given (--{which}-attrs or [request] {which}_attrs)")
        missing = sorted(out - set(self.catalog.index))
        if missing:
            raise ArgumentError(f"{which} attributes not in the catalog: {missing}")
        return out

    def afd(self) -> AFDConfig:
        return AFDConfig(self.cfg.theta, self.cfg.max_lhs)


def _report(ctx: Context, command: str, body: dict) -> dict:
    return {
        "command": command,
        "seed": ctx.cfg.seed,
        "config_hash": ctx.cfg.digest(),
        "backend": kernels.BACKEND,
        "version": __version__,
        **body,
    }


def cmd_profile(ctx: Context, timing: dict) -> dict:
    rows = []
    for rel in ctx.catalog.relations.values():
        fds = discover_afds(rel, ctx.afd()) if rel.n else []
        rows.append(
            {
                "relation": rel.name,
                "rows": rel.n,
                "attributes": list(rel.schema),
                "afds": afd_report(rel, fds) if rel.n else [],
                "quality": quality_fds(rel, fds) if rel.n else None,
                "price": price_projection(rel, rel.schema, ctx.price_model) if rel.n else None,
                "attribute_prices": {a: price_projection(rel, [a], ctx.price_model) for a in rel.schema} if rel.n else {},
            }
        )
    return {"relations": rows}


def _graph(ctx: Context, rate: float | None = None):
    rate = ctx.cfg.rate if rate is None else rate
    sampler = HashSampler(ctx.cfg.seed, rate) if rate < 1.0 else None
    return build_join_graph(list(ctx.catalog.relations.values()), ctx.price_model, sampler, ctx.afd(), ctx.sources)


def cmd_graph(ctx: Context, timing: dict) -> dict:
    if not len(ctx.catalog):
        return {"instances": [], "edges": [], "as_vertices": 0}
    g = _graph(ctx)
    edges = []
    for (a, b), grp in sorted(g.groups.items()):
        if grp:
            edges.append(
                {
                    "pair": [a, b],
                    "weight": min(grp.values()),
                    "joins": [{"on": sorted(j), "ji": w} for j, w in sorted(grp.items(), key=lambda kv: sorted(kv[0]))],
                }
            )
    return {
        "instances": [{"name": n, "attributes": g.relations[n].m, "rows": g.relations[n].n} for n in g.names],
        "edges": edges,
        "as_vertices": g.n_as_vertices(),
    }


def _request(ctx: Context, budget: float) -> AcquisitionRequest:
    c = ctx.cfg
    return AcquisitionRequest(
        ctx.attrs("source"),
        ctx.attrs("target"),
        budget=budget,
        alpha=c.alpha,
        beta=c.beta,
        ell=c.ell,
        seed=c.seed,
        sources=ctx.sources,
    )


def _budget(ctx: Context, exact_graph) -> tuple[float | None, dict, str | None]:
    """Resolve the budget.  Returns (budget or None when infeasible, info, reason)."""
    c = ctx.cfg
    if c.budget_ratio is None:
        return (math.inf if c.budget is None else c.budget), {}, None
    probe = _request(ctx, math.inf)
    try:
        lb, ub = budget_bounds(exact_graph, probe)
    except CapacityError as e:
        raise ArgumentError(f"--budget-ratio needs oracle bounds, which are out of reach here ({e}); give --budget") from e
    info = {"lower_bound": lb, "upper_bound": ub, "ratio": c.budget_ratio}
    try:
        return budget_from_ratio(lb, ub, c.budget_ratio), info, None
    except ArgumentError as e:
        return None, info, f"infeasible: {e}"


def _evaluator(ctx: Context, graph, req: AcquisitionRequest, rate: float) -> Evaluator:
    c = ctx.cfg
    return Evaluator(graph, req.a_s, req.a_t, rate, ResampleConfig(c.eta, c.resample_rate, c.seed), c.seed)


def cmd_acquire(ctx: Context, timing: dict) -> dict:
    c = ctx.cfg
    t0 = time.perf_counter()
    exact = _graph(ctx, 1.0)
    graph = exact if c.rate >= 1.0 else _graph(ctx)
    timing["build"] = time.perf_counter() - t0
    budget, info, reason = _budget(ctx, exact)
    if budget is None:
        return {"budget": info, "result": None, "reason": reason}
    req = _request(ctx, budget)
    t0 = time.perf_counter()
    index = precompute_landmarks(graph, c.landmarks, c.seed)
    timing["landmarks"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    rep = acquire(graph, req, index, _evaluator(ctx, graph, req, c.rate))
    timing["search"] = time.perf_counter() - t0
    out = rep.to_dict()
    out["budget"] = {**info, "value": budget}
    out["landmarks"] = list(index.landmarks)
    return out


def _row(method: str, rate: float, tg, relations, req, gp_corr) -> dict:
    real = real_correlation(relations, tg, req.a_s, req.a_t)
    row = {
        "method": method,
        "rate": rate,
        "found": tg is not None,
        "corr_estimated": tg.corr if tg else None,
        "corr": real,
        "quality": tg.quality if tg else None,
        "weight": tg.weight if tg else None,
        "price": tg.price if tg else None,
        "cd": None,
    }
    if gp_corr is not None and gp_corr > 0:
        row["cd"] = correlation_difference(gp_corr, real)
    return row


def cmd_eval(ctx: Context, timing: dict) -> dict:
    c = ctx.cfg
    rates = [float(r) for r in _split(c.rates)] or [c.rate]
    exact = _graph(ctx, 1.0)
    budget, info, reason = _budget(ctx, exact)
    if budget is None:
        return {"budget": info, "rows": [], "reason": reason}
    req = _request(ctx, budget)
    relations = exact.relations
    notes = []
    gp = None
    oracle_ok = True
    t0 = time.perf_counter()
    try:
        gp, n_cand = brute_force(exact, req, _evaluator(ctx, exact, req, 1.0))
    except CapacityError as e:
        oracle_ok, n_cand = False, None
        notes.append(f"oracle columns skipped: {e}")
    timing["gp"] = time.perf_counter() - t0
    gp_corr = real_correlation(relations, gp, req.a_s, req.a_t) if oracle_ok else None
    rows = []
    if oracle_ok:
        rows.append(_row("GP", 1.0, gp, relations, req, gp_corr))
    for rate in rates:
        graph = exact if rate >= 1.0 else _graph(ctx, rate)
        if oracle_ok:
            t0 = time.perf_counter()
            lp, _ = brute_force(graph, req, _evaluator(ctx, graph, req, rate))
            timing[f"lp@{rate}"] = time.perf_counter() - t0
            rows.append(_row("LP", rate, lp, relations, req, gp_corr))
        t0 = time.perf_counter()
        index = precompute_landmarks(graph, c.landmarks, c.seed)
        rep = acquire(graph, req, index, _evaluator(ctx, graph, req, rate))
        timing[f"heuristic@{rate}"] = time.perf_counter() - t0
        rows.append(_row("heuristic", rate, rep.target, relations, req, gp_corr))
    return {"budget": {**info, "value": budget}, "candidates": n_cand, "rows": rows, "notes": notes}


def cmd_purchase(ctx: Context, timing: dict) -> dict:
    c = ctx.cfg
    if not c.relation:
        if len(ctx.catalog) != 1:
            raise ArgumentError("--relation is required when the catalog holds more than one relation")
        rel = next(iter(ctx.catalog.relations.values()))
    else:
        rel = ctx.catalog[c.relation]
    full = price_projection(rel, rel.schema, ctx.price_model)
    if c.budget_ratio is not None:
        budget = c.budget_ratio * full
    else:
        budget = full if c.budget is None else c.budget
    problem = PurchaseProblem(rel, budget, c.theta, c.ell, c.seed, ctx.price_model, c.max_lhs)
    t0 = time.perf_counter()
    try:
        res = mcmc_purchase(problem)
    except InfeasibleError as e:
        return {"relation": rel.name, "budget": budget, "result": None, "reason": str(e)}
    timing["mcmc"] = time.perf_counter() - t0
    out = {"relation": rel.name, "full_price": full, "result": res.to_dict(problem), "reason": None}
    if c.brute:
        best, f = brute_force_bcqd(problem)
        out["optimum"] = {"attributes": [a for a in rel.schema if a in best], "objective": f}
    return out


def cmd_synth(args: argparse.Namespace) -> int:
    if not args.out:
        raise ArgumentError("synth needs --out DIR")
    mk = make_marketplace(args.instances, args.rows, args.seed or 0, args.extra_edges, args.keys_per_edge, dirt=args.dirt)
    os.makedirs(args.out, exist_ok=True)
    lines = ["[relations]"]
    for r in mk.relations:
        write_csv(r, os.path.join(args.out, f"{r.name}.csv"))
        lines.append(f"{r.name} = {r.name}.csv")
    lines += ["", "[request]", "source_attrs = S", "target_attrs = T", ""]
    with open(os.path.join(args.out, "manifest.ini"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
    print(os.path.join(args.out, "manifest.ini"))
    return 0


COMMANDS = {
    "profile": cmd_profile,
    "graph": cmd_graph,
    "acquire": cmd_acquire,
    "eval": cmd_eval,
    "purchase": cmd_purchase,
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", help="INI catalog manifest")
    common.add_argument("--theta", type=float)
    common.add_argument("--max-lhs", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    b = common.add_mutually_exclusive_group()
    b.add_argument("--budget", type=float)
    b.add_argument("--budget-ratio", type=float)
    common.add_argument("--ell", type=int)
    common.add_argument("--rate", type=float, help="correlated sampling rate")
    common.add_argument("--rates", help="comma list of rates for eval")
    common.add_argument("--eta", type=float, help="re-sampling threshold")
    common.add_argument("--resample-rate", type=float)
    common.add_argument("--landmarks", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--source-attrs")
    common.add_argument("--target-attrs")
    common.add_argument("--relation", help="relation to buy from (purchase)")
    common.add_argument("--brute", action="store_true", help="also report the exhaustive optimum (purchase)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--timing", action="store_true", help="add wall times (reports stop being reproducible)")

    p = argparse.ArgumentParser(prog="datamarket", description="Data acquisition over a catalog of priced relations.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    s = sub.add_parser("synth", help="write a synthetic marketplace")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--instances", type=int, default=5)
    s.add_argument("--rows", type=int, default=150)
    s.add_argument("--extra-edges", type=int, default=0)
    s.add_argument("--keys-per-edge", type=int, default=3)
    s.add_argument("--dirt", type=float, default=0.0)
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("DATAMARKET_LOG", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        if not args.manifest:
            raise ArgumentError("--manifest is required")
        catalog, sections = load_manifest(args.manifest)
        cfg = resolve_config(args, sections.get("run", {}))
        ctx = Context(cfg, catalog, sections)
        timing: dict[str, float] = {}
        log.info("running %s on %d relations", args.command, len(catalog))
        body = COMMANDS[args.command](ctx, timing)
        if args.timing:
            body["timing"] = timing
        text = json.dumps(_jsonable(_report(ctx, args.command, body)), sort_keys=True, indent=2) + "\n"
        _emit(text, args.out)
        return 0
    except (DataMarketError, OSError, KeyError, ValueError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"datamarket {args.command}: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
