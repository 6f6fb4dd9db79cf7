"""Batch driver: run the whole simulation-intervention-evaluation loop headlessly.

Every subcommand is a thin wrapper over a module operation; ``casestudy``
chains them into the full desk workflow (generate, shock, metrics, layout
with SVG, five removal strategies, relief table) with byte-reproducible
outputs for a given seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .contagion import ShockSpec, result_to_csv, run_shock
from .generator import GeneratorConfig, InfeasibleMarginals, generate_network
from .intervention import (
    InterventionPlan,
    CutEdge,
    RemoveNode,
    compare_strategies,
    derive_strategies,
    plan_from_doc,
    relief_table_csv,
    run_scenario,
)
from .layout import LayoutConfig, compute_layout, layout_to_document
from .metrics import risk_matrix, risk_matrix_to_csv, systemic_indicators
from .network import dumps_network, load_network, network_to_csv, save_network
from .scenario import dumps_scenario, load_scenario, save_scenario


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _parse_floats(raw: str) -> list[float]:
    return [float(tok) for tok in raw.split(",") if tok.strip()]


def _generator_config(args: argparse.Namespace) -> GeneratorConfig:
    params: dict = {}
    if args.sampler == "lognormal":
        params = {"mu": args.mu, "sigma": args.sigma}
    elif args.sampler == "pareto":
        params = {"alpha": args.alpha, "x_min": args.x_min}
    elif args.sampler == "explicit":
        if not args.assets or not args.liabilities:
            raise SystemExit("explicit sampler needs --assets and --liabilities")
        params = {
            "assets": _parse_floats(args.assets),
            "liabilities": _parse_floats(args.liabilities),
        }
    return GeneratorConfig(
        method=args.method.replace("-", "_"),
        seed=args.seed,
        sampler=args.sampler,
        sampler_params=params,
        external_ratio=args.external_ratio,
        capital_ratio=args.capital_ratio,
        buffer_sigma=args.buffer_sigma,
    )


def _shock_spec(args: argparse.Namespace) -> ShockSpec:
    targets = "all" if args.targets == "all" else tuple(
        t.strip() for t in args.targets.split(",") if t.strip()
    )
    return ShockSpec(
        model=args.model,
        targets=targets,
        magnitude=args.phi,
        magnitude_kind=args.magnitude_kind,
        lgd=args.lgd,
        max_rounds=args.max_rounds,
        epsilon=args.epsilon,
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args: argparse.Namespace) -> int:
    config = _generator_config(args)
    if args.sampler == "explicit":
        n = len(config.sampler_params["assets"])
    else:
        n = args.n
    net = generate_network(n, config)
    if args.format == "csv":
        _write(args.out, network_to_csv(net))
    else:
        _write(args.out, dumps_network(net))
    return 0


def cmd_shock(args: argparse.Namespace) -> int:
    net = load_network(args.network)
    spec = _shock_spec(args)
    spec.target_indices(net)  # fail early on unknown ids
    result, settled = run_shock(net, spec)
    if args.format == "csv":
        _write(args.out, result_to_csv(net, result))
    else:
        from .service import _shock_scenario

        sc = _shock_scenario(net, spec, args.scenario_id)
        sc.created_at = args.created_at
        _write(args.out, dumps_scenario(sc))
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    sc = load_scenario(args.scenario)
    from .service import _stage_matrix

    matrix = _stage_matrix(sc, args.stage)
    if args.format == "json":
        doc = {
            "stage": args.stage,
            "ids": list(matrix.ids),
            "columns": list(matrix.columns),
            "raw": [[float(v) for v in row] for row in matrix.raw],
            "normalized": [[float(v) for v in row] for row in matrix.normalized],
        }
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    else:
        _write(args.out, risk_matrix_to_csv(matrix, normalized=args.normalized))
    return 0


def cmd_layout(args: argparse.Namespace) -> int:
    sc = load_scenario(args.scenario)
    from .service import _stage_net_and_matrix

    net, matrix = _stage_net_and_matrix(sc, args.stage)
    config = LayoutConfig(
        seed=args.seed,
        iterations=args.iterations,
        perplexity=args.perplexity,
        learning_rate=args.learning_rate,
    )
    layout = compute_layout(net, matrix, config)
    colors = [float(v) for v in matrix.column("defaults")]
    if args.svg:
        from .report import render_island_map

        render_island_map(layout, args.svg, node_colors=colors)
    if args.format == "svg":
        if not args.svg:
            from .report import render_island_map

            render_island_map(layout, args.out or "layout.svg", node_colors=colors)
    else:
        _write(args.out, json.dumps(layout_to_document(layout), indent=2) + "\n")
    return 0


def _plan_from_args(args: argparse.Namespace) -> InterventionPlan:
    if args.plan:
        with open(args.plan, encoding="utf-8") as fh:
            return plan_from_doc(json.load(fh))
    ops = []
    for bank in args.remove or []:
        ops.append(RemoveNode(bank_id=bank))
    for pair in args.cut or []:
        frm, _, to = pair.partition(":")
        if not to:
            raise SystemExit(f"--cut wants from:to, got {pair!r}")
        ops.append(CutEdge(from_id=frm, to_id=to))
    return InterventionPlan(operations=tuple(ops), label=args.label)


def cmd_intervene(args: argparse.Namespace) -> int:
    sc = load_scenario(args.scenario)
    if sc.shock_spec is None:
        raise SystemExit("scenario has no shock spec; run `shock` first")
    plan = _plan_from_args(args)
    updated = run_scenario(
        sc.networks["FN_o"], sc.shock_spec, plan,
        scenario_id=sc.id, created_at=sc.created_at,
    )
    _write(args.out, dumps_scenario(updated))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    sc = load_scenario(args.scenario)
    if sc.shock_spec is None:
        raise SystemExit("scenario has no shock spec; run `shock` first")
    with open(args.plans, encoding="utf-8") as fh:
        plan_docs = json.load(fh)
    plans = [plan_from_doc(d) for d in plan_docs]
    assessments = compare_strategies(sc.networks["FN_o"], sc.shock_spec, plans)
    if args.format == "json":
        from .intervention import assessment_to_doc

        _write(args.out, json.dumps([assessment_to_doc(a) for a in assessments], indent=2) + "\n")
    else:
        _write(args.out, relief_table_csv(assessments))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    host, _, port = args.listen.partition(":")
    serve(args.store, host=host or "127.0.0.1", port=int(port or "8000"))
    return 0


def cmd_casestudy(args: argparse.Namespace) -> int:
    """The full desk workflow on one generated instance."""
    out_dir = args.out or "casestudy"
    os.makedirs(out_dir, exist_ok=True)

    config = GeneratorConfig(
        method="min_density",
        seed=args.seed,
        capital_ratio=args.capital_ratio,
        external_ratio=args.external_ratio,
    )
    net = generate_network(args.n, config)
    save_network(net, os.path.join(out_dir, "network.json"))

    spec = ShockSpec(model=args.model, targets="all", magnitude=args.phi, lgd=args.lgd)
    result, settled = run_shock(net, spec)
    matrix = risk_matrix(net, result)
    _write(os.path.join(out_dir, "metrics.csv"), risk_matrix_to_csv(matrix))

    layout_config = LayoutConfig(seed=args.seed, iterations=args.iterations)
    layout = compute_layout(settled, matrix, layout_config)
    _write(
        os.path.join(out_dir, "layout.json"),
        json.dumps(layout_to_document(layout), indent=2) + "\n",
    )
    from .report import render_island_map, render_relief_bars

    render_island_map(
        layout,
        os.path.join(out_dir, "island_map.svg"),
        node_colors=[float(v) for v in matrix.column("defaults")],
    )

    plans = derive_strategies(net, result, matrix)
    assessments = compare_strategies(net, spec, plans)
    relief_csv = relief_table_csv(assessments)
    _write(os.path.join(out_dir, "relief_table.csv"), relief_csv)
    render_relief_bars(assessments, os.path.join(out_dir, "relief_bars.svg"))

    sc = run_scenario(net, spec, plans[0], scenario_id=f"casestudy-{args.seed}", created_at="")
    save_scenario(sc, os.path.join(out_dir, "scenario.json"))

    summary = {
        "seed": args.seed,
        "n": net.n,
        "edges": int((net.exposures > 0).sum()),
        "system_risk": systemic_indicators(net, result).as_dict(),
        "strategies": {p.label: [op.bank_id for op in p.operations] for p in plans},
        "ranked": [a.label for a in assessments],
    }
    _write(os.path.join(out_dir, "summary.json"), json.dumps(summary, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interbank",
        description="Interbank systemic-risk simulation and intervention workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output path; - for stdout")
    common.add_argument("--format", choices=["json", "csv", "svg"], default="json")

    p = sub.add_parser("generate", parents=[common], help="synthesize a network")
    p.add_argument("--method", choices=["max-entropy", "min-density"], default="min-density")
    p.add_argument("--n", type=int, default=125)
    p.add_argument("--sampler", choices=["lognormal", "pareto", "explicit"], default="lognormal")
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--x-min", type=float, default=1.0)
    p.add_argument("--assets", default=None, help="comma-separated explicit row sums")
    p.add_argument("--liabilities", default=None, help="comma-separated explicit column sums")
    p.add_argument("--external-ratio", type=float, default=3.0)
    p.add_argument("--capital-ratio", type=float, default=0.3)
    p.add_argument("--buffer-sigma", type=float, default=0.5)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("shock", parents=[common], help="apply a shock to a network file")
    p.add_argument("--network", required=True)
    p.add_argument("--model", choices=["threshold", "linear", "hybrid"], default="linear")
    p.add_argument("--targets", default="all", help="comma-separated ids or 'all'")
    p.add_argument("--phi", type=float, default=1.0)
    p.add_argument("--magnitude-kind", choices=["fraction", "absolute"], default="fraction")
    p.add_argument("--lgd", type=float, default=1.0)
    p.add_argument("--max-rounds", type=int, default=1000)
    p.add_argument("--epsilon", type=float, default=1e-10)
    p.add_argument("--scenario-id", default="scenario")
    p.add_argument("--created-at", default="")
    p.set_defaults(func=cmd_shock)

    p = sub.add_parser("metrics", parents=[common], help="risk indicator matrix for a scenario stage")
    p.add_argument("--scenario", required=True)
    p.add_argument("--stage", choices=["FN_o", "FN_s", "FN_i", "FN_is"], default="FN_s")
    p.add_argument("--normalized", action="store_true")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("layout", parents=[common], help="risk-island layout for a scenario stage")
    p.add_argument("--scenario", required=True)
    p.add_argument("--stage", choices=["FN_o", "FN_s", "FN_i", "FN_is"], default="FN_s")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--perplexity", type=float, default=15.0)
    p.add_argument("--learning-rate", type=float, default=100.0)
    p.add_argument("--svg", default=None, help="also render the island map to this SVG path")
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("intervene", parents=[common], help="apply a plan and re-shock")
    p.add_argument("--scenario", required=True)
    p.add_argument("--plan", default=None, help="plan document path")
    p.add_argument("--remove", action="append", default=None, metavar="BANK")
    p.add_argument("--cut", action="append", default=None, metavar="FROM:TO")
    p.add_argument("--label", default="plan")
    p.set_defaults(func=cmd_intervene)

    p = sub.add_parser("compare", parents=[common], help="rank strategies by relief per cost")
    p.add_argument("--scenario", required=True)
    p.add_argument("--plans", required=True, help="JSON list of plan documents")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP API")
    p.add_argument("--store", default="store")
    p.add_argument("--listen", default="127.0.0.1:8000")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("casestudy", parents=[common], help="full pipeline on a generated instance")
    p.add_argument("--n", type=int, default=125)
    p.add_argument("--model", choices=["threshold", "linear", "hybrid"], default="linear")
    p.add_argument("--phi", type=float, default=0.15)
    p.add_argument("--lgd", type=float, default=1.0)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--capital-ratio", type=float, default=0.3)
    p.add_argument("--external-ratio", type=float, default=3.0)
    p.set_defaults(func=cmd_casestudy)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleMarginals as exc:
        print(f"error: infeasible marginals: {exc}", file=sys.stderr)
        return 1
    except (KeyError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
