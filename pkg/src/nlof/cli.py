"""Command-line entry point.

    nlof analyze  --flows F --topology T --eps 10000 [--out report.csv]
    nlof simulate --scenario S.json --out DIR [--seed N]
    nlof run      --scenario S.json --eps 10000 [--out report.csv]
    nlof score-eval --report report.csv --ground-truth DIR/ground_truth.json
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from nlof.flows import FlowParseError, read_flow_records, serialize_flow_records
from nlof.netsim import ScenarioError, generate_scenario, read_scenario
from nlof.pipeline import DEFAULTS, PipelineConfig, PipelineError, analyze, intermediates, validate_config
from nlof.scoring import parse_report, render_report
from nlof.topology import TopologyError, link_key, read_topology

log = logging.getLogger("nlof")

CONFIG_KEYS = {f.name for f in dataclasses.fields(PipelineConfig)}


class UsageError(Exception):
    pass


def _atomic_write(files: dict[Path, str]) -> None:
    """Write every file or none: stage to temp files, then rename."""
    staged = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, path))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)


def _intermediates_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".intermediates.json")


def _load_config(args) -> PipelineConfig:
    values = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise PipelineError("config", "file not found") from None
        except json.JSONDecodeError as exc:
            raise PipelineError("config", f"invalid JSON: {exc}") from None
        unknown = sorted(set(raw) - CONFIG_KEYS)
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        values.update(raw)
    for name in CONFIG_KEYS:
        flag = getattr(args, name, None)
        if flag is not None and flag is not False:
            values[name] = flag
    return PipelineConfig(**values)


def _check(config: PipelineConfig, require_source: bool = True) -> None:
    bad = validate_config(config, require_source)
    if bad:
        raise UsageError("invalid configuration:\n  " + "\n  ".join(bad))


def _read_inputs(config: PipelineConfig):
    try:
        topo = read_topology(config.topology)
    except FileNotFoundError:
        raise PipelineError("topology", f"file not found ({config.topology})") from None
    except TopologyError as exc:
        raise PipelineError("topology", exc) from None
    try:
        flows = read_flow_records(config.flows)
    except FileNotFoundError:
        raise PipelineError("flows", f"file not found ({config.flows})") from None
    except FlowParseError as exc:
        raise PipelineError("flows", exc) from None
    return flows, topo


def _simulate(scenario_path: str, seed: int | None):
    try:
        spec = read_scenario(scenario_path)
    except FileNotFoundError as exc:
        raise PipelineError("scenario", f"file not found ({exc.filename})") from None
    except (ValueError, TopologyError) as exc:
        raise PipelineError("scenario", exc) from None
    if seed is not None:
        spec.seed = seed
    try:
        return generate_scenario(spec)
    except (ScenarioError, TopologyError) as exc:
        raise PipelineError("simulate", exc) from None


def _analyze_and_write(flows, topo, config: PipelineConfig) -> None:
    result = analyze(
        flows,
        topo,
        eps=config.eps,
        min_samples=config.min_samples,
        tpr=config.tpr,
        tpdev=config.tpdev,
        k=config.k,
        fof_threshold=config.fof_threshold,
    )
    report = render_report(result.scores, config.format)
    if config.out is None:
        sys.stdout.write(report)
        return
    files = {Path(config.out): report}
    if config.emit_intermediates:
        rows = intermediates(flows, result)
        files[_intermediates_path(config.out)] = json.dumps(rows, indent=1) + "\n"
    _atomic_write(files)
    log.info("wrote %s", ", ".join(str(p) for p in files))


def cmd_analyze(args) -> None:
    config = _load_config(args)
    _check(config)
    if config.scenario is not None:
        spec_scenario = _simulate(config.scenario, config.seed)
        _analyze_and_write(spec_scenario.flows, spec_scenario.topology, config)
    else:
        flows, topo = _read_inputs(config)
        _analyze_and_write(flows, topo, config)


def cmd_run(args) -> None:
    config = _load_config(args)
    if config.flows is not None or config.topology is not None:
        raise UsageError("run takes --scenario, not --flows/--topology (use analyze)")
    _check(config)
    scenario = _simulate(config.scenario, config.seed)
    _analyze_and_write(scenario.flows, scenario.topology, config)


def cmd_simulate(args) -> None:
    if args.out is None:
        raise UsageError("simulate needs --out DIR")
    scenario = _simulate(args.scenario, args.seed)
    out = Path(args.out)
    topo = scenario.topology
    truth = {
        "errored_links": [
            {"a": a, "b": b, "error_rate": topo.error_rate[(a, b)]} for a, b in scenario.ground_truth
        ]
    }
    _atomic_write(
        {
            out / "flows.csv": serialize_flow_records(scenario.flows, "csv").decode("utf-8"),
            out / "topology.json": json.dumps(topo.to_dict(), indent=2) + "\n",
            out / "ground_truth.json": json.dumps(truth, indent=2) + "\n",
        }
    )


def evaluate_report(ranked, errored) -> dict:
    """1-based rank and score of each errored link in a ranked report."""
    position = {s.link: (i + 1, s) for i, s in enumerate(ranked)}
    rows = []
    for link in errored:
        hit = position.get(link_key(*link))
        rows.append(
            {
                "link_a": link_key(*link)[0],
                "link_b": link_key(*link)[1],
                "rank": hit[0] if hit else None,
                "nlof": hit[1].nlof if hit else None,
            }
        )
    return {"links_in_report": len(ranked), "errored_links": rows}


def cmd_score_eval(args) -> None:
    try:
        text = Path(args.report).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise PipelineError("report", f"file not found ({args.report})") from None
    fmt = args.format or ("json" if args.report.endswith(".json") else "csv")
    ranked = parse_report(text, fmt)
    try:
        truth = json.loads(Path(args.ground_truth).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise PipelineError("ground-truth", f"file not found ({args.ground_truth})") from None
    errored = [(e["a"], e["b"]) for e in truth["errored_links"]]
    result = json.dumps(evaluate_report(ranked, errored), indent=2) + "\n"
    if args.out:
        _atomic_write({Path(args.out): result})
    else:
        sys.stdout.write(result)


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--eps", type=float, help="DBSCAN radius in bits/second (required)")
    p.add_argument("--min-samples", dest="min_samples", type=int, help=f"default {DEFAULTS['min_samples']}")
    p.add_argument("--tpr", type=float, help=f"default {DEFAULTS['tpr']}")
    p.add_argument("--tpdev", type=float, help=f"default {DEFAULTS['tpdev']}")
    p.add_argument("--k", type=int, help=f"default {DEFAULTS['k']}")
    p.add_argument("--fof-threshold", dest="fof_threshold", type=float, help=f"default {DEFAULTS['fof_threshold']}")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out", help="report path (stdout when omitted)")
    p.add_argument(
        "--emit-intermediates",
        dest="emit_intermediates",
        action="store_true",
        help="also write <out stem>.intermediates.json with per-flow clusters and FOF",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlof", description="Network Link Outlier Factor from flow records.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="score links from flow records and a topology")
    p.add_argument("--flows")
    p.add_argument("--topology")
    p.add_argument("--scenario")
    p.add_argument("--seed", type=int)
    _add_params(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="generate flows, topology and ground truth from a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="simulate a scenario and analyze it")
    p.add_argument("--scenario")
    p.add_argument("--seed", type=int)
    _add_params(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score-eval", help="rank of each ground-truth errored link in a report")
    p.add_argument("--report", required=True)
    p.add_argument("--ground-truth", dest="ground_truth", required=True)
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_score_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"nlof: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"nlof: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
