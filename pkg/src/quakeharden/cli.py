"""Command-line front end.

Subcommands:
    evaluate   baseline resilience of the unhardened network
    plan       rank hardening strategies and pick the optimal one
    paths      dump the essential-load path candidates

Exit codes: 0 success, 1 invalid input, 2 I/O failure, 3 no strategy meets
the targets within budget.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

from . import __version__
from .costs import CostParams
from .economics import NOT_AFFORDABLE, SelectionReport, select_optimal, strategy_table
from .fragility import CURVE, DIRECT, load_curves, line_probabilities
from .indices import ResilienceIndices, TargetCriteria, compute_indices
from .network import Network, builtin_ieee33, dump_network, load_network
from .simulation import RECOVERY_ORDERS, EventConfig, ResilienceCurve, curve_to_csv, run_evaluation
from .strategies import COST_WEIGHTS, DEFAULT_K, HOP_WEIGHTS, candidate_paths, line_weights, paths_to_csv

log = logging.getLogger("quakeharden")

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NO_STRATEGY = 0, 1, 2, 3
FORMATS = ("text", "json")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    network: Path | None = None
    fragility: Path | None = None
    probability_mode: str = DIRECT
    event: EventConfig = field(default_factory=EventConfig)
    costs: CostParams = field(default_factory=CostParams)
    targets: TargetCriteria = field(default_factory=TargetCriteria)
    k: int = DEFAULT_K
    weighting: str = COST_WEIGHTS
    out: Path = Path("out")
    format: str = "text"
    workers: int = 1

    def digest_payload(self) -> dict[str, Any]:
        """Everything that determines the artifacts' content (not where or how fast they are made)."""
        return {
            "probability_mode": self.probability_mode,
            "event": asdict(self.event),
            "costs": asdict(self.costs),
            "targets": asdict(self.targets),
            "k": self.k,
            "weighting": self.weighting,
            "format": self.format,
        }


def _section(doc: Mapping[str, Any], name: str, cls) -> Any:
    raw = doc.get(name) or {}
    if not isinstance(raw, Mapping):
        raise ConfigError(f"config section '{name}' must be a mapping")
    allowed = {f.name for f in fields(cls)}
    extra = set(raw) - allowed
    if extra:
        raise ConfigError(f"config section '{name}': unknown key(s) {sorted(extra)}")
    return raw


_TOP_KEYS = {"network", "fragility", "probability_mode", "event", "costs", "targets",
             "paths", "output", "workers"}


def load_run_config(path: Path | None, overrides: Mapping[str, Any]) -> RunConfig:
    """Read the YAML run configuration and apply command-line overrides on top."""
    doc: dict[str, Any] = {}
    base = Path.cwd()
    if path is not None:
        doc = yaml.safe_load(path.read_text()) or {}
        if not isinstance(doc, Mapping):
            raise ConfigError("config document must be a mapping")
        extra = set(doc) - _TOP_KEYS
        if extra:
            raise ConfigError(f"config: unknown key(s) {sorted(extra)}")
        base = path.parent

    def rel(p):
        return None if p is None else (base / p if not Path(p).is_absolute() else Path(p))

    event = dict(_section(doc, "event", EventConfig))
    for key, name in (("seed", "seed"), ("iterations", "iterations"), ("recovery_order", "recovery_order")):
        if overrides.get(key) is not None:
            event[name] = overrides[key]
    paths = doc.get("paths") or {}
    output = doc.get("output") or {}
    try:
        cfg = RunConfig(
            network=rel(doc.get("network")),
            fragility=rel(doc.get("fragility")),
            probability_mode=doc.get("probability_mode", CURVE if doc.get("fragility") else DIRECT),
            event=EventConfig(**event),
            costs=CostParams(**_section(doc, "costs", CostParams)),
            targets=TargetCriteria(**_section(doc, "targets", TargetCriteria)),
            k=int(paths.get("k", DEFAULT_K)),
            weighting=paths.get("weighting", COST_WEIGHTS),
            out=rel(output.get("directory", "out")),
            format=output.get("format", "text"),
            workers=int(doc.get("workers", 1)),
        )
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from exc
    if overrides.get("network") is not None:
        cfg = replace(cfg, network=Path(overrides["network"]))
    if overrides.get("fragility") is not None:
        cfg = replace(cfg, fragility=Path(overrides["fragility"]), probability_mode=CURVE)
    for key in ("out", "format", "workers", "k", "weighting"):
        if overrides.get(key) is not None:
            val = Path(overrides[key]) if key == "out" else overrides[key]
            cfg = replace(cfg, **{key: val})
    if cfg.format not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    if cfg.probability_mode not in (DIRECT, CURVE):
        raise ConfigError(f"probability_mode must be '{DIRECT}' or '{CURVE}'")
    if cfg.probability_mode == CURVE and cfg.fragility is None:
        raise ConfigError("curve probability mode needs a fragility file")
    if cfg.k < 1:
        raise ConfigError("paths.k must be >= 1")
    if cfg.weighting not in (COST_WEIGHTS, HOP_WEIGHTS):
        raise ConfigError(f"paths.weighting must be '{COST_WEIGHTS}' or '{HOP_WEIGHTS}'")
    return cfg


# artifacts ------------------------------------------------------------------

class _Context:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.net: Network = load_network(cfg.network) if cfg.network else builtin_ieee33()
        self.curves = load_curves(cfg.fragility) if cfg.fragility else None
        payload = cfg.digest_payload()
        payload["network_sha256"] = hashlib.sha256(dump_network(self.net).encode()).hexdigest()
        if self.curves is not None:
            payload["fragility_sha256"] = hashlib.sha256(cfg.fragility.read_bytes()).hexdigest()
        self.digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
        self.header = {
            "generator": f"quakeharden {__version__}",
            "config_sha256": self.digest,
            "seed": cfg.event.seed,
            "iterations": cfg.event.iterations,
        }

    def probs(self, hardened=()):
        c = self.cfg
        return line_probabilities(self.net, hardened, c.event.pga, self.curves, c.probability_mode)

    def write(self, name: str, text: str) -> Path:
        out = self.cfg.out
        out.mkdir(parents=True, exist_ok=True)
        path = out / name
        path.write_text(text)
        log.info("wrote %s", path)
        return path

    def write_report(self, stem: str, data: dict[str, Any], text: str) -> Path:
        if self.cfg.format == "json":
            return self.write(f"{stem}.json", json.dumps({"provenance": self.header, **data}, indent=2) + "\n")
        head = "".join(f"# {k}: {v}\n" for k, v in self.header.items())
        return self.write(f"{stem}.txt", head + text)


def _indices_row(name: str, idx: ResilienceIndices) -> str:
    return (f"{name:<14} {idx.zeta_v:>8.4f} {idx.zeta_d:>8.4f} {idx.zeta_e:>8.4f} "
            f"{100 * idx.essential_pct_degraded:>10.2f}%\n")


_INDEX_HEAD = f"{'mode':<14} {'zeta_V':>8} {'zeta_D':>8} {'zeta_E':>8} {'essential':>11}\n"


def _landmarks(curve: ResilienceCurve) -> dict[str, Any]:
    lm = curve.landmarks
    return {"t_e": lm.t_e, "t_pe": lm.t_pe, "t_r": lm.t_r, "t_pir": lm.t_pir,
            "R_0": curve.r0, "R_pe": curve.r_pe, "R_pr": curve.r_pr}


def cmd_evaluate(cfg: RunConfig) -> int:
    ctx = _Context(cfg)
    curve = run_evaluation(ctx.net, ctx.probs(), cfg.event, workers=cfg.workers)
    idx = compute_indices(curve)
    ctx.write("curve.csv", curve_to_csv(curve, ctx.header))
    lm = _landmarks(curve)
    text = (_INDEX_HEAD + _indices_row("not hardened", idx) + "\n"
            + "".join(f"{k}: {v}\n" for k, v in lm.items()))
    ctx.write_report("indices", {"indices": idx.as_dict(), "landmarks": lm}, text)
    print(_INDEX_HEAD + _indices_row("not hardened", idx), end="")
    return EXIT_OK


def _checks(report) -> list[dict[str, Any]]:
    return [asdict(c) for c in report.checks]


def _selection_payload(rep: SelectionReport) -> dict[str, Any]:
    data: dict[str, Any] = {
        "status": rep.status,
        "message": rep.message,
        "baseline": {"indices": rep.baseline_indices.as_dict(), "checks": _checks(rep.baseline_report),
                     "landmarks": _landmarks(rep.baseline)},
        "strategies_evaluated": len(rep.ranked),
    }
    if rep.selected is not None:
        s = rep.selected
        data["selected"] = {
            "strategy": s.label,
            "lines": sorted(s.strategy.lines),
            "paths": {eid: {"generator_bus": p.generator_bus, "lines": list(p.lines)}
                      for eid, p in s.strategy.assignment.items()},
            "cost": s.cost, "benefit": s.benefit, "lambda": s.lam, "alpha": s.alpha,
            "indices": s.indices.as_dict(), "checks": _checks(s.report),
            "landmarks": _landmarks(s.curve),
        }
    return data


def _selection_text(rep: SelectionReport) -> str:
    out = [rep.message + "\n\n", _INDEX_HEAD, _indices_row("not hardened", rep.baseline_indices)]
    if rep.selected is not None:
        s = rep.selected
        out.append(_indices_row(f"hardened {s.label}", s.indices))
        out.append(f"\nselected: {s.label}\nlines: {sorted(s.strategy.lines)}\n"
                   f"C = {s.cost:.2f}\nB = {s.benefit:.2f}\nlambda = {s.lam:.4f}\nalpha = {s.alpha:.4f}\n")
    out.append(f"\nstrategies evaluated: {len(rep.ranked)}\n")
    return "".join(out)


def cmd_plan(cfg: RunConfig) -> int:
    ctx = _Context(cfg)
    rep = select_optimal(ctx.net, cfg.event, cfg.targets, cfg.costs, k=cfg.k, weighting=cfg.weighting,
                         curves=ctx.curves, mode=cfg.probability_mode, workers=cfg.workers)
    ctx.write("strategies.csv", strategy_table(rep.ranked, ctx.header))
    ctx.write("curve_baseline.csv", curve_to_csv(rep.baseline, ctx.header))
    if rep.selected is not None:
        ctx.write("curve_selected.csv", curve_to_csv(rep.selected.curve, ctx.header))
    ctx.write_report("selection", _selection_payload(rep), _selection_text(rep))
    print(rep.message)
    if rep.selected is not None:
        print(_INDEX_HEAD + _indices_row("not hardened", rep.baseline_indices)
              + _indices_row(f"hardened {rep.selected.label}", rep.selected.indices), end="")
    return EXIT_NO_STRATEGY if rep.status == NOT_AFFORDABLE else EXIT_OK


def cmd_paths(cfg: RunConfig) -> int:
    ctx = _Context(cfg)
    per = candidate_paths(ctx.net, line_weights(ctx.net, cfg.costs, cfg.weighting), cfg.k)
    ctx.write("paths.csv", paths_to_csv(per, ctx.header))
    for eid, cands in per.items():
        print(f"{eid}: {len(cands)} candidate path(s)")
    return EXIT_OK


COMMANDS = {"evaluate": cmd_evaluate, "plan": cmd_plan, "paths": cmd_paths}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quakeharden", description="Earthquake hardening planner for distribution feeders.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--network", help="network YAML (default: bundled IEEE 33-bus)")
    common.add_argument("--config", type=Path, help="run configuration YAML")
    common.add_argument("--fragility", help="fragility curve YAML; switches to curve probability mode")
    common.add_argument("--seed", type=int)
    common.add_argument("--iterations", type=int)
    common.add_argument("--recovery-order", choices=RECOVERY_ORDERS)
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--workers", type=int)
    common.add_argument("--k", type=int, help="paths per essential load and generator")
    common.add_argument("--weighting", choices=(COST_WEIGHTS, HOP_WEIGHTS))
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("evaluate", parents=[common], help="resilience indices of the unhardened network")
    sub.add_parser("plan", parents=[common], help="select the optimal hardening strategy")
    sub.add_parser("paths", parents=[common], help="list path candidates per essential load")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = {
        "network": args.network, "fragility": args.fragility, "seed": args.seed,
        "iterations": args.iterations, "recovery_order": args.recovery_order, "out": args.out,
        "format": args.format, "workers": args.workers, "k": args.k, "weighting": args.weighting,
    }
    try:
        cfg = load_run_config(args.config, overrides)
        for p in (cfg.network, cfg.fragility):
            if p is not None and not p.is_file():
                raise FileNotFoundError(f"no such file: {p}")
        return COMMANDS[args.command](cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
