"""Batch surface: scenario files in, result files out.

Scenarios are single JSON documents parsed strictly: unknown keys are
rejected, every invariant violation names the offending field, and a
parsed scenario can be re-emitted in canonical form (all defaults
materialised, fixed key order) and reparsed to the same value.

Results land in an output directory as blocks.csv, miners.csv and
summary.json, plus a manifest that is written before any result file
and lists them all. Given the same scenario, seed and flags, result
files are byte-identical between invocations; only the manifest's
wall-time fields differ.

Exit codes: 0 success, 1 scenario error, 2 runtime error, 64 unknown
subcommand.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .activity import ActivityParams
from .consensus import ChainParams
from .fees import FeeSchedule, base_service_fee, entrance_fee, upload_fee
from .simnet import (
    AttackConfig,
    HashRateStep,
    MinerSpec,
    Scenario,
    ServicePolicy,
    SimResult,
    SybilConfig,
    Theorem1Config,
    run_experiment,
    run_simulation,
)

__all__ = [
    "ScenarioError",
    "parse_scenario",
    "scenario_to_dict",
    "emit_results",
    "main",
    "entrypoint",
]

logger = logging.getLogger("rpoa")

USAGE = """\
usage: rpoa <command> [options]

commands:
  run             simulate a scenario and write result files
  attack          run seeded private-fork double-spend races
  sybil           compare one identity against an identity cluster
  theorem1        regression of the per-user activity ceiling
  fees-table      print fee schedule tables to stdout
  retarget-sweep  run with a hash-rate step and report re-convergence

common options:
  --scenario PATH   scenario JSON file
  --seed U64        override the scenario seed
  --out DIR         output directory (created if missing)
  --format {csv,json}
  --quiet           suppress the completion line

environment: RPOA_LOG sets the log level (DEBUG, INFO, ...).
"""

COMMANDS = ("run", "attack", "sybil", "theorem1", "fees-table", "retarget-sweep")


class ScenarioError(Exception):
    """Scenario file is missing, malformed, or violates an invariant."""


# --- strict scenario parsing -----------------------------------------


def _check_keys(mapping: dict, allowed: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ScenarioError(f"unknown key(s) {', '.join(unknown)} in {where}")


def _require_dict(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(f"{where} must be an object")
    return value


def _num(mapping: dict, key: str, where: str, default: float) -> float:
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}.{key} must be a number")
    return float(value)


def _int(mapping: dict, key: str, where: str, default: int) -> int:
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}.{key} must be an integer")
    return value


def _str(mapping: dict, key: str, where: str, default: str) -> str:
    value = mapping.get(key, default)
    if not isinstance(value, str):
        raise ScenarioError(f"{where}.{key} must be a string")
    return value


def _bool(mapping: dict, key: str, where: str, default: bool) -> bool:
    value = mapping.get(key, default)
    if not isinstance(value, bool):
        raise ScenarioError(f"{where}.{key} must be a boolean")
    return value


def _int_list(mapping: dict, key: str, where: str, default: tuple[int, ...]) -> tuple[int, ...]:
    value = mapping.get(key)
    if value is None:
        return default
    if not isinstance(value, list) or any(
        isinstance(v, bool) or not isinstance(v, int) for v in value
    ):
        raise ScenarioError(f"{where}.{key} must be a list of integers")
    return tuple(value)


_CHAIN_KEYS = ("hash_bits", "target_interval", "retarget_window")
_ACTIVITY_KEYS = ("time_scale", "decay_exponent", "worth_cap", "worth_scale", "activity_scale")
_FEES_KEYS = (
    "entrance_base",
    "service_base",
    "max_block_worth",
    "upload_base",
    "stake_lock_blocks",
    "block_reward",
)
_SERVICE_KEYS = (
    "mode",
    "worth",
    "every_blocks",
    "start_height",
    "budget_txs",
    "psi_target",
    "topup_band",
    "wage",
)
_MINER_KEYS = ("id", "hash_rate", "behavior", "initial_balance", "service")
_ATTACK_KEYS = ("share", "depth", "budget_blocks", "runs", "warmup_blocks")
_SYBIL_KEYS = (
    "cluster_size",
    "side_hash_rate",
    "service_worth",
    "every_blocks",
    "start_height",
    "budget_txs",
)
_THEOREM1_KEYS = (
    "users",
    "blocks_grid",
    "miners",
    "block_capacity",
    "samples",
    "capacity_fraction",
    "noise_ratio",
    "miners_grid",
)
_STEP_KEYS = ("height", "factor")
_TOP_KEYS = (
    "experiment",
    "seed",
    "duration_blocks",
    "duration_seconds",
    "real_hash",
    "chain",
    "activity",
    "fees",
    "miners",
    "attack",
    "sybil",
    "theorem1",
    "hash_rate_step",
)


def _parse_service(data: dict, where: str) -> ServicePolicy:
    _check_keys(data, _SERVICE_KEYS, where)
    defaults = ServicePolicy()
    return ServicePolicy(
        mode=_str(data, "mode", where, defaults.mode),
        worth=_num(data, "worth", where, defaults.worth),
        every_blocks=_int(data, "every_blocks", where, defaults.every_blocks),
        start_height=_int(data, "start_height", where, defaults.start_height),
        budget_txs=_int(data, "budget_txs", where, defaults.budget_txs),
        psi_target=_num(data, "psi_target", where, defaults.psi_target),
        topup_band=_num(data, "topup_band", where, defaults.topup_band),
        wage=_num(data, "wage", where, defaults.wage),
    )


def _parse_miner(data: dict, where: str) -> MinerSpec:
    _check_keys(data, _MINER_KEYS, where)
    if "id" not in data:
        raise ScenarioError(f"{where}.id is required")
    if "hash_rate" not in data:
        raise ScenarioError(f"{where}.hash_rate is required")
    service = ServicePolicy()
    if "service" in data:
        service = _parse_service(_require_dict(data["service"], f"{where}.service"), f"{where}.service")
    defaults = MinerSpec(id="x", hash_rate=0.0)
    return MinerSpec(
        id=_str(data, "id", where, ""),
        hash_rate=_num(data, "hash_rate", where, 0.0),
        behavior=_str(data, "behavior", where, defaults.behavior),
        initial_balance=_num(data, "initial_balance", where, defaults.initial_balance),
        service=service,
    )


def scenario_from_dict(data: dict) -> Scenario:
    """Build a validated Scenario from a parsed JSON object."""
    data = _require_dict(data, "scenario")
    _check_keys(data, _TOP_KEYS, "scenario")
    if "experiment" not in data:
        raise ScenarioError("scenario.experiment is required")
    if "seed" not in data:
        raise ScenarioError("scenario.seed is required (runs must be reproducible)")

    try:
        chain = ChainParams(
            hash_bits=_int(d := _require_dict(data.get("chain", {}), "chain"), "hash_bits", "chain", 256),
            target_interval=_num(d, "target_interval", "chain", 10.0),
            retarget_window=_int(d, "retarget_window", "chain", 20),
        )
        _check_keys(d, _CHAIN_KEYS, "chain")

        a = _require_dict(data.get("activity", {}), "activity")
        _check_keys(a, _ACTIVITY_KEYS, "activity")
        defaults_a = ActivityParams()
        activity = ActivityParams(
            time_scale=_num(a, "time_scale", "activity", defaults_a.time_scale),
            decay_exponent=_num(a, "decay_exponent", "activity", defaults_a.decay_exponent),
            worth_cap=_num(a, "worth_cap", "activity", defaults_a.worth_cap),
            worth_scale=_num(a, "worth_scale", "activity", defaults_a.worth_scale),
            activity_scale=_num(a, "activity_scale", "activity", defaults_a.activity_scale),
        )

        f = _require_dict(data.get("fees", {}), "fees")
        _check_keys(f, _FEES_KEYS, "fees")
        defaults_f = FeeSchedule()
        fees = FeeSchedule(
            entrance_base=_num(f, "entrance_base", "fees", defaults_f.entrance_base),
            service_base=_num(f, "service_base", "fees", defaults_f.service_base),
            max_block_worth=_num(f, "max_block_worth", "fees", defaults_f.max_block_worth),
            upload_base=_num(f, "upload_base", "fees", defaults_f.upload_base),
            stake_lock_blocks=_int(f, "stake_lock_blocks", "fees", defaults_f.stake_lock_blocks),
            block_reward=_num(f, "block_reward", "fees", defaults_f.block_reward),
        )

        miners: tuple[MinerSpec, ...]
        if "miners" in data:
            raw_miners = data["miners"]
            if not isinstance(raw_miners, list):
                raise ScenarioError("scenario.miners must be a list")
            miners = tuple(
                _parse_miner(_require_dict(m, f"miners[{i}]"), f"miners[{i}]")
                for i, m in enumerate(raw_miners)
            )
        else:
            miners = Scenario.__dataclass_fields__["miners"].default

        attack = None
        if "attack" in data:
            att = _require_dict(data["attack"], "attack")
            _check_keys(att, _ATTACK_KEYS, "attack")
            defaults_at = AttackConfig()
            attack = AttackConfig(
                share=_num(att, "share", "attack", defaults_at.share),
                depth=_int(att, "depth", "attack", defaults_at.depth),
                budget_blocks=_int(att, "budget_blocks", "attack", defaults_at.budget_blocks),
                runs=_int(att, "runs", "attack", defaults_at.runs),
                warmup_blocks=_int(att, "warmup_blocks", "attack", defaults_at.warmup_blocks),
            )

        sybil = None
        if "sybil" in data:
            sy = _require_dict(data["sybil"], "sybil")
            _check_keys(sy, _SYBIL_KEYS, "sybil")
            defaults_sy = SybilConfig()
            sybil = SybilConfig(
                cluster_size=_int(sy, "cluster_size", "sybil", defaults_sy.cluster_size),
                side_hash_rate=_num(sy, "side_hash_rate", "sybil", defaults_sy.side_hash_rate),
                service_worth=_num(sy, "service_worth", "sybil", defaults_sy.service_worth),
                every_blocks=_int(sy, "every_blocks", "sybil", defaults_sy.every_blocks),
                start_height=_int(sy, "start_height", "sybil", defaults_sy.start_height),
                budget_txs=_int(sy, "budget_txs", "sybil", defaults_sy.budget_txs),
            )

        theorem1 = None
        if "theorem1" in data:
            th = _require_dict(data["theorem1"], "theorem1")
            _check_keys(th, _THEOREM1_KEYS, "theorem1")
            defaults_th = Theorem1Config()
            theorem1 = Theorem1Config(
                users=_int(th, "users", "theorem1", defaults_th.users),
                blocks_grid=_int_list(th, "blocks_grid", "theorem1", defaults_th.blocks_grid),
                miners=_int(th, "miners", "theorem1", defaults_th.miners),
                block_capacity=_num(th, "block_capacity", "theorem1", defaults_th.block_capacity),
                samples=_int(th, "samples", "theorem1", defaults_th.samples),
                capacity_fraction=_num(th, "capacity_fraction", "theorem1", defaults_th.capacity_fraction),
                noise_ratio=_num(th, "noise_ratio", "theorem1", defaults_th.noise_ratio),
                miners_grid=_int_list(th, "miners_grid", "theorem1", defaults_th.miners_grid),
            )

        step = None
        if "hash_rate_step" in data:
            st = _require_dict(data["hash_rate_step"], "hash_rate_step")
            _check_keys(st, _STEP_KEYS, "hash_rate_step")
            if "height" not in st or "factor" not in st:
                raise ScenarioError("hash_rate_step needs both height and factor")
            step = HashRateStep(
                height=_int(st, "height", "hash_rate_step", 0),
                factor=_num(st, "factor", "hash_rate_step", 1.0),
            )

        seed = data["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ScenarioError("scenario.seed must be an integer")

        return Scenario(
            experiment=_str(data, "experiment", "scenario", ""),
            seed=seed,
            duration_blocks=_int(data, "duration_blocks", "scenario", 200),
            duration_seconds=_num(data, "duration_seconds", "scenario", 0.0),
            real_hash=_bool(data, "real_hash", "scenario", False),
            chain=chain,
            activity=activity,
            fees=fees,
            miners=miners,
            attack=attack,
            sybil=sybil,
            theorem1=theorem1,
            hash_rate_step=step,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def parse_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(data)


def scenario_to_dict(scenario: Scenario) -> dict:
    """Canonical form: every default materialised, fixed key order."""
    out: dict = {
        "experiment": scenario.experiment,
        "seed": scenario.seed,
        "duration_blocks": scenario.duration_blocks,
        "duration_seconds": scenario.duration_seconds,
        "real_hash": scenario.real_hash,
        "chain": {
            "hash_bits": scenario.chain.hash_bits,
            "target_interval": scenario.chain.target_interval,
            "retarget_window": scenario.chain.retarget_window,
        },
        "activity": {
            "time_scale": scenario.activity.time_scale,
            "decay_exponent": scenario.activity.decay_exponent,
            "worth_cap": scenario.activity.worth_cap,
            "worth_scale": scenario.activity.worth_scale,
            "activity_scale": scenario.activity.activity_scale,
        },
        "fees": {
            "entrance_base": scenario.fees.entrance_base,
            "service_base": scenario.fees.service_base,
            "max_block_worth": scenario.fees.max_block_worth,
            "upload_base": scenario.fees.upload_base,
            "stake_lock_blocks": scenario.fees.stake_lock_blocks,
            "block_reward": scenario.fees.block_reward,
        },
        "miners": [
            {
                "id": spec.id,
                "hash_rate": spec.hash_rate,
                "behavior": spec.behavior,
                "initial_balance": spec.initial_balance,
                "service": {
                    "mode": spec.service.mode,
                    "worth": spec.service.worth,
                    "every_blocks": spec.service.every_blocks,
                    "start_height": spec.service.start_height,
                    "budget_txs": spec.service.budget_txs,
                    "psi_target": spec.service.psi_target,
                    "topup_band": spec.service.topup_band,
                    "wage": spec.service.wage,
                },
            }
            for spec in scenario.miners
        ],
    }
    if scenario.attack is not None:
        out["attack"] = {
            "share": scenario.attack.share,
            "depth": scenario.attack.depth,
            "budget_blocks": scenario.attack.budget_blocks,
            "runs": scenario.attack.runs,
            "warmup_blocks": scenario.attack.warmup_blocks,
        }
    if scenario.sybil is not None:
        out["sybil"] = {
            "cluster_size": scenario.sybil.cluster_size,
            "side_hash_rate": scenario.sybil.side_hash_rate,
            "service_worth": scenario.sybil.service_worth,
            "every_blocks": scenario.sybil.every_blocks,
            "start_height": scenario.sybil.start_height,
            "budget_txs": scenario.sybil.budget_txs,
        }
    if scenario.theorem1 is not None:
        out["theorem1"] = {
            "users": scenario.theorem1.users,
            "blocks_grid": list(scenario.theorem1.blocks_grid),
            "miners": scenario.theorem1.miners,
            "block_capacity": scenario.theorem1.block_capacity,
            "samples": scenario.theorem1.samples,
            "capacity_fraction": scenario.theorem1.capacity_fraction,
            "noise_ratio": scenario.theorem1.noise_ratio,
            "miners_grid": list(scenario.theorem1.miners_grid),
        }
    if scenario.hash_rate_step is not None:
        out["hash_rate_step"] = {
            "height": scenario.hash_rate_step.height,
            "factor": scenario.hash_rate_step.factor,
        }
    return out


# --- result emission --------------------------------------------------


def _round_sig(value, digits: int = 12):
    """Recursively render floats with up to 12 significant digits."""
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {k: _round_sig(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_sig(v, digits) for v in value]
    return value


def _blocks_rows(result: SimResult) -> tuple[list[str], list[list]]:
    header = ["height", "timestamp_s", "miner_id", "psi_at_mine", "threshold_hex", "interblock_s"]
    rows = [
        [
            record.height,
            repr(record.timestamp),
            record.miner,
            repr(record.psi),
            format(record.threshold, "x"),
            repr(record.interval),
        ]
        for record in result.blocks
    ]
    return header, rows


def _miners_rows(result: SimResult) -> tuple[list[str], list[list]]:
    header = ["miner_id", "hash_rate", "blocks_won", "fees_paid", "final_psi", "final_balance"]
    rows = [
        [
            stats.miner_id,
            repr(stats.hash_rate),
            stats.blocks_won,
            repr(stats.fees_paid),
            repr(stats.final_psi),
            repr(stats.final_balance),
        ]
        for stats in result.miners
    ]
    return header, rows


def _write_table(path: Path, header: list[str], rows: list[list], fmt: str) -> None:
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(header)
        writer.writerows(rows)
        path.write_text(buffer.getvalue(), encoding="utf-8")
    else:
        records = [dict(zip(header, row)) for row in rows]
        path.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")


def emit_results(
    result: SimResult,
    scenario: Scenario,
    outdir: str | Path,
    fmt: str = "csv",
    scenario_path: str | Path | None = None,
) -> list[Path]:
    """Write the result tree and return the written result files.

    The manifest goes first and lists every result file; result files
    are deterministic functions of the result, the manifest's wall-time
    fields are not part of that contract.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ext = "csv" if fmt == "csv" else "json"
    names = [f"blocks.{ext}", f"miners.{ext}", "summary.json"]
    manifest_path = outdir / "manifest.json"

    def write_manifest(finished: str | None) -> None:
        manifest = {
            "tool_version": __version__,
            "scenario": str(scenario_path) if scenario_path else None,
            "seed": result.seed,
            "output_dir": str(outdir),
            "files": names,
            "started_utc": started,
            "finished_utc": finished,
        }
        manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    write_manifest(None)

    header, rows = _blocks_rows(result)
    _write_table(outdir / names[0], header, rows, fmt)
    header, rows = _miners_rows(result)
    _write_table(outdir / names[1], header, rows, fmt)

    summary = {
        "experiment": result.experiment,
        "seed": result.seed,
        "parameters": _round_sig(scenario_to_dict(scenario)),
        "metrics": _round_sig(result.extras),
        "warnings": result.warnings,
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")

    write_manifest(datetime.datetime.now(datetime.timezone.utc).isoformat())
    return [outdir / name for name in names]


# --- subcommands -------------------------------------------------------


def _sim_parser(command: str) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=f"rpoa {command}", add_help=True)
    parser.add_argument("--scenario", required=True, help="scenario JSON file")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--quiet", action="store_true")
    return parser


def _load_for(command: str, args: argparse.Namespace) -> Scenario:
    scenario = parse_scenario(args.scenario)
    expected = {"retarget-sweep": "run"}.get(command, command)
    if scenario.experiment != expected:
        raise ScenarioError(
            f"subcommand {command!r} needs a scenario with experiment {expected!r}, "
            f"got {scenario.experiment!r}"
        )
    if args.seed is not None:
        if args.seed < 0:
            raise ScenarioError("seed must be a non-negative integer")
        scenario = replace(scenario, seed=args.seed)
    return scenario


def _run_sim_command(command: str, argv: list[str]) -> int:
    parser = _sim_parser(command)
    if command == "retarget-sweep":
        parser.add_argument("--step-height", type=int, default=None)
        parser.add_argument("--step-factor", type=float, default=None)
    args = parser.parse_args(argv)
    scenario = _load_for(command, args)

    if command == "retarget-sweep":
        step = scenario.hash_rate_step
        if args.step_height is not None or args.step_factor is not None:
            height = args.step_height if args.step_height is not None else (
                step.height if step else scenario.duration_blocks // 2
            )
            factor = args.step_factor if args.step_factor is not None else (
                step.factor if step else 4.0
            )
            step = HashRateStep(height=height, factor=factor)
        if step is None:
            raise ScenarioError(
                "retarget-sweep needs hash_rate_step in the scenario or --step-height/--step-factor"
            )
        scenario = replace(scenario, hash_rate_step=step)
        result = run_simulation(scenario)
    else:
        result = run_experiment(scenario)

    files = emit_results(result, scenario, args.out, args.format, scenario_path=args.scenario)
    for warning in result.warnings:
        logger.warning(warning)
    if not args.quiet:
        print(f"{result.experiment}: {len(result.blocks)} blocks, results in {args.out}")
    logger.info("wrote %s", ", ".join(str(f) for f in files))
    return 0


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise ScenarioError(f"{flag} expects a comma-separated number list") from exc


def _fees_table_command(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(prog="rpoa fees-table")
    parser.add_argument("--heights", default="0,4,16,100,10000")
    parser.add_argument("--worths", default="")
    parser.add_argument("--psis", default="")
    parser.add_argument("--gamma-e", "--entrance-base", dest="entrance_base", type=float, default=None)
    parser.add_argument("--alpha-fee", "--service-base", dest="service_base", type=float, default=None)
    parser.add_argument("--omega-w", "--max-block-worth", dest="max_block_worth", type=float, default=None)
    parser.add_argument("--gamma-u", "--upload-base", dest="upload_base", type=float, default=None)
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    defaults = FeeSchedule()
    try:
        sched = FeeSchedule(
            entrance_base=args.entrance_base if args.entrance_base is not None else defaults.entrance_base,
            service_base=args.service_base if args.service_base is not None else defaults.service_base,
            max_block_worth=args.max_block_worth if args.max_block_worth is not None else defaults.max_block_worth,
            upload_base=args.upload_base if args.upload_base is not None else defaults.upload_base,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    out = []
    heights = _parse_float_list(args.heights, "--heights")
    out.append("height,entrance_fee")
    for h in heights:
        out.append(f"{int(h)},{entrance_fee(int(h), sched)!r}")
    worths = _parse_float_list(args.worths, "--worths") if args.worths else []
    if worths:
        out.append("")
        out.append("worth,base_fee")
        for w in worths:
            out.append(f"{w!r},{base_service_fee(w, sched)!r}")
    psis = _parse_float_list(args.psis, "--psis") if args.psis else []
    if worths and psis:
        out.append("")
        out.append("worth,psi,upload_fee")
        for w in worths:
            for p in psis:
                out.append(f"{w!r},{p!r},{upload_fee(w, p, sched)!r}")
    print("\n".join(out))
    return 0


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    level = os.environ.get("RPOA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))

    if not argv or argv[0] in ("-h", "--help"):
        print(USAGE)
        return 0
    command, rest = argv[0], argv[1:]
    if command not in COMMANDS:
        sys.stderr.write(f"unknown command {command!r}\n\n{USAGE}")
        return 64
    if "--quiet" in rest:
        logging.getLogger("rpoa").setLevel(logging.ERROR)

    try:
        if command == "fees-table":
            return _fees_table_command(rest)
        return _run_sim_command(command, rest)
    except ScenarioError as exc:
        sys.stderr.write(f"scenario error: {exc}\n")
        return 1
    except (ValueError, RuntimeError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def entrypoint() -> None:
    raise SystemExit(main())
