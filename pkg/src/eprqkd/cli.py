"""Command-line front end: run | verify | sweep.

Scenario files are a flat key = value format with [attack], [noise],
[sifting] and [key] sections; unknown keys are hard errors naming the key
and line. Angles accept plain radians or pi fractions like ``pi/4``.
Results go to CSV (RFC-4180 quoting) or JSON lines; identical inputs
produce byte-identical output files.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from dataclasses import replace
from pathlib import Path

from .attacks import AttackStrategy
from .channels import PauliChannel
from .harness import Scenario, SweepRow, run_scenario, sweep
from .protocol import SiftingPolicy
from .verify import render_claims, run_verify

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ABORT = 2


class ConfigError(ValueError):
    pass


def parse_angle(text: str) -> float:
    """Radians, or a pi fraction token: 'pi', 'pi/4', '3pi/8', '-pi/2', '0.5pi'."""
    token = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"(-?)(\d+(?:\.\d+)?)?pi(?:/(\d+(?:\.\d+)?))?", token)
    if m:
        sign = -1.0 if m.group(1) else 1.0
        coeff = float(m.group(2)) if m.group(2) else 1.0
        denom = float(m.group(3)) if m.group(3) else 1.0
        return sign * coeff * math.pi / denom
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}") from None


_TOP_KEYS = ("theta", "rounds", "seed", "repetition_n", "bit_source")
_SECTION_KEYS = {
    "attack": ("kind", "resend", "probe_init", "entangle_rounds", "unitary_seed"),
    "noise": ("p1", "p2", "p3"),
    "sifting": ("fraction", "threshold"),
    "key": ("epsilon", "contaminant_seed"),
}


def _parse_bit_source(text: str, line_no: int):
    if text == "random":
        return "random"
    if text.startswith("fixed:"):
        bits = text[len("fixed:"):]
        if bits and set(bits) <= {"0", "1"}:
            return tuple(int(b) for b in bits)
    raise ConfigError(f"line {line_no}: bit_source must be 'random' or 'fixed:<bits>', got {text!r}")


def parse_scenario_text(text: str) -> Scenario:
    """Parse the scenario grammar; defaults apply only to absent keys."""
    section = None
    seen: set[tuple[str | None, str]] = set()
    values: dict[str | None, dict[str, str]] = {None: {}, **{s: {} for s in _SECTION_KEYS}}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTION_KEYS:
                raise ConfigError(f"line {line_no}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        allowed = _TOP_KEYS if section is None else _SECTION_KEYS[section]
        if key not in allowed:
            where = f"section [{section}]" if section else "the top level"
            raise ConfigError(f"line {line_no}: unknown key {key!r} in {where}")
        if (section, key) in seen:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        seen.add((section, key))
        values[section][key] = value
        values[section][key + "#line"] = str(line_no)

    def take(section_name, key, convert, default):
        sect = values[section_name]
        if key not in sect:
            return default
        line_no = int(sect[key + "#line"])
        try:
            return convert(sect[key], line_no)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"line {line_no}: bad value for {key!r}: {exc}") from None

    as_int = lambda v, _ln: int(v)
    as_float = lambda v, _ln: float(v)
    as_str = lambda v, _ln: v
    as_angle = lambda v, _ln: parse_angle(v)

    defaults = Scenario()
    try:
        attack = AttackStrategy(
            kind=take("attack", "kind", as_str, "none"),
            resend=take("attack", "resend", as_str, "random"),
            probe_init=take("attack", "probe_init", as_int, 0),
            entangle_rounds=take("attack", "entangle_rounds", as_str, "every"),
            unitary_seed=take("attack", "unitary_seed", as_int, None),
        )
        noise = PauliChannel(
            p1=take("noise", "p1", as_float, 0.0),
            p2=take("noise", "p2", as_float, 0.0),
            p3=take("noise", "p3", as_float, 0.0),
        )
        sifting = SiftingPolicy(
            disclose_fraction=take("sifting", "fraction", as_float, defaults.sifting.disclose_fraction),
            qber_abort_threshold=take("sifting", "threshold", as_float, defaults.sifting.qber_abort_threshold),
        )
        return Scenario(
            theta=take(None, "theta", as_angle, defaults.theta),
            rounds=take(None, "rounds", as_int, defaults.rounds),
            seed=take(None, "seed", as_int, defaults.seed),
            repetition_n=take(None, "repetition_n", as_int, defaults.repetition_n),
            bit_source=take(None, "bit_source", _parse_bit_source, "random"),
            attack=attack,
            noise=noise,
            sifting=sifting,
            key_epsilon=take("key", "epsilon", as_float, 0.0),
            contaminant_seed=take("key", "contaminant_seed", as_int, 0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_scenario_file(path: str) -> Scenario:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"scenario file not found: {path}")
    return parse_scenario_text(p.read_text())


PRESETS: dict[str, Scenario] = {
    "no-attack": Scenario(rounds=1000, seed=101),
    "intercept-resend": Scenario(
        attack=AttackStrategy(kind="intercept_resend"), rounds=10_000, seed=103
    ),
    "entangle": Scenario(
        attack=AttackStrategy(kind="entangle_cnot"), rounds=10_000, seed=104
    ),
    "entangle-no-rotation": Scenario(
        theta=0.0, attack=AttackStrategy(kind="entangle_cnot"), rounds=2000, seed=105
    ),
    "general-unitary": Scenario(
        attack=AttackStrategy(kind="general_unitary", unitary_seed=77),
        rounds=10_000,
        seed=106,
    ),
    "pauli-noise": Scenario(noise=PauliChannel(0.1, 0.0, 0.0), rounds=10_000, seed=107),
    "repetition": Scenario(
        repetition_n=3, noise=PauliChannel(0.1, 0.0, 0.0), rounds=30_000, seed=108
    ),
    "degraded-key": Scenario(key_epsilon=0.04, rounds=2000, seed=109),
}


# ---------------------------------------------------------------------------
# output writers

RUN_FIELDS = [
    "schema_version", "qber", "qber_ci_low", "qber_ci_high", "key_fidelity_final",
    "eve_accuracy", "eve_accuracy_ci_low", "eve_accuracy_ci_high",
    "eve_mutual_info_bits", "verdict", "rounds_executed", "logical_qber",
]

SWEEP_FIELDS = [
    "schema_version", "parameter", "parameter_value", "mc_qber",
    "ci_low", "ci_high", "exact_qber", "oracle_qber",
]


def stats_record(stats) -> dict:
    return {
        "schema_version": 1,
        "qber": stats.qber,
        "qber_ci_low": stats.qber_ci[0],
        "qber_ci_high": stats.qber_ci[1],
        "key_fidelity_final": stats.key_fidelity_final,
        "eve_accuracy": stats.eve_accuracy,
        "eve_accuracy_ci_low": None if stats.eve_accuracy_ci is None else stats.eve_accuracy_ci[0],
        "eve_accuracy_ci_high": None if stats.eve_accuracy_ci is None else stats.eve_accuracy_ci[1],
        "eve_mutual_info_bits": stats.eve_mutual_info_bits,
        "verdict": stats.verdict,
        "rounds_executed": stats.rounds_executed,
        "logical_qber": stats.logical_qber,
    }


def sweep_record(row: SweepRow) -> dict:
    return {
        "schema_version": 1,
        "parameter": row.parameter,
        "parameter_value": row.value,
        "mc_qber": row.mc_qber,
        "ci_low": row.ci_low,
        "ci_high": row.ci_high,
        "exact_qber": row.exact_qber,
        "oracle_qber": row.oracle_qber,
    }


def write_records(records, fields, path: str, fmt: str) -> None:
    fmt = "jsonl" if fmt in ("jsonl", "json-lines") else fmt
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"unknown output format {fmt!r}")
    with open(path, "w", newline="") as handle:
        if fmt == "csv":
            writer = csv.DictWriter(handle, fieldnames=fields)
            writer.writeheader()
            for rec in records:
                writer.writerow({k: ("" if rec[k] is None else rec[k]) for k in fields})
        else:
            for rec in records:
                handle.write(json.dumps(rec) + "\n")


# ---------------------------------------------------------------------------
# subcommands

def _load_scenario(args) -> Scenario:
    if args.preset is not None and args.scenario is not None:
        raise ConfigError("give either --scenario or --preset, not both")
    if args.preset is not None:
        if args.preset not in PRESETS:
            names = ", ".join(sorted(PRESETS))
            raise ConfigError(f"unknown preset {args.preset!r}; available: {names}")
        scenario = PRESETS[args.preset]
    elif args.scenario is not None:
        scenario = parse_scenario_file(args.scenario)
    else:
        raise ConfigError("a scenario is required: --scenario FILE or --preset NAME")
    if getattr(args, "seed", None) is not None:
        scenario = replace(scenario, seed=args.seed)
    if getattr(args, "rounds", None) is not None:
        scenario = replace(scenario, rounds=args.rounds)
    return scenario


def _cmd_run(args) -> int:
    scenario = _load_scenario(args)
    stats = run_scenario(scenario)
    record = stats_record(stats)
    if args.out:
        write_records([record], RUN_FIELDS, args.out, args.format)
    print(f"verdict: {stats.verdict}")
    print(f"qber: {stats.qber} (95% CI {stats.qber_ci[0]}..{stats.qber_ci[1]})")
    print(f"key fidelity: {stats.key_fidelity_final}")
    if stats.eve_accuracy is not None:
        print(f"eve accuracy: {stats.eve_accuracy}")
        print(f"eve mutual information (bits): {stats.eve_mutual_info_bits}")
    if stats.logical_qber is not None:
        print(f"logical qber: {stats.logical_qber}")
    return EXIT_ABORT if stats.verdict == "abort" else EXIT_OK


def _cmd_sweep(args) -> int:
    if args.steps < 2:
        raise ConfigError("sweep needs at least 2 steps")
    if args.scenario is not None or args.preset is not None:
        base = _load_scenario(args)
    else:
        base = Scenario(rounds=args.rounds or 2000, seed=args.seed or 0)
    start = parse_angle(args.start) if args.parameter == "theta" else float(args.start)
    stop = parse_angle(args.stop) if args.parameter == "theta" else float(args.stop)
    grid = [start + (stop - start) * i / (args.steps - 1) for i in range(args.steps)]
    rows = sweep(args.parameter, grid, base)
    records = [sweep_record(r) for r in rows]
    if args.out:
        write_records(records, SWEEP_FIELDS, args.out, args.format)
    for rec in records:
        oracle = "" if rec["oracle_qber"] is None else f" oracle={rec['oracle_qber']:.6f}"
        print(
            f"{rec['parameter']}={rec['parameter_value']:.6f} "
            f"mc={rec['mc_qber']:.6f} exact={rec['exact_qber']:.6f}{oracle}"
        )
    return EXIT_OK


def _cmd_verify(args) -> int:
    results, elapsed = run_verify()
    text = render_claims(results)
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text)
    print(f"elapsed: {elapsed:.1f}s", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in results) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprqkd",
        description="Simulate an entanglement-keyed QKD protocol under attacks and noise.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and report its statistics")
    run_p.add_argument("--scenario", help="scenario file path")
    run_p.add_argument("--preset", help="named built-in scenario")
    run_p.add_argument("--out", help="output file")
    run_p.add_argument("--format", default="csv", choices=["csv", "jsonl", "json-lines"])
    run_p.add_argument("--seed", type=int, help="override the scenario seed")
    run_p.add_argument("--rounds", type=int, help="override the round count")
    run_p.set_defaults(func=_cmd_run)

    verify_p = sub.add_parser("verify", help="reproduce every headline claim with fixed seeds")
    verify_p.add_argument("--out", help="write the claim table to this file")
    verify_p.set_defaults(func=_cmd_verify)

    sweep_p = sub.add_parser("sweep", help="sweep one parameter over a grid")
    sweep_p.add_argument("--parameter", required=True,
                         choices=["theta", "p1", "p2", "p3", "epsilon"])
    sweep_p.add_argument("--from", dest="start", required=True,
                         help="grid start (angles accept pi fractions)")
    sweep_p.add_argument("--to", dest="stop", required=True, help="grid end")
    sweep_p.add_argument("--steps", type=int, required=True, help="grid size (>= 2)")
    sweep_p.add_argument("--scenario", help="base scenario file")
    sweep_p.add_argument("--preset", help="named built-in base scenario")
    sweep_p.add_argument("--out", help="output file")
    sweep_p.add_argument("--format", default="csv", choices=["csv", "jsonl", "json-lines"])
    sweep_p.add_argument("--seed", type=int, help="override the scenario seed")
    sweep_p.add_argument("--rounds", type=int, help="override the round count")
    sweep_p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
