"""Command-line surface: batch solving, policy export, simulation, verification.

Configs are flat TOML (key = value, arrays bracketed; see configs/*.toml).
Arrival probabilities come either as an explicit `arrival = [p0, p1, ...]`
list or as the uniform shorthand `p0 = 0.5` (+ optional `arrival =
"uniform"`), meaning p_i = (1 - p0)/N for deadlines 1..N.

All outputs are CSV with '.' decimals, LF line endings, 12-significant-digit
costs; identical config + seed produces byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import dp, oracle, policy, sim, statespace
from .model import ModelParams, State

MAX_MAP_ROWS = 200_000


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    T: int
    initial_state: State
    episodes: int
    seed: int
    output_dir: Optional[str]


def _fmt(x: float) -> str:
    return format(x, ".12g")


def _require(data: dict, key: str, kind, where: str):
    if key not in data:
        raise ConfigError(f"{where}: missing required key '{key}'")
    value = data[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{where}: key '{key}' must be {kind.__name__}, got {type(value).__name__}")
    return value


def load_config(path: str) -> RunConfig:
    where = str(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{where}: no such file")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{where}: malformed TOML: {exc}")

    n = _require(data, "N", int, where)
    if n < 1:
        raise ConfigError(f"{where}: key 'N' must be a positive integer, got {n}")
    p_u = _require(data, "p_u", float, where)
    mu = _require(data, "mu", float, where)
    c_o = _require(data, "C_o", float, where)
    c_p = _require(data, "C_p", float, where)

    arrival = data.get("arrival", "uniform")
    if isinstance(arrival, str):
        if arrival != "uniform":
            raise ConfigError(f"{where}: key 'arrival' must be a list or the string 'uniform'")
        p0 = _require(data, "p0", float, where)
        if not 0.0 <= p0 <= 1.0:
            raise ConfigError(f"{where}: key 'p0' must lie in [0, 1], got {p0}")
        probs = (p0,) + ((1.0 - p0) / n,) * n
    elif isinstance(arrival, list):
        if len(arrival) != n + 1:
            raise ConfigError(f"{where}: key 'arrival' must have N+1={n + 1} entries, got {len(arrival)}")
        try:
            probs = tuple(float(p) for p in arrival)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: key 'arrival' entries must be numbers")
        total = sum(probs)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"{where}: arrival probabilities must sum to 1 within 1e-9, got {total!r}")
        probs = tuple(p / total for p in probs)  # normalize the rounding residue
    else:
        raise ConfigError(f"{where}: key 'arrival' must be a list or the string 'uniform'")

    try:
        params = ModelParams(N=n, p_u=p_u, mu=mu, C_o=c_o, C_p=c_p, arrival=probs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}")

    horizon = _require(data, "T", int, where)
    if horizon < 1:
        raise ConfigError(f"{where}: key 'T' must be >= 1, got {horizon}")
    state_raw = _require(data, "initial_state", list, where)
    if len(state_raw) != n or any(not isinstance(c, int) or c < 0 for c in state_raw):
        raise ConfigError(
            f"{where}: key 'initial_state' must be {n} non-negative integers, got {state_raw}"
        )
    episodes = data.get("episodes", 1000)
    if not isinstance(episodes, int):
        raise ConfigError(f"{where}: key 'episodes' must be an integer")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"{where}: key 'seed' must be an unsigned 64-bit integer")
    output_dir = data.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError(f"{where}: key 'output_dir' must be a string")
    return RunConfig(params, horizon, tuple(state_raw), episodes, seed, output_dir)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    horizon = args.horizon if getattr(args, "horizon", None) else cfg.T
    episodes = args.episodes if getattr(args, "episodes", None) is not None else cfg.episodes
    seed = args.seed if getattr(args, "seed", None) is not None else cfg.seed
    return RunConfig(cfg.params, horizon, cfg.initial_state, episodes, seed, cfg.output_dir)


def _out_dir(cfg: RunConfig, args) -> Path:
    out = getattr(args, "out", None) or cfg.output_dir or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _state_label(s: State) -> str:
    return "-".join(str(c) for c in s)


# -- commands ----------------------------------------------------------------


def cmd_solve(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(cfg, args)
    table = dp.build_table(cfg.params, cfg.T, [cfg.initial_state], count_naive=False)
    total = dp.value(cfg.initial_state, cfg.T, table)
    outcome = policy.optimal_decision(cfg.initial_state, cfg.T, table)
    print(f"state {cfg.initial_state} horizon {cfg.T}")
    print(f"expected total cost   {_fmt(total)}")
    print(f"expected average cost {_fmt(total / cfg.T)}")
    print(f"optimal offload count {outcome.total} "
          f"(excessive {outcome.from_reduction} + reduced-state {outcome.from_dp})")
    _write_csv(out / "solve.csv",
               ["total_cost", "average_cost", "L_star", "L_g", "L_r"],
               [[_fmt(total), _fmt(total / cfg.T), outcome.total,
                 outcome.from_reduction, outcome.from_dp]])
    return 0


def _parse_slices(slice_args: List[str], n: int) -> Dict[int, int]:
    fixed: Dict[int, int] = {}
    for item in slice_args or ():
        try:
            key, value = item.split("=", 1)
            axis = int(key.lstrip("n").lstrip("_"))
            fixed[axis] = int(value)
        except ValueError:
            raise ConfigError(f"bad --slice '{item}': expected e.g. n3=1")
        if not 1 <= axis <= n:
            raise ConfigError(f"bad --slice '{item}': axis must lie in 1..{n}")
        if fixed[axis] < 0:
            raise ConfigError(f"bad --slice '{item}': value must be >= 0")
    return fixed


def cmd_policy_map(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(cfg, args)
    n = cfg.params.N
    fixed = _parse_slices(args.slice, n)
    box = args.box_max
    free_axes = [i for i in range(1, n + 1) if i not in fixed]
    rows_expected = (box + 1) ** len(free_axes)
    if rows_expected > MAX_MAP_ROWS:
        print(f"error: enumeration box holds {rows_expected} states "
              f"(budget {MAX_MAP_ROWS}); fix more axes with --slice", file=sys.stderr)
        return 2

    states: List[State] = []

    def build(prefix: List[int], axis: int):
        if axis > n:
            states.append(tuple(prefix))
            return
        values = [fixed[axis]] if axis in fixed else range(box + 1)
        for v in values:
            prefix.append(v)
            build(prefix, axis + 1)
            prefix.pop()

    build([], 1)
    cache = policy.build_policy_cache(cfg.params, cfg.T, seeds=states)
    rows = []
    for s in states:
        outcome = cache.decision(s, cfg.T)
        rows.append(list(s) + [cfg.T, outcome.total, int(outcome.classified_offloading)])
    header = [f"n_{i}" for i in range(1, n + 1)] + ["T", "L_star", "offloading_flag"]
    _write_csv(out / "policy_map.csv", header, rows)
    print(f"policy_map.csv: {len(rows)} states, "
          f"{sum(1 for r in rows if not r[-1])} non-offloading")
    return 0


def cmd_adjacent_scan(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(cfg, args)
    try:
        chain = [tuple(int(c) for c in part.split(",")) for part in args.chain.split(";")]
    except ValueError:
        raise ConfigError(f"bad --chain '{args.chain}': expected e.g. 0,0,1;0,1,1")
    for s in chain:
        if len(s) != cfg.params.N or any(c < 0 for c in s):
            raise ConfigError(f"bad chain state {s}: need {cfg.params.N} non-negative counts")
    for a, b in zip(chain, chain[1:]):
        if not policy.adjacency(a, b):
            print(f"error: chain states {a} and {b} are not adjacent", file=sys.stderr)
            return 2
    table = dp.build_table(cfg.params, cfg.T, chain, count_naive=False)
    rows = []
    for idx, s in enumerate(chain, start=1):
        curve = dp.forced_values(s, cfg.T, table)
        best = curve.argmin
        for L in sorted(curve.by_L):
            rows.append([idx, _state_label(s), L, _fmt(curve.by_L[L]), int(L == best)])
    _write_csv(out / "adjacent_scan.csv",
               ["state_index", "state", "L", "forced_cost", "is_argmin"], rows)
    print(f"adjacent_scan.csv: {len(chain)} states, argmins "
          f"{[dp.forced_values(s, cfg.T, table).argmin for s in chain]}")
    return 0


def cmd_memory_report(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(cfg, args)
    t_max = cfg.T
    rows = []
    for t in range(1, t_max + 1):
        table = dp.build_table(cfg.params, t, [cfg.initial_state], count_naive=True)
        rows.append([t, table.stats.naive_entries, table.stats.lean_entries])
    _write_csv(out / "memory.csv", ["T", "naive_entries", "lean_entries"], rows)
    print(f"memory.csv: swept T=1..{t_max}; final row naive={rows[-1][1]} lean={rows[-1][2]}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(cfg, args)
    if cfg.episodes < 1:
        print(f"error: episodes must be >= 1, got {cfg.episodes}", file=sys.stderr)
        return 2
    cache = policy.build_policy_cache(cfg.params, cfg.T, seeds=[cfg.initial_state])
    handle = sim.PolicyHandle.optimal(cache)
    results = [sim.run_episode(cfg.params, cfg.initial_state, cfg.T, handle,
                               cfg.seed, episode=i)
               for i in range(cfg.episodes)]
    _write_csv(out / "episodes.csv",
               ["episode", "total_cost", "offloaded", "expired", "processed"],
               [[i, _fmt(r.total_cost), r.offloaded, r.expired, r.processed]
                for i, r in enumerate(results)])
    estimate = sim.estimate_cost(cfg.params, cfg.initial_state, cfg.T, handle,
                                 cfg.episodes, cfg.seed)
    dp_total = dp.value(cfg.initial_state, cfg.T, cache.table)
    _write_csv(out / "summary.csv",
               ["episodes", "mean_total_cost", "stderr", "ci95_low", "ci95_high",
                "mean_average_cost", "dp_total_cost", "dp_average_cost"],
               [[cfg.episodes, _fmt(estimate.mean), _fmt(estimate.stderr),
                 _fmt(estimate.ci_low), _fmt(estimate.ci_high),
                 _fmt(estimate.mean / cfg.T), _fmt(dp_total), _fmt(dp_total / cfg.T)]])
    print(f"episodes.csv: {cfg.episodes} episodes; mean {_fmt(estimate.mean)} "
          f"(dp {_fmt(dp_total)})")
    return 0


def cmd_verify(args) -> int:
    names = args.property or list(oracle.PROPERTY_NAMES)
    for name in names:
        if name not in oracle.PROPERTY_NAMES:
            print(f"error: unknown property '{name}'; known: "
                  f"{', '.join(oracle.PROPERTY_NAMES)}", file=sys.stderr)
            return 2
    bounds = oracle.VerifyBounds(max_sum=args.max_sum, max_n=args.max_n,
                                 max_t=args.max_t, samples=args.samples)
    if args.config:
        params = load_config(args.config).params
    else:
        params = ModelParams.uniform_arrivals(N=bounds.max_n, p_u=0.5, mu=0.5,
                                              C_o=1.0, C_p=3.0, p0=0.5)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)

    real_g2m = statespace.g2m_cost
    if args.corrupt_g2m:  # negative-control hook for the test suite
        statespace.g2m_cost = lambda s, lf, p: real_g2m(s, lf, p) + 0.125
    try:
        rows = []
        failed = False
        for name in sorted(names):
            report = oracle.verify(name, bounds, params)
            status = "pass" if report.passed else "FAIL"
            failed = failed or not report.passed
            rows.append([name, report.instances, len(report.violations), status])
            print(f"{name:<16} {status}  ({report.instances} instances, "
                  f"{len(report.violations)} violations)")
    finally:
        statespace.g2m_cost = real_g2m
    _write_csv(out / "verify.csv", ["property", "instances", "violations", "status"], rows)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deadline-offload",
        description="Finite-horizon solver, policy extractor and simulator "
                    "for firm-deadline task offloading.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="TOML config file")
        p.add_argument("--out", help="output directory (default: config output_dir or .)")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--episodes", type=int, help="override config episodes")
        p.add_argument("--horizon", type=int, help="override config horizon T")

    p = sub.add_parser("solve", help="exact value and optimal decision for the initial state")
    add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("policy-map", help="decision map over an enumeration box")
    add_common(p)
    p.add_argument("--slice", action="append", metavar="nK=V",
                   help="fix axis K at value V (repeatable)")
    p.add_argument("--box-max", type=int, default=5,
                   help="free axes enumerate 0..BOX_MAX (default 5)")
    p.set_defaults(func=cmd_policy_map)

    p = sub.add_parser("adjacent-scan", help="forced-offload cost curves along an adjacency chain")
    add_common(p)
    p.add_argument("--chain", required=True,
                   help="semicolon-separated states, e.g. '0,0,1;0,1,1'")
    p.set_defaults(func=cmd_adjacent_scan)

    p = sub.add_parser("memory-report", help="stored-entry counts, naive vs compressed")
    add_common(p)
    p.set_defaults(func=cmd_memory_report)

    p = sub.add_parser("simulate", help="Monte Carlo episodes under the optimal policy")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="exhaustive structural-property checks")
    p.add_argument("--config", help="TOML config (parameters only; optional)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--property", action="append",
                   help=f"property to check (repeatable; default all): "
                        f"{', '.join(oracle.PROPERTY_NAMES)}")
    p.add_argument("--max-sum", type=int, default=4)
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--max-t", type=int, default=6)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--corrupt-g2m", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
