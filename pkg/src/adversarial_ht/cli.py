"""Command-line front end.

Every subcommand reads a JSON configuration file, validates it against the
schema for that subcommand, resolves defaults, and writes a report that
embeds the resolved configuration, so feeding the embedded configuration
back in reproduces the report.  Host and timing information is kept in a
separate ``meta`` object.

Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
3 numerical non-convergence, 4 enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from .core import EmpiricalType, as_pmf
from .exceptions import ConvergenceError, EnumerationTooLargeError
from .schema import COMMANDS, CONFIG_VERSION, config_schema

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_CAP = 0, 1, 2, 3, 4


class ConfigError(Exception):
    def __init__(self, path, message):
        self.path, self.message = path, message
        super().__init__(f"{path}: {message}")


def _package_version():
    try:
        from importlib.metadata import version

        return version("adversarial-ht")
    except Exception:
        return "unknown"


def _meta(threads):
    return {
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "host": platform.node(),
        "python": platform.python_version(),
        "package_version": _package_version(),
        "threads": threads,
    }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# config resolution


def _check(path, fn, *args, **kwargs):
    """Run a constructor and report its ValueError against a config path."""
    try:
        return fn(*args, **kwargs)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _pmf(raw, key, size=None):
    return _check(f"$.{key}", as_pmf, raw[key], size=size, name=key).tolist()


def _distortion(raw, k):
    from .transport import DistortionSpec

    d = raw["distortion"]
    cost = d.get("cost")
    if cost is None:
        cost = (1.0 - np.eye(k)).tolist()
    elif len(cost) != k or any(len(row) != k for row in cost):
        raise ConfigError("$.distortion.cost", f"cost matrix must be {k}x{k} to match the alphabet")
    spec = _check("$.distortion", DistortionSpec, cost, d["budget"])
    return {"budget": spec.budget, "cost": spec.cost.tolist()}


def _integral(path, ratio, n):
    value = ratio * n
    if abs(value - round(value)) > 1e-9 or round(value) < 1:
        raise ConfigError(path, f"{ratio} * n = {value} is not a positive integer training length")


def _game_config(resolved, k, n=None):
    from .strategies import GameConfig
    from .transport import DistortionSpec

    dist = DistortionSpec(resolved["distortion"]["cost"], resolved["distortion"]["budget"])
    mode = resolved["threshold_mode"].replace("-", "_")
    return GameConfig(
        k, resolved["n"] if n is None else n, resolved["lam"], dist,
        c=resolved["c"], d_ratio=resolved["d_ratio"], threshold_mode=mode,
    )


def _resolve_common(command, raw, args):
    if raw.get("command", command) != command:
        raise ConfigError("$.command", f"config is for '{raw['command']}', not '{command}'")
    seed = args.seed if args.seed is not None else raw.get("seed")
    if seed is None:
        raise ConfigError("$.seed", "a seed is required, either in the config or via --seed")
    if not 0 <= seed < 2**64:
        raise ConfigError("$.seed", "seed must be an unsigned 64-bit integer")
    mode = args.threshold_mode or raw.get("threshold_mode", "finite-n")
    return {"version": CONFIG_VERSION, "command": command, "seed": int(seed), "threshold_mode": mode}


def _resolve_game_fields(raw, out, with_n=True):
    out["lam"] = float(raw["lam"])
    out["c"] = float(raw.get("c", 1.0))
    out["d_ratio"] = float(raw.get("d_ratio", out["c"]))
    if with_n:
        out["n"] = int(raw["n"])
        _integral("$.c", out["c"], out["n"])
        _integral("$.d_ratio", out["d_ratio"], out["n"])


def resolve(command, raw, args):
    """Validate ``raw`` and return the fully resolved configuration dict."""
    validator = jsonschema.Draft202012Validator(config_schema(command))
    errors = sorted(validator.iter_errors(raw), key=lambda e: (e.json_path, e.message))
    if errors:
        raise ConfigError(errors[0].json_path, "; ".join(f"{e.json_path}: {e.message}" for e in errors))
    out = _resolve_common(command, raw, args)

    if command in ("simulate", "exact-pfn"):
        _resolve_game_fields(raw, out)
        out["P_X"] = _pmf(raw, "P_X")
        k = len(out["P_X"])
        out["P_Y"] = _pmf(raw, "P_Y", k)
        out["distortion"] = _distortion(raw, k)
        out["game"] = raw.get("game", "tr")
        out["game_version"] = raw.get("game_version", "c")
        if out["game"] == "ks" and out["game_version"] == "a":
            raise ConfigError("$.game_version", "version a only exists for the training game")
        if command == "simulate":
            out["trials"] = int(raw["trials"])
            out["force_shared_training"] = bool(raw.get("force_shared_training", False))
            sched = [int(v) for v in raw.get("n_schedule", [])]
            if any(b <= a for a, b in zip(sched, sched[1:])):
                raise ConfigError("$.n_schedule", "must be strictly increasing")
            if sched and len(sched) < 4:
                raise ConfigError("$.n_schedule", "needs at least 4 points when given")
            for i, n in enumerate(sched):
                _integral(f"$.n_schedule[{i}]", out["c"], n)
            out["n_schedule"] = sched
        elif out["game_version"] == "a" and k != 2:
            raise ConfigError("$.game_version", "exact version-a probabilities need a binary alphabet")

    elif command == "regions":
        out["Q"] = _pmf(raw, "Q")
        k = len(out["Q"])
        if k not in (2, 3):
            raise ConfigError("$.Q", "region grids support alphabets of size 2 or 3")
        out["lam"] = float(raw["lam"])
        out["c"] = float(raw.get("c", 1.0))
        out["distortion"] = _distortion(raw, k)
        out["resolution"] = int(raw["resolution"])

    elif command == "exponents":
        _resolve_game_fields(raw, out, with_n=False)
        out["P_X"] = _pmf(raw, "P_X")
        k = len(out["P_X"])
        out["P_Y"] = _pmf(raw, "P_Y", k)
        out["distortion"] = _distortion(raw, k)
        out["quantities"] = list(raw.get("quantities", ["ks", "tr", "tr_a"]))

    elif command == "attack":
        out["game"] = raw.get("game", "tr")
        out["game_version"] = raw.get("game_version", "c")
        if "distortion" in raw and "cost" in raw["distortion"]:
            k = len(raw["distortion"]["cost"])
        elif "P_X" in raw:
            k = len(raw["P_X"])
        else:
            seqs = [raw[key] for key in ("y", "t", "t_A") if key in raw]
            k = raw.get("alphabet_size", max(2, 1 + max(max(s) for s in seqs)))
        if raw.get("alphabet_size", k) != k:
            raise ConfigError("$.alphabet_size", f"does not match the inferred alphabet size {k}")
        out["alphabet_size"] = int(k)
        out["lam"] = float(raw["lam"])
        out["distortion"] = _distortion(raw, k)
        out["y"] = list(raw["y"])
        for key in ("y", "t", "t_A"):
            if key in raw and max(raw[key]) >= k:
                raise ConfigError(f"$.{key}", f"symbols must lie in 0..{k - 1}")
        if out["game"] == "ks":
            if "P_X" not in raw:
                raise ConfigError("$.P_X", "the known-source attack needs P_X")
            out["P_X"] = _pmf(raw, "P_X", k)
            if out["game_version"] == "a":
                raise ConfigError("$.game_version", "version a only exists for the training game")
        else:
            if "t" not in raw:
                raise ConfigError("$.t", "the training-game attack needs the defender's training sequence t")
            out["t"] = list(raw["t"])
            n = len(out["y"])
            if out["game_version"] == "a":
                if "t_A" not in raw:
                    raise ConfigError("$.t_A", "version a needs the attacker's training sequence t_A")
                out["t_A"] = list(raw["t_A"])
        out["brute_force"] = bool(raw.get("brute_force", False))
        if out["brute_force"] and (out["game"] != "tr" or out["game_version"] != "c"):
            raise ConfigError("$.brute_force", "brute force is only available for the version-c training game")
    return out


# ---------------------------------------------------------------------------
# commands


def _run_simulate(cfg, threads, args):
    from .montecarlo import SimulationSpec, simulate_game

    k = len(cfg["P_X"])
    spec = SimulationSpec(
        _game_config(cfg, k), cfg["P_X"], cfg["P_Y"], cfg["trials"], cfg["seed"],
        cfg["game_version"], tuple(cfg["n_schedule"]), cfg["game"], cfg["force_shared_training"],
    )
    return simulate_game(spec, n_jobs=threads, trace_path=args.trace).to_dict()


def _run_exact_pfn(cfg, threads, args):
    from .montecarlo import exact_log2_pfn, exact_pfn_version_a

    g = _game_config(cfg, len(cfg["P_X"]))
    if cfg["game_version"] == "a":
        p = exact_pfn_version_a(g, cfg["P_X"], cfg["P_Y"])
        log2p = math.log2(p) if p > 0 else -math.inf
    else:
        log2p = exact_log2_pfn(g, cfg["P_X"], cfg["P_Y"], cfg["game"], n_jobs=threads)
        p = 2.0 ** log2p
    return {"p_fn": p, "log2_p_fn": log2p}


def _run_exponents(cfg, threads, args):
    from .exponents import epsilon_ks, epsilon_tr, epsilon_tr_a_bounds
    from .transport import DistortionSpec

    dist = DistortionSpec(cfg["distortion"]["cost"], cfg["distortion"]["budget"])
    common = (cfg["P_X"], cfg["P_Y"], cfg["lam"], dist)
    out = {}
    if "ks" in cfg["quantities"]:
        out["ks"] = epsilon_ks(*common).to_dict()
    if "tr" in cfg["quantities"]:
        out["tr"] = epsilon_tr(*common, c=cfg["c"]).to_dict()
    if "tr_a" in cfg["quantities"]:
        out["tr_a"] = epsilon_tr_a_bounds(*common, c=cfg["c"], d_ratio=cfg["d_ratio"]).to_dict()
    return out


def _run_attack(cfg, threads, args):
    from .strategies import (
        GameConfig,
        attack_version_a,
        brute_force_attack,
        defender_decide_ks,
        defender_decide_tr,
        optimal_attack_ks,
        optimal_attack_tr,
    )
    from .transport import DistortionSpec

    k = cfg["alphabet_size"]
    y_seq = np.asarray(cfg["y"], dtype=np.int64)
    n = len(y_seq)
    y = EmpiricalType.from_sequence(y_seq, k)
    dist = DistortionSpec(cfg["distortion"]["cost"], cfg["distortion"]["budget"])
    mode = cfg["threshold_mode"].replace("-", "_")
    if cfg["game"] == "ks":
        g = GameConfig(k, n, cfg["lam"], dist, threshold_mode=mode)
        res = optimal_attack_ks(y, cfg["P_X"], g)
        verdict = defender_decide_ks(res.z_type, cfg["P_X"], g)
    else:
        t = EmpiricalType.from_sequence(cfg["t"], k)
        d_ratio = len(cfg["t_A"]) / n if cfg["game_version"] == "a" else None
        try:
            g = GameConfig(k, n, cfg["lam"], dist, c=t.n / n, d_ratio=d_ratio, threshold_mode=mode)
        except ValueError as exc:
            raise ConfigError("$.t", str(exc)) from None
        if cfg["game_version"] == "a":
            res = attack_version_a(y, EmpiricalType.from_sequence(cfg["t_A"], k), g)
        elif cfg["brute_force"]:
            res = brute_force_attack(y_seq, t, g, n_jobs=threads)
        else:
            res = optimal_attack_tr(y, t, g)
        verdict = defender_decide_tr(res.z_type, t, g)
    out = res.to_dict()
    if res.z_sequence is None:
        out["z_sequence"] = res.plan.apply(y_seq).tolist()
    out["defender_decision"] = verdict.decision
    out["defender_statistic"] = verdict.statistic
    out["threshold"] = verdict.threshold
    out["succeeded"] = verdict.accepted
    return out


def _run_regions(cfg, threads, args):
    from .regions import RegionQuery, region_grid
    from .transport import DistortionSpec

    dist = DistortionSpec(cfg["distortion"]["cost"], cfg["distortion"]["budget"])
    query = RegionQuery(np.asarray(cfg["Q"]), cfg["lam"], dist, cfg["c"], "tr")
    return region_grid(query, cfg["resolution"], n_jobs=threads)


RUNNERS = {
    "simulate": _run_simulate,
    "regions": _run_regions,
    "exponents": _run_exponents,
    "attack": _run_attack,
    "exact-pfn": _run_exact_pfn,
}


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


_HELP = {
    "simulate": "Monte Carlo estimate of the error probabilities",
    "regions": "membership grid of the asymptotic indistinguishability regions (CSV)",
    "exponents": "false-negative error exponents",
    "attack": "optimal attack on one explicit instance",
    "exact-pfn": "false-negative probability by exact type enumeration",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="adversarial-ht", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON configuration file")
    common.add_argument("--out", help="output file (stdout if omitted; required for regions)")
    common.add_argument("--seed", type=int, help="overrides the seed in the configuration")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--threshold-mode", choices=["finite-n", "asymptotic"])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=_HELP[name])
        if name == "simulate":
            p.add_argument("--trace", help="write one CSV row per trial to this file")
    schema = sub.add_parser("schema", help="print the configuration schema of a subcommand")
    schema.add_argument("name", choices=COMMANDS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        sys.stdout.write(json.dumps(config_schema(args.name), indent=2) + "\n")
        return EXIT_OK
    if args.threads < 1:
        print("config error: --threads: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"config error: $: invalid JSON ({exc})", file=sys.stderr)
        return EXIT_CONFIG
    if isinstance(raw, dict) and "config" in raw and "report" in raw:
        # a previous report: rerun from its embedded configuration
        raw = raw["config"]
    try:
        cfg = resolve(args.command, raw, args)
        result = RUNNERS[args.command](cfg, args.threads, args)
    except ConfigError as exc:
        print(f"config error: {exc.path}: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except EnumerationTooLargeError as exc:
        print(f"enumeration cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP

    meta = _meta(args.threads)
    try:
        if args.command == "regions":
            if args.out is None:
                print("config error: --out: regions writes a CSV file and needs an output path", file=sys.stderr)
                return EXIT_CONFIG
            _write(args.out, result.to_csv())
            meta["csv"] = Path(args.out).name
            sidecar = {"config": cfg, "report": {"counts": result.counts()}, "meta": meta}
            _write(f"{args.out}.meta.json", dumps(sidecar))
        else:
            _write(args.out, dumps({"config": cfg, "report": result, "meta": meta}))
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
