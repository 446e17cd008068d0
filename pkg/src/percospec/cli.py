"""Command-line surface: structured configs in, CSV + JSON metadata out.

Every subcommand reads a JSON config (optional) merged with flag overrides,
validates it against its schema, runs the library call, and writes a CSV data
file plus a JSON sidecar carrying the seed, package versions, runtime, the
echoed config and its hash.  Data rows are byte-identical across reruns with
the same config and seed at any worker count; only the sidecar's runtime
varies.  Exit codes: 0 success, 2 validation error, 3 failed acceptance check
in --check mode.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .arm_events import (PINNED_LAMBDA_C, calibrate_lambda_c,
                         estimate_arm_probability, standard_arm_spec)
from .experiments import (cached_alpha4, instability_collapse, noise_curve,
                          ou_vs_frozen_covariance, quasimult_table)
from .geometry import Region
from .model import sample_poisson
from .rng import SeedSpec
from .boolean import BooleanCrossingFunctional
from .spectral import spectral_intensity_integral


class ConfigError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_outputs(out_base: Path, header, rows, cfg, seed_value, t0, extra=None):
    out_base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out_base.with_suffix(".csv")
    chash = _config_hash(cfg)
    with open(csv_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header + ["master_seed", "config_hash"]) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + f",{seed_value},{chash}\n")
    meta = {
        "master_seed": seed_value,
        "config": cfg,
        "config_hash": chash,
        "versions": {"percospec": __version__, "numpy": np.__version__},
        "runtime_s": time.time() - t0,
    }
    if extra:
        meta.update(extra)
    with open(out_base.with_suffix(".json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=1, sort_keys=True)
    return csv_path


def _load_config(args, schema: dict, name: str) -> dict:
    cfg = {k: v for k, (v, _) in schema.items()}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            user = json.load(f)
        for k, v in user.items():
            if k not in schema:
                raise ConfigError(f"unknown config key {k!r} for {name}")
            cfg[k] = v
    for k in schema:
        v = getattr(args, k.replace("-", "_"), None)
        if v is not None:
            cfg[k] = v
    for k, (default, typ) in schema.items():
        if cfg[k] is None:
            continue
        try:
            if typ is list:
                cfg[k] = [float(x) for x in cfg[k]]
            elif typ is not None:
                cfg[k] = typ(cfg[k])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for {k!r}: {e}") from e
    return cfg


def _parse_list(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return list(text)
    return [float(x) for x in str(text).replace(",", " ").split()]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_sample(args) -> int:
    schema = {"model": ("boolean", str), "L": (8.0, float),
              "intensity": (None, float), "seed": (0, int)}
    cfg = _load_config(args, schema, "sample")
    t0 = time.time()
    lam = cfg["intensity"]
    if lam is None:
        lam = PINNED_LAMBDA_C if cfg["model"] == "boolean" else 1.0
    seed = SeedSpec(cfg["seed"], "sample")
    pc = sample_poisson(lam, Region.square(cfg["L"]), seed,
                        marked=cfg["model"] == "voronoi")
    marks = pc.marks if pc.marked else np.ones(pc.n, dtype=np.int8)
    rows = [(float(x), float(y), int(m)) for (x, y), m in zip(pc.xy, marks)]
    _write_outputs(Path(args.out), ["x", "y", "mark"], rows, cfg, cfg["seed"], t0)
    return 0


def _cmd_crossing_prob(args) -> int:
    schema = {"model": ("boolean", str), "L": (8.0, float),
              "intensity": (None, float), "n": (2000, int), "seed": (0, int)}
    cfg = _load_config(args, schema, "crossing-prob")
    t0 = time.time()
    lam = cfg["intensity"]
    if lam is None:
        lam = PINNED_LAMBDA_C if cfg["model"] == "boolean" else 1.0
    seed = SeedSpec(cfg["seed"], "crossing-prob")
    if cfg["model"] == "boolean":
        from .arm_events import crossing_probability
        res = crossing_probability(cfg["L"], lam, cfg["n"], seed)
    else:
        from .model import sample_poisson as sp
        from .voronoi import VoronoiCrossingFunctional
        F = VoronoiCrossingFunctional(cfg["L"], lam)
        hits = 0
        for rep in range(cfg["n"]):
            pc = sp(lam, F.sampling_window, seed.with_(replica=rep), marked=True)
            hits += F(pc) > 0
        from .results import bernoulli_result
        res = bernoulli_result(hits, cfg["n"], seed)
    rows = [(cfg["model"], cfg["L"], lam, cfg["n"], res.estimate, res.stderr)]
    _write_outputs(Path(args.out), ["model", "L", "intensity", "n", "estimate",
                                    "stderr"], rows, cfg, cfg["seed"], t0)
    return 0


def _cmd_arm_prob(args) -> int:
    schema = {"model": ("boolean", str), "event": ("A4", str), "r": (1.0, float),
              "R": (8.0, float), "h": (0.05, float), "method": ("auto", str),
              "intensity": (None, float), "n": (2000, int), "seed": (0, int)}
    cfg = _load_config(args, schema, "arm-prob")
    t0 = time.time()
    lam = cfg["intensity"]
    if lam is None:
        lam = PINNED_LAMBDA_C if cfg["model"] == "boolean" else 1.0
    seed = SeedSpec(cfg["seed"], "arm-prob")
    if cfg["model"] == "boolean":
        spec = standard_arm_spec(cfg["event"], cfg["r"], cfg["R"])
        res = estimate_arm_probability(spec, lam, cfg["n"], seed,
                                       method=cfg["method"], h=cfg["h"],
                                       threads=args.threads)
    else:
        from .experiments import estimate_voronoi_arm_probability
        res = estimate_voronoi_arm_probability(cfg["r"], cfg["R"], cfg["n"],
                                               seed, intensity=lam)
    rows = [(cfg["model"], cfg["r"], cfg["R"], cfg["h"], cfg["n"],
             res.estimate, res.stderr)]
    _write_outputs(Path(args.out), ["model", "r", "R", "h", "n", "estimate",
                                    "stderr"], rows, cfg, cfg["seed"], t0)
    return 0


def _cmd_spectral_intensity(args) -> int:
    schema = {"L": (8.0, float), "intensity": (PINNED_LAMBDA_C, float),
              "n": (20000, int), "x_per_replica": (16, int), "seed": (0, int)}
    cfg = _load_config(args, schema, "spectral-intensity")
    t0 = time.time()
    seed = SeedSpec(cfg["seed"], "spectral-intensity")
    F = BooleanCrossingFunctional(cfg["L"], cfg["intensity"])
    dual = spectral_intensity_integral(F, F.dependence_region, cfg["intensity"],
                                       cfg["n"], seed,
                                       x_per_replica=cfg["x_per_replica"])
    rows = [("pivotal-count", dual.configuration_route.estimate,
             dual.configuration_route.stderr, cfg["n"], dual.discrepancy_sigma),
            ("add-one", dual.added_point_route.estimate,
             dual.added_point_route.stderr, cfg["n"], dual.discrepancy_sigma)]
    _write_outputs(Path(args.out), ["route", "estimate", "stderr", "n",
                                    "discrepancy_sigma"], rows, cfg,
                   cfg["seed"], t0)
    if args.check and not dual.agree(3.0):
        print(f"FAIL dual-route discrepancy {dual.discrepancy_sigma:.2f} sigma",
              file=sys.stderr)
        return 3
    return 0


def _cmd_noise_curve(args) -> int:
    schema = {"model": ("boolean", str), "dynamics": ("OU", str),
              "L": (8.0, float), "times": (None, list), "u_values": (None, list),
              "intensity": (None, float), "n": (5000, int),
              "alpha4_n": (20000, int), "seed": (0, int)}
    cfg = _load_config(args, schema, "noise-curve")
    t0 = time.time()
    seed = SeedSpec(cfg["seed"], "noise-curve")
    if cfg["times"] is None and cfg["u_values"] is None:
        raise ConfigError("need times or u_values")
    alpha4 = None
    times = cfg["times"]
    if times is None:
        alpha4 = cached_alpha4(cfg["model"], 1.0, cfg["L"], cfg["alpha4_n"],
                               seed.with_(experiment="noise-curve/alpha4"),
                               intensity=cfg["intensity"])
        times = [u / (cfg["L"] ** 2 * alpha4.estimate) for u in cfg["u_values"]]
    curve = noise_curve(cfg["model"], cfg["dynamics"], cfg["L"], times,
                        cfg["n"], seed, intensity=cfg["intensity"],
                        alpha4=alpha4, alpha4_n=cfg["alpha4_n"],
                        threads=args.threads)
    rows = [(cfg["model"], cfg["dynamics"], cfg["L"], float(t), float(u),
             p, pse, c, cse, curve.var0)
            for t, u, p, pse, c, cse in zip(curve.times, curve.u, curve.p_neq,
                                            curve.p_neq_se, curve.cov,
                                            curve.cov_se)]
    _write_outputs(Path(args.out),
                   ["model", "dynamics", "L", "t", "u", "p_neq", "p_neq_se",
                    "cov", "cov_se", "var0"],
                   rows, cfg, cfg["seed"], t0,
                   extra={"alpha4": None if curve.alpha4 is None
                          else curve.alpha4.estimate})
    return 0


def _cmd_quasimult(args) -> int:
    schema = {"model": ("boolean", str),
              "triples": ([[1.0, 4.0, 32.0], [1.0, 8.0, 32.0]], None),
              "intensity": (None, float), "n": (20000, int), "seed": (0, int)}
    cfg = _load_config(args, schema, "quasimult")
    t0 = time.time()
    seed = SeedSpec(cfg["seed"], "quasimult")
    rows_raw = quasimult_table(cfg["model"], cfg["triples"], cfg["n"], seed,
                               intensity=cfg["intensity"])
    rows = [(r["r1"], r["r2"], r["r3"], r["ratio"], r["ratio_se"], r["a12"],
             r["a23"], r["a13"]) for r in rows_raw]
    _write_outputs(Path(args.out),
                   ["r1", "r2", "r3", "ratio", "ratio_se", "a12", "a23", "a13"],
                   rows, cfg, cfg["seed"], t0)
    if args.check:
        lowers = [r["ratio"] - 3 * r["ratio_se"] for r in rows_raw]
        uppers = [r["ratio"] + 3 * r["ratio_se"] for r in rows_raw]
        if max(lowers) > 4.0 * min(uppers):
            print("FAIL quasi-multiplicativity ratios exceed a common "
                  "factor-4 band", file=sys.stderr)
            return 3
    return 0


def _cmd_collapse(args) -> int:
    schema = {"L_list": ([8.0, 16.0, 32.0], list),
              "u_grid": ([0.01, 0.1, 1.0, 10.0], list),
              "intensity": (None, float), "n": (5000, int),
              "alpha4_n": (20000, int), "seed": (0, int)}
    cfg = _load_config(args, schema, "collapse")
    t0 = time.time()
    seed = SeedSpec(cfg["seed"], "collapse")
    res = instability_collapse(cfg["L_list"], cfg["u_grid"], cfg["n"], seed,
                               intensity=cfg["intensity"],
                               alpha4_n=cfg["alpha4_n"], threads=args.threads)
    rows = []
    for i, L in enumerate(res["L_list"]):
        curve = res["curves"][L]
        for j, u in enumerate(res["u_grid"]):
            rows.append((L, float(u), float(curve.times[j]),
                         curve.p_neq[j], curve.p_neq_se[j],
                         float(res["spread"][j])))
    _write_outputs(Path(args.out),
                   ["L", "u", "t", "p_neq", "p_neq_se", "spread"],
                   rows, cfg, cfg["seed"], t0)
    if args.check:
        ok = True
        for j, u in enumerate(res["u_grid"]):
            col = res["p_matrix"][:, j]
            if abs(u - 0.01) < 1e-12 and np.any(col > 0.05):
                ok = False
            if abs(u - 10.0) < 1e-12 and np.any(col < 0.1):
                ok = False
            if res["spread"][j] > 0.15:
                ok = False
        if not ok:
            print("FAIL collapse bounds violated", file=sys.stderr)
            return 3
    return 0


def _cmd_hoeffding_check(args) -> int:
    schema = {"n_points": (10, int), "replicas": (200, int), "seed": (0, int)}
    cfg = _load_config(args, schema, "hoeffding-check")
    t0 = time.time()
    from .hoeffding import (alternating_conditional_gap,
                            coefficients_from_values, projection_identity_gap,
                            values_from_coefficients)
    seed = SeedSpec(cfg["seed"], "hoeffding-check")
    n = cfg["n_points"]
    worst = {"parseval": 0.0, "reconstruction": 0.0, "projection": 0.0,
             "conditional-sum": 0.0}
    for rep in range(cfg["replicas"]):
        rng = seed.with_(replica=rep).generator()
        values = rng.choice([-1.0, 1.0], size=1 << n)
        coeffs = coefficients_from_values(values)
        worst["parseval"] = max(worst["parseval"],
                                abs(float(np.mean(values ** 2)
                                          - np.sum(coeffs ** 2))))
        worst["reconstruction"] = max(
            worst["reconstruction"],
            float(np.max(np.abs(values_from_coefficients(coeffs) - values))))
        tmask = [i for i in range(n) if rng.random() < 0.5]
        worst["projection"] = max(worst["projection"],
                                  projection_identity_gap(values, tmask))
        if n <= 8:
            worst["conditional-sum"] = max(worst["conditional-sum"],
                                           alternating_conditional_gap(values))
    rows = [(name, cfg["replicas"], gap, gap <= 1e-10)
            for name, gap in worst.items()]
    _write_outputs(Path(args.out), ["check", "replicas", "max_gap", "pass"],
                   rows, cfg, cfg["seed"], t0)
    if any(gap > 1e-10 for gap in worst.values()):
        print("FAIL exact identities violated", file=sys.stderr)
        return 3
    return 0


def _cmd_calibrate_lambda(args) -> int:
    schema = {"L_list": ([4.0, 8.0, 16.0], list), "tolerance": (0.01, float),
              "n_per_eval": (2000, int), "seed": (0, int)}
    cfg = _load_config(args, schema, "calibrate-lambda")
    t0 = time.time()
    seed = SeedSpec(cfg["seed"], "calibrate-lambda")
    lam = calibrate_lambda_c(cfg["L_list"], cfg["tolerance"], seed,
                             n_per_eval=cfg["n_per_eval"])
    rows = [(lam, cfg["tolerance"], PINNED_LAMBDA_C)]
    _write_outputs(Path(args.out), ["lambda_c", "tolerance", "pinned_default"],
                   rows, cfg, cfg["seed"], t0)
    return 0


def _cmd_ou_vs_frozen(args) -> int:
    schema = {"L": (8.0, float), "times": ([0.0, 0.02, 0.05, 0.1, 0.3], list),
              "n": (3000, int), "seed": (0, int)}
    cfg = _load_config(args, schema, "ou-vs-frozen")
    t0 = time.time()
    seed = SeedSpec(cfg["seed"], "ou-vs-frozen")
    rows_raw = ou_vs_frozen_covariance(cfg["L"], cfg["times"], cfg["n"], seed,
                                       threads=args.threads)
    rows = [(r["t"], r["cov_ou"], r["cov_ou_se"], r["cov_frozen"],
             r["cov_frozen_se"], r["diff"], r["diff_se"]) for r in rows_raw]
    _write_outputs(Path(args.out),
                   ["t", "cov_ou", "cov_ou_se", "cov_frozen", "cov_frozen_se",
                    "diff", "diff_se"],
                   rows, cfg, cfg["seed"], t0)
    if args.check:
        bad = [r for r in rows_raw if r["diff"] > 3.0 * r["diff_se"]]
        if bad:
            print(f"FAIL OU covariance above frozen at t={bad[0]['t']}",
                  file=sys.stderr)
            return 3
    return 0


_COMMANDS = {
    "sample": _cmd_sample,
    "crossing-prob": _cmd_crossing_prob,
    "arm-prob": _cmd_arm_prob,
    "spectral-intensity": _cmd_spectral_intensity,
    "noise-curve": _cmd_noise_curve,
    "quasimult": _cmd_quasimult,
    "collapse": _cmd_collapse,
    "hoeffding-check": _cmd_hoeffding_check,
    "calibrate-lambda": _cmd_calibrate_lambda,
    "ou-vs-frozen": _cmd_ou_vs_frozen,
}

_FLAGS = ["model", "dynamics", "event", "method", "L", "r", "R", "h",
          "intensity", "n", "x_per_replica", "n_points", "replicas",
          "n_per_eval", "tolerance", "alpha4_n", "seed"]
_LIST_FLAGS = ["times", "u_values", "L_list", "u_grid", "triples"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="percospec",
        description="Spectral/pivotal Monte Carlo toolkit for planar "
                    "continuum percolation")
    sub = parser.add_subparsers(dest="command")
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--out", type=str, default=f"out/{name}")
        p.add_argument("--check", action="store_true")
        p.add_argument("--threads", type=int, default=1)
        for flag in _FLAGS:
            p.add_argument(f"--{flag.replace('_', '-')}", dest=flag,
                           type=str, default=None)
        for flag in _LIST_FLAGS:
            p.add_argument(f"--{flag.replace('_', '-')}", dest=flag,
                           type=str, default=None)
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 2
    for flag in _LIST_FLAGS:
        if getattr(args, flag, None) is not None and flag != "triples":
            setattr(args, flag, _parse_list(getattr(args, flag)))
    if getattr(args, "triples", None) is not None:
        args.triples = json.loads(args.triples)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
