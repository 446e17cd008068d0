"""Disk cache for arm-probability estimates (rescaled axes reuse them)."""

from __future__ import annotations

import json
import os
from pathlib import Path

from .results import EstimatorResult
from .rng import SeedSpec

ENV_VAR = "PERCOSPEC_CACHE_DIR"


def cache_dir() -> Path:
    return Path(os.environ.get(ENV_VAR, ".percospec-cache"))


def _key(model: str, intensity: float, r: float, R: float, method: str,
         h: float, seed: SeedSpec, n: int) -> str:
    return (f"{model}|lam={intensity:.9g}|r={r:g}|R={R:g}|{method}|h={h:g}"
            f"|seed={seed.master_seed}/{seed.experiment}|n={n}")


def _load(path: Path) -> dict:
    if path.exists():
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    return {}


def get_cached_arm(model, intensity, r, R, method, h, seed, n):
    store = _load(cache_dir() / "arm_probabilities.json")
    rec = store.get(_key(model, intensity, r, R, method, h, seed, n))
    if rec is None:
        return None
    return EstimatorResult(rec["estimate"], rec["stderr"], rec["n"], seed,
                           rec.get("meta", {}))


def put_cached_arm(model, intensity, r, R, method, h, seed, n,
                   result: EstimatorResult) -> None:
    path = cache_dir() / "arm_probabilities.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    store = _load(path)
    store[_key(model, intensity, r, R, method, h, seed, n)] = {
        "estimate": result.estimate,
        "stderr": result.stderr,
        "n": result.n,
        "meta": result.meta,
    }
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(store, f, indent=1, sort_keys=True)
    os.replace(tmp, path)
