"""Schemas, dataset manifests and parallel dataset generation."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from referencing import Registry, Resource

from .graph import Graph
from .io import read_graph
from .models import ModelError, sample_from_config, spawn_seeds

SCHEMA_NAMES = (
    "model_config",
    "manifest",
    "root_config",
    "fit_config",
    "fit_result",
    "regression_result",
    "community_estimate",
    "experiment_status",
)


class ValidationError(ValueError):
    """Input or output failed its JSON schema."""


@lru_cache(maxsize=None)
def _registry():
    pkg = resources.files(__package__) / "schemas"
    resources_ = []
    for name in SCHEMA_NAMES:
        doc = json.loads((pkg / f"{name}.json").read_text())
        resources_.append((f"{name}.json", Resource.from_contents(doc)))
    return Registry().with_resources(resources_)


def load_schema(name: str) -> dict:
    return _registry()[f"{name}.json"].contents


def validate(instance, name: str):
    """Validate `instance` against the shipped schema `name`."""
    validator = jsonschema.Draft202012Validator(load_schema(name), registry=_registry())
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ValidationError(f"{name}: {where}: {err.message}")
    return instance


def parallel_map(fn, items, threads: int = 1) -> list:
    """Map preserving order; numpy and LAPACK release the GIL for the heavy parts."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class LoadedDataset:
    graphs: list
    times: np.ndarray | None
    source: dict


def model_configs(manifest: dict, seed=None) -> list[tuple[dict, object]]:
    """Expand a model-based manifest into ``(config, seed)`` pairs.

    Configurations carrying their own ``seed`` keep it; the rest use the
    ``i``-th child of the manifest seed (or of `seed` when given).
    """
    base = seed if seed is not None else manifest.get("seed", 0)
    if "models" in manifest:
        cfgs = list(manifest["models"])
    else:
        cfgs = [manifest["model"]] * int(manifest["N"])
    out = []
    for cfg, child in zip(cfgs, spawn_seeds(base, len(cfgs))):
        validate(cfg, "model_config")
        own = cfg.get("seed")
        out.append((cfg, child if own is None or "models" not in manifest else own))
    return out


def load_manifest(path, seed=None, threads: int = 1) -> LoadedDataset:
    """Read a dataset manifest and materialize its graphs.

    A ``"times"`` list (or per-entry ``"t"``) provides regression predictors.
    """
    path = Path(path)
    manifest = json.loads(path.read_text())
    return dataset_from_manifest(manifest, path.parent, seed, threads)


def dataset_from_manifest(manifest: dict, base_dir=".", seed=None, threads: int = 1) -> LoadedDataset:
    validate(manifest, "manifest")
    base_dir = Path(base_dir)
    times = None
    if "graphs" in manifest:
        entries = [e if isinstance(e, dict) else {"path": e} for e in manifest["graphs"]]
        graphs = parallel_map(lambda e: read_graph(base_dir / e["path"]), entries, threads)
        ts = [e.get("t") for e in entries]
    else:
        pairs = model_configs(manifest, seed)
        graphs = parallel_map(lambda cs: sample_from_config(cs[0], cs[1]), pairs, threads)
        ts = [c.get("t") for c, _ in pairs]
    if "times" in manifest:
        ts = list(manifest["times"])
        if len(ts) != len(graphs):
            raise ModelError(f"manifest lists {len(ts)} times for {len(graphs)} graphs")
    if all(t is not None for t in ts):
        times = np.asarray(ts, dtype=float)
    elif any(t is not None for t in ts):
        raise ModelError("either every dataset entry has a time or none does")
    return LoadedDataset(graphs, times, manifest)


def write_manifest(paths, path, times=None) -> Path:
    """Manifest listing graph files, stored relative to the manifest's folder."""
    path = Path(path)
    rel = [str(Path(p).resolve().relative_to(path.parent.resolve())) for p in paths]
    if times is None:
        doc = {"graphs": rel}
    else:
        doc = {"graphs": [{"path": p, "t": float(t)} for p, t in zip(rel, times)]}
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def sample_dataset(cfg: dict, N: int, seed=0, threads: int = 1) -> list[Graph]:
    """``N`` independent draws of one model, sample ``i`` seeded by child ``i``."""
    validate(cfg, "model_config")
    return parallel_map(lambda ch: sample_from_config(cfg, ch), spawn_seeds(seed, N), threads)
