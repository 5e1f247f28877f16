"""End-to-end pipeline: model file in, synthesis report artifacts out.

Stages: parse -> refine -> dependency matrices -> clustering (automatic or
user-supplied) -> tree transform -> per-node synthesis -> report.  Artifacts
written to the output directory: ``tree.dot``, ``tree.json``, ``dsm.csv``,
``dmm.csv``, ``css.csv`` and ``summary.json``.  Identical inputs produce
byte-identical artifacts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .clustering import ClusterParams, cluster, load_clustering
from .depmatrix import build_dmm, dsm_from_dmm
from .errors import MldesError, PipelineError
from .modelio import load_model
from .product import refine
from .synthesis import TreeSynthesisResult, synthesize_tree
from .transform import transform, tree_to_dot, tree_to_json


@dataclass(frozen=True)
class PipelineConfig:
    model_path: Path
    out_dir: Path
    manual_clustering: Path | None = None
    params: ClusterParams = field(default_factory=ClusterParams)
    state_budget: int = 10**6
    jobs: int = 1

    @property
    def mode(self) -> str:
        return "manual" if self.manual_clustering else self.params.mode


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def config_from_file(path: str | Path, out_dir: Path | None = None) -> PipelineConfig:
    """Read a flat ``key = value`` config file (quotes optional).

    Keys: model, out, manual, alpha, beta, mu, gamma (or ``gamma = none``),
    local_bus, max_depth, state_budget, jobs.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MldesError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip().strip("\"'")

    def boolean(key: str, default: bool) -> bool:
        v = values.get(key)
        if v is None:
            return default
        if v.lower() in _TRUE:
            return True
        if v.lower() in _FALSE:
            return False
        raise MldesError(f"config key '{key}' has non-boolean value '{v}'")

    if "model" not in values:
        raise MldesError("config file misses the 'model' key")
    gamma_raw = values.get("gamma")
    gamma = None if gamma_raw is None or gamma_raw.lower() == "none" else float(gamma_raw)
    if "gamma" not in values:
        gamma = ClusterParams().gamma
    params = ClusterParams(
        alpha=int(values.get("alpha", 2)),
        beta=float(values.get("beta", 1.7)),
        mu=float(values.get("mu", 1.0)),
        gamma=gamma,
        local_bus=boolean("local_bus", True),
        max_depth=int(values["max_depth"]) if "max_depth" in values else None,
    )
    out = values.get("out")
    return PipelineConfig(
        model_path=Path(values["model"]),
        out_dir=Path(out) if out else (out_dir or Path(".")),
        manual_clustering=Path(values["manual"]) if "manual" in values else None,
        params=params,
        state_budget=int(values.get("state_budget", 10**6)),
        jobs=int(values.get("jobs", 1)),
    )


@dataclass(frozen=True)
class PipelineSummary:
    mode: str
    total_css: int
    max_node_css: int
    synthesized_nodes: int
    skipped_nodes: tuple[str, ...]
    empty_supervisor_nodes: tuple[str, ...]
    artifacts: tuple[Path, ...]


def _stage(name: str):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except PipelineError:
                raise
            except Exception as exc:
                raise PipelineError(name, exc) from exc

        return run

    return wrap


def css_csv(result: TreeSynthesisResult, tree, component_names: Sequence[str]) -> str:
    by_path = {n.path: n for n in tree.nodes()}
    rows = ["node,plants,requirements,css"]
    for sup in result.supervisors:
        node = by_path[sup.node_path]
        plants = "+".join(component_names[i] for i in sorted(node.plants))
        rows.append(f"{sup.node_path},{plants},{len(node.requirements)},{sup.css}")
    return "\n".join(rows) + "\n"


def render_css_profile(
    results: Sequence[TreeSynthesisResult], labels: Sequence[str] | None = None
) -> str:
    """Descending css columns (one per result), zero-padded to equal length."""
    if not results:
        raise ValueError("render_css_profile needs at least one result")
    if labels is None:
        labels = [f"run{i + 1}" for i in range(len(results))]
    columns = [sorted((s.css for s in r.supervisors), reverse=True) for r in results]
    height = max((len(c) for c in columns), default=0)
    rows = [",".join(labels)]
    for i in range(height):
        rows.append(",".join(str(c[i]) if i < len(c) else "0" for c in columns))
    return "\n".join(rows) + "\n"


def run_pipeline(config: PipelineConfig) -> PipelineSummary:
    """Run all stages and write the artifact set into ``config.out_dir``."""
    model = _stage("parse")(load_model)(config.model_path)
    ps = _stage("refine")(refine)(model.plants)
    dmm = _stage("dmm")(build_dmm)(ps, model.requirements)
    dsm = _stage("dsm")(dsm_from_dmm)(dmm)

    diagnostics: list[str] = []
    req_indices = range(model.n_requirements)
    if config.manual_clustering is not None:
        def load():
            text = Path(config.manual_clustering).read_text(encoding="utf-8")
            return load_clustering(text, ps, req_indices)

        clustering = _stage("cluster")(load)()
    else:
        clustering = _stage("cluster")(cluster)(
            dsm, config.params, req_indices, diagnostics=diagnostics
        )

    tree = _stage("transform")(transform)(clustering, dmm)
    result = _stage("synthesize")(synthesize_tree)(
        tree, model, ps, jobs=config.jobs, state_budget=config.state_budget
    )

    @_stage("report")
    def report() -> tuple[Path, ...]:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        names = ps.component_names()
        req_names = tuple(r.name for r in model.requirements)
        css = result.css_by_path()
        files = {
            "tree.dot": tree_to_dot(tree, names, css),
            "tree.json": tree_to_json(tree, names, req_names, css),
            "dsm.csv": dsm.to_csv(),
            "dmm.csv": dmm.to_csv(),
            "css.csv": css_csv(result, tree, names),
            "summary.json": _summary_json(config, result, diagnostics),
        }
        paths = []
        for fname, text in files.items():
            path = out / fname
            path.write_text(text, encoding="utf-8")
            paths.append(path)
        return tuple(paths)

    artifacts = report()
    return PipelineSummary(
        mode=config.mode,
        total_css=result.total_css,
        max_node_css=result.max_css,
        synthesized_nodes=len(result.supervisors),
        skipped_nodes=result.skipped,
        empty_supervisor_nodes=result.empty_nodes,
        artifacts=artifacts,
    )


def _summary_json(
    config: PipelineConfig, result: TreeSynthesisResult, diagnostics: list[str]
) -> str:
    if config.manual_clustering is not None:
        clustering_doc: dict = {"manual": Path(config.manual_clustering).name}
    else:
        p = config.params
        clustering_doc = {
            "alpha": p.alpha,
            "beta": p.beta,
            "mu": p.mu,
            "gamma": p.gamma,
            "local_bus": p.local_bus,
            "max_depth": p.max_depth,
        }
    doc = {
        "mode": config.mode,
        "model": Path(config.model_path).name,
        "clustering": clustering_doc,
        "state_budget": config.state_budget,
        "total_css": result.total_css,
        "max_node_css": result.max_css,
        "synthesized_nodes": len(result.supervisors),
        "node_css": {s.node_path: s.css for s in result.supervisors},
        "skipped_nodes": list(result.skipped),
        "empty_supervisor_nodes": list(result.empty_nodes),
        "forced_splits": diagnostics,
    }
    return json.dumps(doc, indent=2) + "\n"
