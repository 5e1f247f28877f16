"""Command-line interface.

Subcommands mirror the pipeline stages (``refine``, ``dsm``, ``cluster``,
``transform``, ``synth``) plus the all-in-one ``pipeline`` and the css
``profile`` helper.  ``MLDES_OUT`` sets the default output directory for
``pipeline``.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import engine
from .clustering import (
    ClusterParams,
    cluster,
    clustering_to_json,
    clustering_to_text,
    load_clustering,
)
from .depmatrix import build_dmm, dsm_from_dmm
from .errors import MldesError
from .modelio import load_model
from .pipeline import (
    PipelineConfig,
    config_from_file,
    css_csv,
    render_css_profile,
    run_pipeline,
)
from .product import refine
from .synthesis import synthesize_tree
from .transform import transform, tree_from_json, tree_to_dot, tree_to_json


def _params(alpha, beta, mu, gamma, local_bus, max_depth) -> ClusterParams:
    return ClusterParams(
        alpha=alpha,
        beta=beta,
        mu=mu,
        gamma=None if gamma is not None and gamma <= 0 else gamma,
        local_bus=local_bus,
        max_depth=max_depth,
    )


_cluster_options = [
    click.option("--alpha", type=int, default=2, show_default=True),
    click.option("--beta", type=float, default=1.7, show_default=True),
    click.option("--mu", type=float, default=1.0, show_default=True),
    click.option(
        "--gamma",
        type=float,
        default=2.0,
        show_default=True,
        help="Bus-detection coefficient; 0 or negative disables bus detection.",
    ),
    click.option("--local-bus/--no-local-bus", default=True, show_default=True),
    click.option("--max-depth", type=int, default=None),
    click.option(
        "--manual",
        type=click.Path(exists=True, path_type=Path),
        default=None,
        help="Use this clustering file instead of automatic clustering.",
    ),
]


def _with_cluster_options(fn):
    for opt in reversed(_cluster_options):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(package_name="mldes")
def main() -> None:
    """Multilevel supervisory synthesis toolkit."""


@main.command("refine")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, path_type=Path))
def refine_cmd(model_path: Path) -> None:
    """Print the most refined product-system grouping as JSON."""
    model = load_model(model_path)
    ps = refine(model.plants)
    click.echo(ps.mapping_json(), nl=False)


@main.command("dsm")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Directory for dmm.csv/dsm.csv.")
@click.option("--ppm", is_flag=True, help="Also write a dsm.ppm heat grid.")
def dsm_cmd(model_path: Path, out: Path | None, ppm: bool) -> None:
    """Emit the dependency matrices as CSV (and optionally a PPM grid)."""
    model = load_model(model_path)
    ps = refine(model.plants)
    dmm = build_dmm(ps, model.requirements)
    dsm = dsm_from_dmm(dmm)
    if out is None:
        click.echo(dmm.to_csv(), nl=False)
        click.echo(dsm.to_csv(), nl=False)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / "dmm.csv").write_text(dmm.to_csv(), encoding="utf-8")
    (out / "dsm.csv").write_text(dsm.to_csv(), encoding="utf-8")
    if ppm:
        (out / "dsm.ppm").write_text(dsm.to_ppm(), encoding="utf-8")
    click.echo(f"wrote matrices to {out}")


@main.command("cluster")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, path_type=Path))
@_with_cluster_options
@click.option("--text", "as_text", is_flag=True, help="Print the bracket text format instead of JSON.")
def cluster_cmd(model_path, alpha, beta, mu, gamma, local_bus, max_depth, manual, as_text) -> None:
    """Cluster the model's DSM (or echo a manual clustering, normalized)."""
    model = load_model(model_path)
    ps = refine(model.plants)
    if manual is not None:
        tree = load_clustering(manual.read_text(encoding="utf-8"), ps, range(model.n_requirements))
    else:
        dmm = build_dmm(ps, model.requirements)
        dsm = dsm_from_dmm(dmm)
        params = _params(alpha, beta, mu, gamma, local_bus, max_depth)
        tree = cluster(dsm, params, range(model.n_requirements))
    names = ps.component_names()
    click.echo(
        clustering_to_text(tree, names) if as_text else clustering_to_json(tree, names),
        nl=False,
    )


@main.command("transform")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, path_type=Path))
@_with_cluster_options
@click.option("--dot", "dot_path", type=click.Path(path_type=Path), default=None, help="Also write DOT here.")
def transform_cmd(model_path, alpha, beta, mu, gamma, local_bus, max_depth, manual, dot_path) -> None:
    """Build the synthesis tree and print it as JSON."""
    model = load_model(model_path)
    ps = refine(model.plants)
    dmm = build_dmm(ps, model.requirements)
    if manual is not None:
        clu = load_clustering(manual.read_text(encoding="utf-8"), ps, range(model.n_requirements))
    else:
        dsm = dsm_from_dmm(dmm)
        params = _params(alpha, beta, mu, gamma, local_bus, max_depth)
        clu = cluster(dsm, params, range(model.n_requirements))
    tree = transform(clu, dmm)
    names = ps.component_names()
    req_names = tuple(r.name for r in model.requirements)
    if dot_path is not None:
        dot_path.write_text(tree_to_dot(tree, names), encoding="utf-8")
    click.echo(tree_to_json(tree, names, req_names), nl=False)


@main.command("synth")
@click.option("--tree", "tree_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--state-budget", type=int, default=10**6, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Directory for css.csv and result.json.")
def synth_cmd(tree_path: Path, model_path: Path, jobs: int, state_budget: int, out: Path | None) -> None:
    """Synthesize a supervisor per tree node; report css per node."""
    model = load_model(model_path)
    ps = refine(model.plants)
    tree, comp_names, _ = tree_from_json(tree_path.read_text(encoding="utf-8"))
    result = synthesize_tree(tree, model, ps, jobs=jobs, state_budget=state_budget)
    csv_text = css_csv(result, tree, comp_names)
    doc = {
        "total_css": result.total_css,
        "max_node_css": result.max_css,
        "node_css": {s.node_path: s.css for s in result.supervisors},
        "skipped_nodes": list(result.skipped),
        "empty_supervisor_nodes": list(result.empty_nodes),
    }
    if out is None:
        click.echo(csv_text, nl=False)
        click.echo(json.dumps(doc, indent=2))
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / "css.csv").write_text(csv_text, encoding="utf-8")
    (out / "result.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    click.echo(f"wrote synthesis results to {out}")


@main.command("pipeline")
@click.option("--model", "model_path", type=click.Path(exists=True, path_type=Path), default=None)
@_with_cluster_options
@click.option(
    "--out",
    type=click.Path(path_type=Path),
    default=None,
    envvar="MLDES_OUT",
    help="Output directory (defaults to $MLDES_OUT).",
)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--state-budget", type=int, default=10**6, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path), default=None,
              help="Read options from a key=value file (flags override the output dir only).")
def pipeline_cmd(model_path, alpha, beta, mu, gamma, local_bus, max_depth, manual,
                 out, jobs, state_budget, config_path) -> None:
    """Run parse -> refine -> matrices -> cluster -> transform -> synth -> report."""
    if config_path is not None:
        config = config_from_file(config_path, out_dir=out)
    else:
        if model_path is None:
            raise click.UsageError("either --model or --config is required")
        if out is None:
            raise click.UsageError("either --out or $MLDES_OUT is required")
        config = PipelineConfig(
            model_path=model_path,
            out_dir=out,
            manual_clustering=manual,
            params=_params(alpha, beta, mu, gamma, local_bus, max_depth),
            state_budget=state_budget,
            jobs=jobs,
        )
    summary = run_pipeline(config)
    click.echo(
        f"mode={summary.mode} total_css={summary.total_css} "
        f"max_node_css={summary.max_node_css} "
        f"synthesized={summary.synthesized_nodes} "
        f"skipped={len(summary.skipped_nodes)}"
    )
    if summary.empty_supervisor_nodes:
        click.echo(
            "warning: empty supervisor at node(s) "
            + ", ".join(summary.empty_supervisor_nodes)
        )
    click.echo(f"artifacts in {Path(config.out_dir)}")


@main.command("profile")
@click.argument("css_files", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
def profile_cmd(css_files: tuple[Path, ...]) -> None:
    """Merge css.csv files into descending per-run columns for plotting."""
    columns = []
    labels = []
    for path in css_files:
        values = []
        for line in path.read_text(encoding="utf-8").splitlines()[1:]:
            values.append(int(line.rsplit(",", 1)[1]))
        columns.append(sorted(values, reverse=True))
        labels.append(path.parent.name or path.stem)
    height = max(len(c) for c in columns)
    click.echo(",".join(labels))
    for i in range(height):
        click.echo(",".join(str(c[i]) if i < len(c) else "0" for c in columns))


@main.command("backend")
def backend_cmd() -> None:
    """Show which state-space kernel backend is active."""
    click.echo(engine.backend_name())


def run() -> None:  # console entry with uniform error reporting
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(130)
    except MldesError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
