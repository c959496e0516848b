"""Command-line surface: fit, bandwidth, simulate, evaluate, covariates.

Every subcommand is deterministic given its inputs and seed.  Numeric output
is written at 10 significant digits; the fit and covariates report paths also
render heatmap figures next to the delimited output.

Exit codes: 0 success, 1 numerical/procedural failure, 2 I/O failure,
3 configuration error.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import bandwidth as bw_mod
from . import graph as graph_mod
from . import histogram as hist_mod
from . import optimizer as opt_mod
from . import oracle as oracle_mod
from . import report
from .graphon import GraphonError, SparsitySchedule, builtin_graphon, sample_graph

EXIT_NUMERICAL = 1
EXIT_IO = 2
EXIT_CONFIG = 3


class CliError(click.ClickException):
    def __init__(self, message, exit_code):
        super().__init__(message)
        self.exit_code = exit_code


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"bad config JSON: {exc}", EXIT_CONFIG) from exc


def _merged(config: dict, **flags) -> dict:
    """Config file supplies defaults; explicit flags win."""
    out = dict(config)
    for key, val in flags.items():
        if val is not None:
            out[key] = val
    return out


def _load_graph(path, keep_zero_degree: bool):
    if path is None:
        raise CliError("an input edge list is required", EXIT_CONFIG)
    try:
        g, load_report = graph_mod.load_edge_list(path)
    except graph_mod.GraphError as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    if keep_zero_degree:
        return g, {**load_report, "removed_zero_degree": 0}
    g, filt = graph_mod.filter_zero_degree(g)
    return g, {**load_report, **filt}


def _outdir(out) -> Path:
    path = Path(out or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


@click.group()
def main():
    """Network histogram estimation and evaluation."""


@main.command()
@click.option("--input", "input_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--c", "c_const", type=float, default=None,
              help="Degree-window constant (default 4).")
@click.option("--h", "h_override", type=int, default=None,
              help="Bandwidth override; skips automatic selection.")
@click.option("--restarts", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--keep-zero-degree", is_flag=True, default=False)
@click.option("--out", type=click.Path(), default=None)
def fit(input_path, config_path, c_const, h_override, restarts, seed,
        threads, keep_zero_degree, out):
    """Fit a network histogram to an edge list and write all artifacts."""
    cfg = _merged(_load_config(config_path), input=input_path, c=c_const,
                  h=h_override, restarts=restarts, seed=seed,
                  threads=threads, out=out)
    g, filter_report = _load_graph(cfg.get("input"), keep_zero_degree)
    outdir = _outdir(cfg.get("out"))
    report.write_json(outdir / "filter_report.json", filter_report)

    c = float(cfg.get("c", 4.0))
    selection = None
    if cfg.get("h") is not None:
        h = int(cfg["h"])
    else:
        try:
            selection = bw_mod.select_bandwidth(g, c)
        except bw_mod.BandwidthError as exc:
            raise CliError(str(exc), EXIT_NUMERICAL) from exc
        h = selection.h

    search = opt_mod.SearchConfig(
        restarts=int(cfg.get("restarts", 300)),
        seed=int(cfg.get("seed", 0)),
        threads=int(cfg.get("threads", 1)),
    )
    result = opt_mod.fit(g, h, search)
    hist = result.best
    payload = hist_mod.to_dict(hist)
    report.write_json(outdir / "histogram.json", payload)
    heights = hist.bin_heights
    report.write_matrix_csv(outdir / "binmatrix.csv", heights)
    report.write_matrix_csv(outdir / "binmatrix_sqrt.csv", np.sqrt(heights))
    report.write_assignment_csv(outdir / "assignment.csv", g, hist.z)
    rho_inv = 1.0 / hist.rho_hat if hist.rho_hat > 0 else 0.0
    report.render_heatmap(outdir / "histogram_sqrt.png",
                          np.sqrt(rho_inv * heights),
                          title="fitted histogram (sqrt scale)")

    rho = hist.rho_hat
    summary = {
        "n": g.n,
        "edges": g.edge_count,
        "rho_hat": rho,
        "M2_hat": selection.M2_hat if selection else None,
        "h_star_raw": selection.h_star_raw if selection else None,
        "h": h,
        "k": hist.bandwidth.k,
        "r": hist.bandwidth.r,
        "log_likelihood": payload["log_likelihood"],
        "normalized_log_likelihood": payload["normalized_log_likelihood"],
        "effective_dof_offdiag": h ** 2 * rho,
        "seed": search.seed,
        "restarts": search.restarts,
        "proposals_evaluated": result.proposals_evaluated,
    }
    report.write_json(outdir / "summary.json", summary)
    click.echo(json.dumps(report._roundtree(summary), sort_keys=True))


@main.command()
@click.option("--input", "input_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--c", "c_const", type=float, default=None)
@click.option("--keep-zero-degree", is_flag=True, default=False)
def bandwidth(input_path, config_path, c_const, keep_zero_degree):
    """Run automatic bandwidth selection and print the JSON summary."""
    cfg = _merged(_load_config(config_path), input=input_path, c=c_const)
    g, _ = _load_graph(cfg.get("input"), keep_zero_degree)
    c = float(cfg.get("c", 4.0))
    try:
        sel = bw_mod.select_bandwidth(g, c)
    except bw_mod.BandwidthError as exc:
        raise CliError(str(exc), EXIT_NUMERICAL) from exc
    rho = graph_mod.estimate_density(g)
    payload = {
        "c": sel.c,
        "m_hat": sel.m_hat,
        "b_hat": sel.b_hat,
        "M2_hat": sel.M2_hat,
        "h_star_raw": sel.h_star_raw,
        "h": sel.h,
        "k": sel.k,
        "r": sel.r,
        "oracle_bound_at_h": bw_mod.theorem_bound(sel.M2_hat, g.n, rho, sel.h),
    }
    click.echo(json.dumps(report._roundtree(payload), sort_keys=True))


def _graphon_from_config(cfg: dict):
    family = cfg.get("family")
    if family is None:
        raise CliError("config needs a graphon family", EXIT_CONFIG)
    try:
        return builtin_graphon(family, **cfg.get("params", {}))
    except (GraphonError, KeyError) as exc:
        raise CliError(f"bad graphon config: {exc}", EXIT_CONFIG) from exc


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
def simulate(config_path, seed, out):
    """Sample a graph from a built-in graphon and write the edge list."""
    cfg = _merged(_load_config(config_path), seed=seed, out=out)
    f = _graphon_from_config(cfg)
    n = int(cfg.get("n", 0))
    if n < 2:
        raise CliError("config needs n >= 2", EXIT_CONFIG)
    schedule = SparsitySchedule(scale=float(cfg.get("rho", 1.0)),
                                decay=float(cfg.get("rho_decay", 0.0)))
    run_seed = int(cfg.get("seed", 0))
    try:
        g, latent = sample_graph(f, schedule, n, run_seed)
    except GraphonError as exc:
        raise CliError(str(exc), EXIT_NUMERICAL) from exc
    outdir = _outdir(cfg.get("out"))
    with open(outdir / "edges.txt", "w") as fh:
        for i in range(g.n):
            for j in g.neighbors(i):
                if j > i:
                    fh.write(f"{i} {j}\n")
    with open(outdir / "latent.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "xi"])
        for i, x in enumerate(latent.xi):
            writer.writerow([i, f"{x:.10g}"])
    report.write_json(outdir / "simulate_meta.json", {
        "family": f.name,
        "n": n,
        "rho_n": schedule.rho(n),
        "seed": run_seed,
        "edges": g.edge_count,
        "rho_hat": graph_mod.estimate_density(g),
    })
    click.echo(f"wrote {g.edge_count} edges to {outdir / 'edges.txt'}")


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
def evaluate(config_path, seed, out):
    """Monte Carlo MISE of the oracle or fitted estimator vs the bound."""
    cfg = _merged(_load_config(config_path), seed=seed, out=out)
    f = _graphon_from_config(cfg)
    n = int(cfg.get("n", 0))
    if n < 2:
        raise CliError("config needs n >= 2", EXIT_CONFIG)
    schedule = SparsitySchedule(scale=float(cfg.get("rho", 1.0)),
                                decay=float(cfg.get("rho_decay", 0.0)))
    rho = schedule.rho(n)
    replicates = int(cfg.get("replicates", 0))
    estimator = cfg.get("estimator", "oracle")
    run_seed = int(cfg.get("seed", 0))
    h_cfg = cfg.get("h", "hstar")
    if f.M is None:
        raise CliError("family lacks smoothness metadata", EXIT_CONFIG)
    m2 = f.M ** 2
    if h_cfg == "hstar":
        h = max(2, round(bw_mod.oracle_h_star(m2, n, rho)))
    else:
        h = int(h_cfg)
    try:
        res = oracle_mod.mise_monte_carlo(f, schedule, n, h, replicates,
                                          run_seed, estimator)
    except (oracle_mod.OracleError, GraphonError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc
    bound = bw_mod.theorem_bound(m2, n, rho, h)
    payload = {
        "family": f.name,
        "n": n,
        "rho_n": rho,
        "h": h,
        "replicates": replicates,
        "estimator": estimator,
        "seed": run_seed,
        "mise_hat": res.mise_hat,
        "std_err": res.std_err,
        "theorem_bound": bound,
        "bound_satisfied": bool(res.mise_hat <= bound),
        "alignment_method": res.method,
        "mise_is_upper_bound": res.method == "heuristic",
    }
    outdir = _outdir(cfg.get("out"))
    report.write_json(outdir / "evaluate_report.json", payload)
    click.echo(json.dumps(report._roundtree(payload), sort_keys=True))


@main.command()
@click.option("--fit-dir", type=click.Path(), required=True,
              help="Directory holding fit artifacts (assignment.csv, histogram.json).")
@click.option("--covariates", "cov_path", type=click.Path(), required=True)
@click.option("--column", required=True)
@click.option("--out", type=click.Path(), default=None)
def covariates(fit_dir, cov_path, column, out):
    """Summarize a covariate per fitted bin and re-emit the ordered matrix."""
    fit_dir = Path(fit_dir)
    try:
        hist_payload = json.loads((fit_dir / "histogram.json").read_text())
        with open(fit_dir / "assignment.csv", newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            rows = [(lab, int(grp)) for lab, grp in reader]
    except OSError as exc:
        raise CliError(f"cannot read fit artifacts: {exc}", EXIT_IO) from exc
    labels = [lab for lab, _ in rows]
    z = np.array([grp for _, grp in rows], dtype=np.int64)
    h = int(hist_payload["h"])
    bw = hist_mod.Bandwidth(len(labels), h)
    try:
        table = graph_mod.load_covariates(cov_path, labels)
        summary = report.covariate_summary(z, bw, table, column, labels)
    except graph_mod.GraphError as exc:
        raise CliError(str(exc), EXIT_IO if "read" in str(exc) else EXIT_CONFIG
                       ) from exc
    outdir = _outdir(out or fit_dir)
    report.write_json(outdir / f"covariate_{column}.json", summary.to_dict())
    heights = np.array(hist_payload["bin_heights"])
    sqrt_m = np.sqrt(heights)
    ordered = sqrt_m[np.ix_(summary.ordering, summary.ordering)]
    report.write_matrix_csv(outdir / f"binmatrix_sqrt_by_{column}.csv", ordered)
    report.render_heatmap(outdir / f"histogram_sqrt_by_{column}.png", ordered,
                          title=f"sqrt bins ordered by mean {column}")
    click.echo(json.dumps(report._roundtree(summary.to_dict()), sort_keys=True))


if __name__ == "__main__":
    main()
