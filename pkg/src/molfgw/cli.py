"""Command-line entry points: ``fgw``, ``conan``, ``bench``, ``validate``.

Exit codes: 0 success, 1 validation/input error, 2 numerical/solver error.
Errors print a single-line diagnostic to stderr. Output goes to --out
(written atomically) or stdout; bench reports additionally emit a CSV
mirror and a PNG figure next to the JSON.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from . import io as mio
from .barycenter import barycenter as solve_barycenter
from .encoders import Conformer, EncoderWeights, Molecule2D, parse_xyz
from .fgw import entropic_fgw
from .graphs import FgwParams, Loss, check_raw_graph
from .oracles import (
    convergence_experiment,
    runtime_scaling,
    wasserstein_bound_check,
)
from .pipeline import conan_forward

_LOSSES = {"l2": Loss.SQUARE, "kl": Loss.KL}


class _UserErrorMixin:
    """Exit 1 on argument/usage errors (click's default would exit 2).

    Exit code 2 is reserved for numerical/solver failures.
    """

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            return super().main(*args, **kwargs)
        except click.UsageError as exc:
            click.echo(f"error: {exc.format_message()}", err=True)
            sys.exit(1)
        except click.ClickException as exc:
            exc.show()
            sys.exit(1)
        except click.exceptions.Abort:
            sys.exit(130)


class _Group(_UserErrorMixin, click.Group):
    pass


class _Command(_UserErrorMixin, click.Command):
    pass


def _fail(msg: str, code: int):
    click.echo(msg, err=True)
    sys.exit(code)


def _require(value, flag: str):
    if value is None:
        _fail(f"missing required flag {flag}", 1)
    return value


def _load_graph(path):
    try:
        return mio.read_graph_json(path)
    except FileNotFoundError:
        _fail(f"no such file: {path}", 1)
    except (mio.SchemaError, json.JSONDecodeError, ValueError) as exc:
        _fail(f"invalid graph JSON {path}: {exc}", 1)


def _emit(obj, out):
    if out:
        mio.write_json(out, obj)
    else:
        click.echo(mio.dumps_json(obj))


def _threads(value):
    env = os.environ.get("FGW_THREADS")
    if value is not None:
        return value
    if env:
        return int(env)
    return os.cpu_count() or 1


def _solver_guard(func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except ValueError as exc:
        _fail(str(exc), 1)
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        _fail(f"solver error: {exc}", 2)


@click.group(cls=_Group)
def fgw():
    """Entropic Fused Gromov-Wasserstein distances and barycenters."""


@fgw.command("dist")
@click.option("--g1", "g1_path", type=str, default=None)
@click.option("--g2", "g2_path", type=str, default=None)
@click.option("--alpha", type=float, default=0.5)
@click.option("--epsilon", type=float, default=0.1)
@click.option("--loss", type=click.Choice(["l2", "kl"]), default="l2")
@click.option("--p", type=int, default=2)
@click.option("--inner-iters", type=int, default=30)
@click.option("--sinkhorn-iters", type=int, default=50)
@click.option("--tol", type=float, default=1e-6)
@click.option("--out", type=str, default=None)
def fgw_dist(g1_path, g2_path, alpha, epsilon, loss, p, inner_iters, sinkhorn_iters, tol, out):
    """Entropic FGW distance between two graph JSON files."""
    g1 = _load_graph(_require(g1_path, "--g1"))
    g2 = _load_graph(_require(g2_path, "--g2"))
    try:
        params = FgwParams(
            alpha=alpha,
            p=p,
            epsilon=epsilon,
            loss=_LOSSES[loss],
            inner_iters=inner_iters,
            sinkhorn_iters=sinkhorn_iters,
            tol=tol,
        )
    except ValueError as exc:
        _fail(str(exc), 1)
    res = _solver_guard(entropic_fgw, g1, g2, params)
    _emit(
        {
            "cost": res.cost,
            "value_entropic": res.value_entropic,
            "inner_iterations": res.inner_iterations,
            "converged": res.converged,
            "marginal_err": res.marginal_err,
        },
        out,
    )


@fgw.command("barycenter")
@click.option("--graphs", "graph_paths", type=str, multiple=True)
@click.option("--nbar", type=int, default=None)
@click.option("--alpha", type=float, default=0.5)
@click.option("--epsilon", type=float, default=0.1)
@click.option("--loss", type=click.Choice(["l2", "kl"]), default="l2")
@click.option("--outer-iters", type=int, default=10)
@click.option("--inner-iters", type=int, default=30)
@click.option("--sinkhorn-iters", type=int, default=50)
@click.option("--tol", type=float, default=1e-6)
@click.option("--emit-couplings", is_flag=True, default=False)
@click.option("--threads", type=int, default=None)
@click.option("--out", type=str, default=None)
def fgw_barycenter(
    graph_paths, nbar, alpha, epsilon, loss, outer_iters, inner_iters,
    sinkhorn_iters, tol, emit_couplings, threads, out,
):
    """Entropic FGW barycenter of a set of graph JSON files."""
    if not graph_paths:
        _fail("missing required flag --graphs", 1)
    _require(out, "--out")
    graphs = [_load_graph(p) for p in graph_paths]
    params = FgwParams(
        alpha=alpha,
        epsilon=epsilon,
        loss=_LOSSES[loss],
        outer_iters=outer_iters,
        inner_iters=inner_iters,
        sinkhorn_iters=sinkhorn_iters,
        tol=tol,
    )
    res = _solver_guard(
        solve_barycenter, graphs, params, n_bar=nbar, threads=_threads(threads)
    )
    payload = mio.graph_to_dict(res.graph)
    payload["trace"] = res.objective_trace
    payload["outer_iterations"] = res.outer_iterations
    payload["converged"] = res.converged
    if emit_couplings:
        payload["couplings"] = [pi.tolist() for pi in res.couplings]
    _emit(payload, out)


def _load_mol2d(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
        return Molecule2D(
            node_features=np.array(obj["node_features"], float),
            edges=obj.get("edges", []),
            edge_features=(
                np.array(obj["edge_features"], float)
                if obj.get("edge_features")
                else None
            ),
        )
    except FileNotFoundError:
        _fail(f"no such file: {path}", 1)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        _fail(f"invalid 2D molecule JSON {path}: {exc}", 1)


@click.group(cls=_Group)
def conan():
    """Conformer-aggregation forward pass."""


@conan.command("forward")
@click.option("--graph2d", type=str, default=None)
@click.option("--conformers", "conformers_path", type=str, default=None)
@click.option("--k", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--dim", type=int, default=16)
@click.option("--layers", type=int, default=3)
@click.option("--alpha", type=float, default=0.5)
@click.option("--epsilon", type=float, default=0.1)
@click.option("--threads", type=int, default=None)
@click.option("--out", type=str, default=None)
def conan_forward_cmd(
    graph2d, conformers_path, k, seed, dim, layers, alpha, epsilon, threads, out
):
    """Invariant prediction from a 2D molecule JSON and a multi-frame XYZ."""
    mol = _load_mol2d(_require(graph2d, "--graph2d"))
    _require(conformers_path, "--conformers")
    _require(seed, "--seed")
    try:
        with open(conformers_path) as fh:
            confs = parse_xyz(fh.read())
    except FileNotFoundError:
        _fail(f"no such file: {conformers_path}", 1)
    except ValueError as exc:
        _fail(f"invalid XYZ {conformers_path}: {exc}", 1)
    if k is not None:
        if k < 1 or k > len(confs):
            _fail(f"--k must be in [1, {len(confs)}]", 1)
        confs = confs[:k]
    enc = EncoderWeights(
        seed=seed,
        d=dim,
        n_layers=layers,
        feat2d_dim=mol.node_features.shape[1],
        edge_feat_dim=(
            mol.edge_features.shape[1] if mol.edge_features is not None else 0
        ),
    )
    params = FgwParams(alpha=alpha, epsilon=epsilon)
    res = _solver_guard(
        conan_forward, mol, confs, enc, params, threads=_threads(threads)
    )
    _emit(
        {
            "y_hat": res.y_hat,
            "h2d": res.h2d.tolist(),
            "h3d": res.h3d_per_conf.tolist(),
            "h_bc": res.h_bc.tolist(),
            "barycenter_summary": {
                "n": res.barycenter.graph.n,
                "outer_iterations": res.barycenter.outer_iterations,
                "converged": res.barycenter.converged,
                "trace": res.barycenter.objective_trace,
            },
        },
        out,
    )


def _random_base_conformer(n, seed):
    rng = np.random.default_rng([seed, 7919])
    Z = tuple(int(z) for z in rng.choice([1, 6, 7, 8], size=n))
    R = rng.normal(0.0, 1.5, size=(n, 3))
    return Conformer(Z=Z, R=R)


def _bench_outputs(out, payload, csv_header, csv_rows, plot_fn, plot_arg):
    mio.write_json(out, payload)
    stem = out[:-5] if out.endswith(".json") else out
    mio.write_csv(stem + ".csv", csv_header, csv_rows)
    plot_fn(plot_arg, stem + ".png")


@click.group(cls=_Group)
def bench():
    """Oracle and scaling benchmarks with JSON/CSV/PNG reports."""


@bench.command("convergence")
@click.option("--n", type=int, default=8)
@click.option("--sigma", type=float, default=0.1)
@click.option("--kmax", type=int, default=32)
@click.option("--trials", type=int, default=20)
@click.option("--seed", type=int, default=7)
@click.option("--dim", type=int, default=8)
@click.option("--epsilon", type=float, default=0.1)
@click.option("--outer-iters", type=int, default=5)
@click.option("--inner-iters", type=int, default=10)
@click.option("--sinkhorn-iters", type=int, default=30)
@click.option("--out", type=str, default=None)
def bench_convergence(n, sigma, kmax, trials, seed, dim, epsilon, outer_iters, inner_iters, sinkhorn_iters, out):
    """Empirical barycenter convergence rate versus the ensemble size."""
    _require(out, "--out")
    k_values = []
    k = 2
    while k <= kmax:
        k_values.append(k)
        k *= 2
    base = _random_base_conformer(n, seed)
    enc = EncoderWeights(seed=seed, d=dim)
    params = FgwParams(
        epsilon=epsilon,
        outer_iters=outer_iters,
        inner_iters=inner_iters,
        sinkhorn_iters=sinkhorn_iters,
        tol=1e-5,
    )
    report = _solver_guard(
        convergence_experiment, base, sigma, k_values, trials, enc, params, seed
    )
    from .plots import plot_convergence

    payload = {
        "k_values": report.k_values,
        "mean_sq_fgw": report.mean_sq_fgw,
        "slope": report.slope,
        "trials": report.trials,
        "seed": report.seed,
    }
    rows = list(zip(report.k_values, report.mean_sq_fgw))
    _bench_outputs(out, payload, ["k", "mean_sq_fgw"], rows, plot_convergence, report)


@bench.command("runtime")
@click.option("--kvalues", type=str, default="1,2,4,8,16,32")
@click.option("--n", type=int, default=16)
@click.option("--d", type=int, default=16)
@click.option("--repeats", type=int, default=5)
@click.option("--outer-iters", type=int, default=3)
@click.option("--inner-iters", type=int, default=5)
@click.option("--sinkhorn-iters", type=int, default=10)
@click.option("--out", type=str, default=None)
def bench_runtime(kvalues, n, d, repeats, outer_iters, inner_iters, sinkhorn_iters, out):
    """Barycenter wall time versus K at fixed iteration caps."""
    _require(out, "--out")
    k_values = [int(v) for v in kvalues.split(",") if v.strip()]
    if len(k_values) < 3:
        _fail("--kvalues needs at least 3 entries", 1)
    # tol=0 disables early exit so work is exactly proportional to K
    params = FgwParams(
        outer_iters=outer_iters,
        inner_iters=inner_iters,
        sinkhorn_iters=sinkhorn_iters,
        tol=0.0,
    )
    report = _solver_guard(runtime_scaling, k_values, n, d, repeats, params)
    from .plots import plot_runtime

    payload = {
        "k_values": report.k_values,
        "mean_seconds": report.mean_seconds,
        "ratios": report.ratios,
        "repeats": report.repeats,
    }
    rows = list(zip(report.k_values, report.mean_seconds))
    _bench_outputs(out, payload, ["k", "mean_seconds"], rows, plot_runtime, report)


@bench.command("bound")
@click.option("--pairs", type=int, default=20)
@click.option("--n", type=int, default=6)
@click.option("--sigma", type=float, default=0.1)
@click.option("--alpha", type=float, default=0.5)
@click.option("--epsilon", type=float, default=0.01)
@click.option("--seed", type=int, default=7)
@click.option("--dim", type=int, default=8)
@click.option("--out", type=str, default=None)
def bench_bound(pairs, n, sigma, alpha, epsilon, seed, dim, out):
    """FGW <= Wasserstein upper-bound check on aligned conformer pairs."""
    from .encoders import conformer_to_graph, perturb_conformer
    from .plots import plot_bound

    enc = EncoderWeights(seed=seed, d=dim)
    results = []
    for i in range(pairs):
        base = _random_base_conformer(n, seed + 1000 * (i + 1))
        c1 = perturb_conformer(base, sigma, seed=[seed, i, 0])
        c2 = perturb_conformer(base, sigma, seed=[seed, i, 1])
        g1 = conformer_to_graph(c1, enc)
        g2 = conformer_to_graph(c2, enc)
        results.append(
            _solver_guard(wasserstein_bound_check, g1, g2, alpha, 2, epsilon)
        )
    payload = {
        "pairs": pairs,
        "holds_all": all(r["holds"] for r in results),
        "results": results,
    }
    if out:
        rows = [(i, r["fgw_cost"], r["w_bound"], r["holds"]) for i, r in enumerate(results)]
        _bench_outputs(
            out, payload, ["pair", "fgw_cost", "w_bound", "holds"], rows, plot_bound, results
        )
    else:
        click.echo(mio.dumps_json(payload))
    if not payload["holds_all"]:
        sys.exit(2)


@click.command(cls=_Command)
@click.option("--graph", "graph_path", type=str, default=None)
def validate(graph_path):
    """Validate a graph JSON file against the structural invariants."""
    path = _require(graph_path, "--graph")
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        _fail(f"no such file: {path}", 1)
    except json.JSONDecodeError as exc:
        _fail(f"invalid JSON {path}: {exc}", 1)
    try:
        for key in ("H", "A"):
            if key not in obj:
                raise mio.SchemaError(f"missing required field {key!r}")
        report = check_raw_graph(obj["H"], obj["A"], obj.get("omega"))
    except (mio.SchemaError, ValueError) as exc:
        _fail(str(exc), 1)
    if report.ok:
        click.echo("pass")
    else:
        for v in report.violations:
            click.echo(v, err=True)
        sys.exit(1)
