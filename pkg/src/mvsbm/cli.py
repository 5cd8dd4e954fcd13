"""Command-line entry points: sample, cluster, sweep, bounds, stats.

Exit codes: 0 success, 2 usage error, 3 I/O or parse failure, 4 numeric or
degenerate-statistics failure.
"""

from __future__ import annotations

import functools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from mvsbm import __version__
from mvsbm.baselines import early_fusion_cluster, union_edge_stats
from mvsbm.bounds import BoundParams, blackbox_lower_bound_t, excess_info
from mvsbm.estimators import EstimatorConfig, PairwiseEstimate
from mvsbm.fusion import (
    accumulate_scores,
    build_topk_graph,
    late_fusion_cluster,
    second_moment_rounding,
)
from mvsbm.graph_core import (
    BelowThresholdError,
    DegenerateStatisticsError,
    InsufficientDataError,
    InvalidParameterError,
    MVInstance,
    ParseError,
    RngHandle,
    ViewParams,
    load_instance,
    sample_mv_instance,
    save_instance,
)
from mvsbm.metrics import agreement

SOFT_VERTEX_LIMIT = 20_000
SWEEP_PARAMS = ("n", "k", "t", "d", "eps")
FUSION_METHODS = ("late", "early-louvain", "early-spectral")
ESTIMATOR_METHODS = ("combined", "degree_product", "spectral", "louvain", "oracle")
SWEEP_HEADER = "param,value,method,mean_agreement,std_agreement,trials,seed,elapsed_ms"
BOUNDS_HEADER = "k,rho,alpha_bar,tau,C,l_beta,t_min"


class IOFailure(click.ClickException):
    exit_code = 3


class NumericFailure(click.ClickException):
    exit_code = 4


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except ParseError as exc:
            raise IOFailure(str(exc)) from exc
        except OSError as exc:
            raise IOFailure(str(exc)) from exc
        except (
            BelowThresholdError,
            DegenerateStatisticsError,
            InsufficientDataError,
            InvalidParameterError,
        ) as exc:
            raise NumericFailure(str(exc)) from exc

    return wrapper


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings for one sweep invocation."""

    n: int
    k: int
    t: int
    d: float
    eps: float
    param: str
    values: tuple
    methods: tuple
    estimator: str
    trials: int
    seed: int
    output: str


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: object
    method: str
    mean_agreement: float
    std_agreement: float
    trials: int
    seed: int
    elapsed_ms: int


def _resolve_seed(seed) -> int:
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
        click.echo(f"seed: {seed}")
    return int(seed)


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IOFailure(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise IOFailure(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise IOFailure("config must be a JSON object")
    return data


def _pick(flag, config: dict, key: str, default):
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _require_positive_int(name: str, value, minimum: int = 1) -> int:
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise click.UsageError(f"{name} must be an integer, got {value!r}")
    if out < minimum:
        raise click.UsageError(f"{name} must be at least {minimum}, got {out}")
    return out


def _check_vertex_budget(n: int, allow_large: bool) -> None:
    if n > SOFT_VERTEX_LIMIT and not allow_large:
        raise click.UsageError(
            f"n={n} exceeds the soft limit {SOFT_VERTEX_LIMIT} "
            "(dense estimators scale as n^2); pass --allow-large to override"
        )


def _check_view_params(n: int, d: float, eps: float) -> ViewParams:
    try:
        params = ViewParams(d=float(d), eps=float(eps))
    except InvalidParameterError as exc:
        raise click.UsageError(str(exc))
    if (1 + params.eps / 2) * params.d / max(n, 1) > 1.0:
        raise click.UsageError(
            f"edge probability (1 + eps/2) * d / n exceeds 1 for n={n}, d={d}, eps={eps}"
        )
    return params


def _parse_values(raw, integral: bool) -> tuple:
    """Accepts a single number, "lo:hi:step", or a comma list."""
    if isinstance(raw, (list, tuple)):
        values = [float(v) for v in raw]
    else:
        text = str(raw).strip()
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise click.UsageError(f"range must be lo:hi:step, got {text!r}")
            try:
                lo, hi, step = (float(p) for p in parts)
            except ValueError:
                raise click.UsageError(f"bad range {text!r}")
            if step <= 0 or hi < lo:
                raise click.UsageError(f"bad range {text!r}")
            count = int(np.floor((hi - lo) / step + 1e-9)) + 1
            values = [lo + step * i for i in range(count)]
        else:
            try:
                values = [float(p) for p in text.split(",") if p.strip() != ""]
            except ValueError:
                raise click.UsageError(f"bad value list {raw!r}")
    if not values:
        raise click.UsageError("empty sweep value list")
    if integral:
        out = []
        for v in values:
            if abs(v - round(v)) > 1e-9:
                raise click.UsageError(f"parameter requires integers, got {v}")
            out.append(int(round(v)))
        return tuple(out)
    return tuple(values)


def _parse_methods(raw) -> tuple:
    if isinstance(raw, (list, tuple)):
        items = [str(m) for m in raw]
    else:
        items = [m.strip() for m in str(raw).split(",") if m.strip()]
    seen = []
    for m in items:
        if m not in FUSION_METHODS:
            raise click.UsageError(
                f"unknown fusion method {m!r}; choose from {', '.join(FUSION_METHODS)}"
            )
        if m not in seen:
            seen.append(m)
    if not seen:
        raise click.UsageError("no fusion methods selected")
    return tuple(seen)


def _worker_count() -> int:
    raw = os.environ.get("MVSBM_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        workers = int(raw)
    except ValueError:
        raise click.UsageError(f"MVSBM_THREADS must be an integer, got {raw!r}")
    return max(1, workers)


def _oracle_estimates(instance: MVInstance) -> list:
    return [
        PairwiseEstimate(
            np.outer(instance.signs(l).signs, instance.signs(l).signs).astype(
                np.float64
            )
        )
        for l in range(instance.t)
    ]


def _cluster_once(
    instance: MVInstance, k: int, method: str, estimator: str, handle: RngHandle
):
    """Run one fusion method on one instance; returns the label estimate."""
    if method == "late":
        if estimator == "oracle":
            scores = accumulate_scores(_oracle_estimates(instance))
            neighborhoods = build_topk_graph(scores, k)
            return second_moment_rounding(neighborhoods, k, handle.generator())
        cfg = EstimatorConfig(method=estimator)
        graphs = [v.graph for v in instance.views]
        params = [v.params for v in instance.views]
        return late_fusion_cluster(graphs, params, k, cfg, handle.generator())
    if method == "early-louvain":
        return early_fusion_cluster(instance, k, "louvain", handle.generator())
    if method == "early-spectral":
        return early_fusion_cluster(instance, k, "spectral", handle.generator())
    raise InvalidParameterError(f"unknown fusion method {method!r}")


def _sweep_trial(task: tuple) -> tuple:
    """Evaluate every method on one sampled instance.  Runs in a worker."""
    (seed, value_index, trial_index, n, k, t, d, eps, methods, estimator) = task
    handle = RngHandle(seed).substream(value_index + 1).substream(trial_index + 1)
    instance = sample_mv_instance(n, k, [ViewParams(d, eps)] * t, handle.substream(0))
    out = {}
    for m_index, method in enumerate(methods):
        started = time.perf_counter()
        z_hat = _cluster_once(
            instance, k, method, estimator, handle.substream(1 + m_index)
        )
        elapsed = time.perf_counter() - started
        out[method] = (agreement(z_hat, instance.z, k), elapsed)
    return value_index, trial_index, out


def _sweep_tasks(cfg: ExperimentConfig) -> list:
    tasks = []
    for value_index, value in enumerate(cfg.values):
        n, k, t, d, eps = cfg.n, cfg.k, cfg.t, cfg.d, cfg.eps
        if cfg.param == "n":
            n = int(value)
        elif cfg.param == "k":
            k = int(value)
        elif cfg.param == "t":
            t = int(value)
        elif cfg.param == "d":
            d = float(value)
        elif cfg.param == "eps":
            eps = float(value)
        _check_view_params(n, d, eps)
        if k < 2 or k > n:
            raise click.UsageError(f"need 2 <= k <= n at swept value {value}")
        for trial_index in range(cfg.trials):
            tasks.append(
                (
                    cfg.seed,
                    value_index,
                    trial_index,
                    n,
                    k,
                    t,
                    d,
                    eps,
                    cfg.methods,
                    cfg.estimator,
                )
            )
    return tasks


def run_sweep(cfg: ExperimentConfig) -> list:
    """Execute a sweep and aggregate per-(value, method) rows."""
    tasks = _sweep_tasks(cfg)
    workers = min(_worker_count(), len(tasks)) or 1
    if workers == 1:
        outcomes = [_sweep_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_trial, tasks, chunksize=1))
    by_cell: dict = {}
    for value_index, _trial, per_method in outcomes:
        for method, (score, elapsed) in per_method.items():
            cell = by_cell.setdefault((value_index, method), ([], []))
            cell[0].append(score)
            cell[1].append(elapsed)
    rows = []
    for value_index, value in enumerate(cfg.values):
        for method in sorted(cfg.methods):
            scores, elapsed = by_cell[(value_index, method)]
            arr = np.asarray(scores, dtype=np.float64)
            std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            rows.append(
                SweepRow(
                    param=cfg.param,
                    value=value,
                    method=method,
                    mean_agreement=float(arr.mean()),
                    std_agreement=std,
                    trials=arr.size,
                    seed=cfg.seed,
                    elapsed_ms=int(round(sum(elapsed) * 1000)),
                )
            )
    rows.sort(key=lambda r: (float(r.value), r.method))
    return rows


def _fmt_value(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), "g")


def sweep_rows_to_csv(rows) -> str:
    lines = [SWEEP_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                (
                    r.param,
                    _fmt_value(r.value),
                    r.method,
                    f"{r.mean_agreement:.6f}",
                    f"{r.std_agreement:.6f}",
                    str(r.trials),
                    str(r.seed),
                    str(r.elapsed_ms),
                )
            )
        )
    return "\n".join(lines) + "\n"


def _write_text(path: str, text: str) -> None:
    if path == "-":
        click.echo(text, nl=False)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IOFailure(str(exc)) from exc


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=__version__, prog_name="mvsbm")
def main() -> None:
    """Multi-view stochastic block model tools: samplers, clustering,
    parameter sweeps, information bounds, and union-graph diagnostics."""


@main.command("sample")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--n", type=int, default=None, help="vertices")
@click.option("--k", type=int, default=None, help="communities")
@click.option("--t", type=int, default=None, help="views")
@click.option("--d", type=float, default=None, help="expected degree")
@click.option("--eps", type=float, default=None, help="affinity in [0, 2]")
@click.option("--count", type=int, default=None, help="instances to draw")
@click.option("--seed", type=int, default=None)
@click.option("--output", type=click.Path(), default=None, required=False)
@click.option("--allow-large", is_flag=True, default=False)
@_guarded
def cmd_sample(config_path, n, k, t, d, eps, count, seed, output, allow_large):
    """Draw multi-view instances and write them to disk."""
    config = _load_config(config_path)
    n = _require_positive_int("n", _pick(n, config, "n", 1000), minimum=2)
    k = _require_positive_int("k", _pick(k, config, "k", 2))
    t = _require_positive_int("t", _pick(t, config, "t", 1))
    count = _require_positive_int("count", _pick(count, config, "count", 1))
    d = float(_pick(d, config, "d", 40.0))
    eps = float(_pick(eps, config, "eps", 1.0))
    seed = _resolve_seed(_pick(seed, config, "seed", None))
    output = _pick(output, config, "output", None)
    if output is None:
        raise click.UsageError("an --output path is required")
    _check_vertex_budget(n, allow_large)
    params = _check_view_params(n, d, eps)
    handle = RngHandle(seed)
    for index in range(count):
        instance = sample_mv_instance(n, k, [params] * t, handle.substream(index))
        path = output if count == 1 else f"{output}.{index:03d}"
        save_instance(instance, path)
        edges = ", ".join(str(v.graph.num_edges) for v in instance.views)
        click.echo(f"wrote {path} (n={n}, k={k}, t={t}, edges per view: {edges})")


def _per_view_correlations(instance: MVInstance, estimator: str):
    """Realized same-sign minus cross-sign mean of each view's estimate."""
    from mvsbm.estimators import (
        combined_pairwise_estimate,
        degree_product_estimate,
        louvain_pairwise_estimate,
        spectral_pairwise_estimate,
    )

    results = []
    for l, view in enumerate(instance.views):
        signs = instance.signs(l).signs.astype(np.float64)
        handle = RngHandle(instance.seed).substream(7001 + l)
        if estimator == "oracle":
            est = PairwiseEstimate(np.outer(signs, signs))
        elif estimator == "combined":
            est = combined_pairwise_estimate(
                view.graph, view.params, EstimatorConfig(), handle.generator()
            )
        elif estimator == "degree_product":
            est = degree_product_estimate(view.graph, view.params)
        elif estimator == "spectral":
            est = spectral_pairwise_estimate(view.graph, view.params)
        elif estimator == "louvain":
            est = louvain_pairwise_estimate(view.graph, handle.generator())
        else:
            raise InvalidParameterError(f"unknown estimator {estimator!r}")
        values = est.values
        n = instance.n
        trace = float(np.trace(values))
        total = (float(values.sum()) - trace) / 2.0
        signed = (float(signs @ values @ signs) - trace) / 2.0
        n_plus = int(np.count_nonzero(signs > 0))
        n_minus = n - n_plus
        pairs_same = n_plus * (n_plus - 1) // 2 + n_minus * (n_minus - 1) // 2
        pairs_diff = n_plus * n_minus
        if pairs_same == 0 or pairs_diff == 0:
            results.append((l, float("nan")))
            continue
        sum_same = (total + signed) / 2.0
        sum_diff = (total - signed) / 2.0
        results.append((l, sum_same / pairs_same - sum_diff / pairs_diff))
    return results


@main.command("cluster")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--input", "input_path", type=click.Path(), default=None)
@click.option("--method", type=str, default=None, help="late | early-louvain | early-spectral")
@click.option(
    "--estimator",
    type=str,
    default=None,
    help="combined | degree_product | spectral | louvain | oracle",
)
@click.option("--k", type=int, default=None, help="clusters (default: true k)")
@click.option("--seed", type=int, default=None)
@click.option("--allow-large", is_flag=True, default=False)
@_guarded
def cmd_cluster(config_path, input_path, method, estimator, k, seed, allow_large):
    """Cluster a stored instance and report agreement with the true labels."""
    config = _load_config(config_path)
    input_path = _pick(input_path, config, "input", None)
    if input_path is None:
        raise click.UsageError("an --input instance file is required")
    method = str(_pick(method, config, "method", "late"))
    if method not in FUSION_METHODS:
        raise click.UsageError(f"unknown fusion method {method!r}")
    estimator = str(_pick(estimator, config, "estimator", "combined"))
    if estimator not in ESTIMATOR_METHODS:
        raise click.UsageError(f"unknown estimator {estimator!r}")
    seed = _resolve_seed(_pick(seed, config, "seed", None))
    instance = load_instance(input_path)
    _check_vertex_budget(instance.n, allow_large)
    k = _require_positive_int("k", _pick(k, config, "k", instance.z.k), minimum=2)
    if k > instance.n:
        raise click.UsageError(f"k={k} exceeds n={instance.n}")
    started = time.perf_counter()
    z_hat = _cluster_once(instance, k, method, estimator, RngHandle(seed))
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    score = agreement(z_hat, instance.z, k)
    click.echo(f"agreement {score:.6f}")
    click.echo(f"runtime_ms {elapsed_ms:.1f}")
    for l, c_hat in _per_view_correlations(instance, estimator):
        click.echo(f"view {l} c_hat {c_hat:.6f}")


@main.command("sweep")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--n", type=int, default=None)
@click.option("--k", type=int, default=None)
@click.option("--t", type=int, default=None)
@click.option("--d", type=float, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--param", type=str, default=None, help="swept parameter name")
@click.option("--values", type=str, default=None, help='"lo:hi:step" or comma list')
@click.option("--methods", type=str, default=None, help="comma list of fusion methods")
@click.option("--estimator", type=str, default=None, help="per-view estimator for late fusion")
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--output", type=click.Path(), default=None, help="CSV path or - for stdout")
@click.option("--allow-large", is_flag=True, default=False)
@_guarded
def cmd_sweep(
    config_path,
    n,
    k,
    t,
    d,
    eps,
    param,
    values,
    methods,
    estimator,
    trials,
    seed,
    output,
    allow_large,
):
    """Sweep one parameter, clustering fresh instances at every value.

    Writes one CSV row per (value, method), sorted by value then method.
    All methods at a given value and trial index share the same instance.
    """
    config = _load_config(config_path)
    n = _require_positive_int("n", _pick(n, config, "n", 1000), minimum=2)
    k = _require_positive_int("k", _pick(k, config, "k", 2), minimum=2)
    t = _require_positive_int("t", _pick(t, config, "t", 1))
    d = float(_pick(d, config, "d", 40.0))
    eps = float(_pick(eps, config, "eps", 1.0))
    trials = _require_positive_int("trials", _pick(trials, config, "trials", 20))
    param = str(_pick(param, config, "param", "eps"))
    if param not in SWEEP_PARAMS:
        raise click.UsageError(
            f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}"
        )
    raw_values = _pick(values, config, "values", None)
    if raw_values is None:
        raise click.UsageError("--values is required (or put values in the config)")
    values = _parse_values(raw_values, integral=param in ("n", "k", "t"))
    methods = _parse_methods(_pick(methods, config, "methods", "late,early-louvain"))
    estimator = str(_pick(estimator, config, "estimator", "combined"))
    if estimator not in ESTIMATOR_METHODS:
        raise click.UsageError(f"unknown estimator {estimator!r}")
    seed = _resolve_seed(_pick(seed, config, "seed", None))
    output = _pick(output, config, "output", None)
    if output is None:
        raise click.UsageError("an --output path is required (use - for stdout)")
    largest_n = max([int(v) for v in values] if param == "n" else [n])
    _check_vertex_budget(largest_n, allow_large)
    cfg = ExperimentConfig(
        n=n,
        k=k,
        t=t,
        d=d,
        eps=eps,
        param=param,
        values=values,
        methods=methods,
        estimator=estimator,
        trials=trials,
        seed=seed,
        output=str(output),
    )
    rows = run_sweep(cfg)
    _write_text(cfg.output, sweep_rows_to_csv(rows))
    if cfg.output != "-":
        click.echo(f"wrote {cfg.output} ({len(rows)} rows)")


def _parse_float_list(raw, name: str) -> tuple:
    try:
        values = tuple(float(p) for p in str(raw).split(",") if p.strip() != "")
    except ValueError:
        raise click.UsageError(f"bad {name} list {raw!r}")
    if not values:
        raise click.UsageError(f"empty {name} list")
    return values


@main.command("bounds")
@click.option("--k", "k_raw", type=str, default="2", help="comma list of k values")
@click.option("--rho", "rho_raw", type=str, default="0.3", help="comma list of margins")
@click.option("--alpha-bar", "alpha_raw", type=str, default="0.5", help="comma list")
@click.option("--tau", type=float, default=1.0)
@click.option("--bigc", "big_c", type=float, default=1.0, help="constant C")
@click.option("--output", type=click.Path(), default="-")
@_guarded
def cmd_bounds(k_raw, rho_raw, alpha_raw, tau, big_c, output):
    """Tabulate the minimum number of views implied by the information bound."""
    ks = _parse_float_list(k_raw, "k")
    rhos = _parse_float_list(rho_raw, "rho")
    alphas = _parse_float_list(alpha_raw, "alpha-bar")
    lines = [BOUNDS_HEADER]
    for k_val in ks:
        k_int = _require_positive_int("k", k_val, minimum=2)
        for rho in rhos:
            if rho <= 0 or 1 / k_int + rho > 1:
                raise click.UsageError(
                    f"need 0 < rho and 1/k + rho <= 1, got k={k_int}, rho={rho}"
                )
            for alpha_bar in alphas:
                try:
                    params = BoundParams(
                        k=k_int, rho=rho, alpha_bar=alpha_bar, tau=tau, C=big_c
                    )
                except InvalidParameterError as exc:
                    raise click.UsageError(str(exc))
                l_beta = excess_info(1 / k_int + rho, k_int)
                t_min = blackbox_lower_bound_t(params)
                lines.append(
                    ",".join(
                        (
                            str(k_int),
                            format(rho, "g"),
                            format(alpha_bar, "g"),
                            format(tau, "g"),
                            format(big_c, "g"),
                            format(l_beta, ".12g"),
                            format(t_min, ".12g"),
                        )
                    )
                )
    _write_text(str(output), "\n".join(lines) + "\n")
    if str(output) != "-":
        click.echo(f"wrote {output} ({len(lines) - 1} rows)")


@main.command("stats")
@click.option("--input", "input_path", type=click.Path(), required=True)
@_guarded
def cmd_stats(input_path):
    """Union-graph edge statistics of a stored instance."""
    instance = load_instance(input_path)
    stats = union_edge_stats(instance)
    click.echo(f"n {instance.n}")
    click.echo(f"k {instance.z.k}")
    click.echo(f"t {instance.t}")
    click.echo(f"p_in_hat {stats.p_in_hat:.6g}")
    click.echo(f"p_out_hat {stats.p_out_hat:.6g}")
    click.echo(f"d_star_hat {stats.d_star_hat:.6g}")
    click.echo(f"eps_star_hat {stats.eps_star_hat:.6g}")
    click.echo(f"ks_ratio {stats.ks_ratio:.6g}")
    for l, view in enumerate(instance.views):
        click.echo(
            f"view {l} d {view.params.d:g} eps {view.params.eps:g} "
            f"delta {view.params.delta:.6g}"
        )


if __name__ == "__main__":
    main()
