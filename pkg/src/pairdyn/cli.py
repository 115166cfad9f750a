"""Command-line interface.

Every command accepts ``--config FILE`` (TOML; top-level keys apply to all
commands, ``[command]`` sections to one command; flags override both) and
writes its artifacts plus ``manifest.json`` into ``--out`` (default: the
``PAIRDYN_OUT`` environment variable, else the working directory).

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import __version__
from . import config_space as cs
from . import svg
from .analysis import NumericalError, find_equilibria, integrate
from .mc import GraphConstructionError, SimConfig, drift_sign_test, run, validate_closure
from .payoffs import GAMES, GameParams, LinearPayoff, PayoffModel, build_game, load_payoff_file, model_document
from .replicator import ReplicatorSystem
from .thresholds import edge_equilibrium_fractions, parse_range, phase_diagram, thresholds

OUT_ENV = "PAIRDYN_OUT"
EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 2, 3, 4


# -- parameter types ------------------------------------------------------------------


class Vector(click.ParamType):
    """Comma-separated floats (or a list when read from a config file)."""

    name = "vector"

    def convert(self, value, param, ctx):
        if isinstance(value, np.ndarray):
            return value
        try:
            items = value if isinstance(value, (list, tuple)) else str(value).split(",")
            return np.array([float(v) for v in items])
        except ValueError:
            self.fail(f"{value!r} is not a comma-separated list of numbers", param, ctx)


class Range(click.ParamType):
    """'lo:hi:step' or a comma list."""

    name = "range"

    def convert(self, value, param, ctx):
        if isinstance(value, np.ndarray):
            return value
        try:
            return parse_range(",".join(str(v) for v in value) if isinstance(value, list) else str(value))
        except ValueError as exc:
            self.fail(str(exc), param, ctx)


VECTOR, RANGE = Vector(), Range()


# -- shared plumbing ---------------------------------------------------------------------


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _jsonable_params(params: dict) -> dict:
    return json.loads(_dump_json(params))


class Outputs:
    """Collects written artifacts for the manifest."""

    def __init__(self, out: Optional[str]) -> None:
        self.dir = Path(out or os.environ.get(OUT_ENV) or ".")
        self.files: dict[str, str] = {}
        self.start = time.perf_counter()
        self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def manifest(self, command: str, params: dict, model: Optional[PayoffModel] = None, seeds=None) -> None:
        doc = {
            "command": command,
            "parameters": _jsonable_params(params),
            "seeds": seeds,
            "versions": {
                "pairdyn": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "outputs": self.files,
            "wall_time_s": round(time.perf_counter() - self.start, 6),
            "replay": "pairdyn replay manifest.json",
        }
        if model is not None:
            doc["payoff"] = model_document(model)
        (self.dir / "manifest.json").write_text(_dump_json(doc), encoding="utf-8")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(v: float) -> str:
    return repr(float(v))


def model_options(func):
    opts = [
        click.option("--game", type=click.Choice(sorted(GAMES)), default="peer", show_default=True, help="Built-in game."),
        click.option("--payoff-file", type=click.Path(dir_okay=False), default=None, help="Custom payoff (JSON/TOML); overrides --game."),
        click.option("--k", type=int, default=4, show_default=True, help="Degree = number of co-players."),
        click.option("--r", type=float, default=3.0, show_default=True, help="Synergy factor."),
        click.option("--c", "cost", type=float, default=1.0, show_default=True, help="Contribution cost."),
        click.option("--alpha", type=float, default=0.7, show_default=True, help="Punishment cost."),
        click.option("--beta", type=float, default=5.0, show_default=True, help="Punishment fine."),
    ]
    for opt in reversed(opts):
        func = opt(func)
    return func


def out_options(func):
    func = click.option("--format", "formats", type=click.Choice(["csv", "json", "svg"]), multiple=True, help="Artifacts to write (repeatable; default all).")(func)
    return click.option("--out", type=click.Path(file_okay=False), default=None, help=f"Output directory (default ${OUT_ENV} or cwd).")(func)


def build_model(game, payoff_file, k, r, cost, alpha, beta) -> PayoffModel:
    if payoff_file:
        model = load_payoff_file(payoff_file)
        if model.k != k and click.get_current_context().get_parameter_source("k") == click.core.ParameterSource.COMMANDLINE:
            raise ValueError(f"--k {k} conflicts with k={model.k} in {payoff_file}")
        return model
    if game == "pgg":
        alpha = beta = 0.0
    return build_game(game, GameParams(r, cost, alpha, beta), k)


def _formats(formats) -> set[str]:
    return set(formats) if formats else {"csv", "json", "svg"}


def _check_state(x: np.ndarray, n: int, name: str) -> np.ndarray:
    if x.size != n:
        raise click.BadParameter(f"needs {n} entries for this game, got {x.size}", param_hint=name)
    if np.any(x < 0) or abs(x.sum() - 1) > 1e-9:
        raise click.BadParameter(f"{x.tolist()} must be non-negative and sum to 1", param_hint=name)
    return x


# -- config files ------------------------------------------------------------------------


def _load_config(path: str) -> dict:
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _default_map(doc: dict, group: click.Group) -> dict:
    commands = {name: cmd for name, cmd in group.commands.items()}
    top = {k.replace("-", "_"): v for k, v in doc.items() if not isinstance(v, dict)}
    known = {p.name for cmd in commands.values() for p in getattr(cmd, "params", [])}
    for key in top:
        if key not in known:
            raise click.BadParameter(f"unknown config key {key!r}", param_hint="--config")
    out = {}
    for name, cmd in commands.items():
        names = {p.name for p in getattr(cmd, "params", [])}
        section = {k.replace("-", "_"): v for k, v in doc.get(name, {}).items()}
        for key in section:
            if key not in names:
                raise click.BadParameter(f"[{name}] has unknown key {key!r}", param_hint="--config")
        out[name] = {**{k: v for k, v in top.items() if k in names}, **section}
    for key, val in doc.items():
        if isinstance(val, dict) and key not in commands:
            raise click.BadParameter(f"unknown config section [{key}]", param_hint="--config")
    return out


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None, help="TOML config file.")
@click.version_option(__version__, prog_name="pairdyn")
@click.pass_context
def cli(ctx: click.Context, config: Optional[str]) -> None:
    """Pair-approximation replicator dynamics for multiplayer games on regular graphs."""
    if config:
        ctx.default_map = _default_map(_load_config(config), cli)


# -- rhs -------------------------------------------------------------------------------


def rhs_document(system: ReplicatorSystem, x: np.ndarray) -> dict:
    return {
        "x": [float(v) for v in x],
        "rhs": [float(v) for v in system.rhs(x)],
        "path": system.active_path,
        "rule": system.rule,
        "strategies": list(system.model.strategies),
    }


@cli.command()
@model_options
@click.option("--rule", type=click.Choice(["pc", "db", "wm"]), default="pc", show_default=True)
@click.option("--delta", type=float, default=1.0, show_default=True, help="Selection strength (time scale only).")
@click.option("--path", "engine", type=click.Choice(["auto", "general", "linear"]), default="auto", show_default=True)
@click.option("--x", "x", type=VECTOR, required=True, help="State, e.g. 0.3,0.3,0.4.")
@click.option("--json", "as_json", is_flag=True, help="Print JSON.")
def rhs(game, payoff_file, k, r, cost, alpha, beta, rule, delta, engine, x, as_json):
    """Print the replicator velocity at a state and the engine path used."""
    model = build_model(game, payoff_file, k, r, cost, alpha, beta)
    x = _check_state(x, model.n, "--x")
    doc = rhs_document(ReplicatorSystem(model, rule, delta, engine), x)
    if as_json:
        click.echo(json.dumps(doc, sort_keys=True))
    else:
        click.echo("rhs:  " + ", ".join(_num(v) for v in doc["rhs"]))
        click.echo(f"path: {doc['path']}")


# -- integrate ---------------------------------------------------------------------------


@cli.command("integrate")
@model_options
@click.option("--rule", type=click.Choice(["pc", "db", "wm"]), default="pc", show_default=True)
@click.option("--delta", type=float, default=1.0, show_default=True)
@click.option("--x0", type=VECTOR, required=True, help="Initial state.")
@click.option("--t-max", type=float, default=1000.0, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@out_options
def integrate_cmd(game, payoff_file, k, r, cost, alpha, beta, rule, delta, x0, t_max, tol, out, formats):
    """Integrate from x0.

    \b
    trajectory.csv : t, x1..xn
    trajectory.json: terminal_reason, final state, step count
    trajectory.svg : ternary plot (n = 3) or line chart
    """
    params = dict(click.get_current_context().params)
    model = build_model(game, payoff_file, k, r, cost, alpha, beta)
    x0 = _check_state(x0, model.n, "--x0")
    if t_max <= 0 or tol <= 0:
        raise ValueError("--t-max and --tol must be positive")
    traj = integrate(ReplicatorSystem(model, rule, delta), x0, t_max=t_max, tol=tol)
    fmt, outs = _formats(formats), Outputs(out)
    if "csv" in fmt:
        outs.write(
            "trajectory.csv",
            _csv(["t"] + [f"x{i + 1}" for i in range(model.n)], ([_num(t)] + [_num(v) for v in s] for t, s in zip(traj.times, traj.states))),
        )
    if "json" in fmt:
        outs.write("trajectory.json", _dump_json({"terminal_reason": traj.terminal_reason, "final": traj.final, "t_end": traj.times[-1], "steps": len(traj.times) - 1}))
    if "svg" in fmt:
        pic = svg.ternary([traj.states], model.strategies) if model.n == 3 else svg.line_chart(traj.times, traj.states, model.strategies)
        outs.write("trajectory.svg", pic)
    outs.manifest("integrate", params, model)
    click.echo(f"{traj.terminal_reason} at t={traj.times[-1]:.6g}: x = " + ", ".join(f"{v:.6g}" for v in traj.final))


# -- equilibria ---------------------------------------------------------------------------


@cli.command()
@model_options
@click.option("--rule", type=click.Choice(["pc", "db", "wm"]), default="pc", show_default=True)
@out_options
def equilibria(game, payoff_file, k, r, cost, alpha, beta, rule, out, formats):
    """Find and classify all equilibria (n <= 4).

    \b
    equilibria.csv : point, kind, face, stability, eigenvalues
    equilibria.json: same plus transverse rates sampled along lines of equilibria
    """
    params = dict(click.get_current_context().params)
    model = build_model(game, payoff_file, k, r, cost, alpha, beta)
    eqs = find_equilibria(ReplicatorSystem(model, rule))
    fmt, outs = _formats(formats), Outputs(out)
    rows = [e.as_row() for e in eqs]
    if "csv" in fmt:
        cols = ["point", "kind", "face", "stability", "eigenvalues"]
        outs.write("equilibria.csv", _csv(cols, ([row[c] for c in cols] for row in rows)))
    if "json" in fmt:
        docs = []
        for e in eqs:
            d = {"point": e.point, "kind": e.kind, "face": list(e.face), "stability": e.stability,
                 "eigenvalues": [[v.real, v.imag] for v in np.atleast_1d(e.eigenvalues)]}
            if e.transverse is not None:
                d["transverse"] = {"points": e.samples, "rates": e.transverse}
            docs.append(d)
        outs.write("equilibria.json", _dump_json(docs))
    if "svg" in fmt and model.n == 3:
        outs.write("equilibria.svg", svg.ternary([], model.strategies, points=np.array([e.point for e in eqs])))
    outs.manifest("equilibria", params, model)
    for row in rows:
        click.echo(f"{row['kind']:<12} {row['stability']:<16} x=({row['point']})")


# -- thresholds ---------------------------------------------------------------------------


def _rational(v: float) -> str:
    if not np.isfinite(v):
        return str(v)
    f = Fraction(v).limit_denominator(10_000)
    return str(f) if abs(float(f) - v) < 1e-12 else f"{v:.12g}"


@cli.command("thresholds")
@click.option("--game", type=click.Choice(["peer", "pool"]), default="peer", show_default=True)
@click.option("--k", type=int, default=4, show_default=True)
@click.option("--r", type=float, required=True)
@click.option("--c", "cost", type=float, default=1.0, show_default=True)
@click.option("--alpha", type=float, default=None, help="Evaluate at this punishment cost as well.")
@out_options
def thresholds_cmd(game, k, r, cost, alpha, out, formats):
    """Critical fines as affine functions of alpha (and their values at --alpha).

    \b
    thresholds.json: {name: {intercept, slope, value?}}
    """
    params = dict(click.get_current_context().params)
    at0, at1 = thresholds(game, r, cost, 0.0, k), thresholds(game, r, cost, 1.0, k)
    at2 = thresholds(game, r, cost, 2.0, k)
    names = ["beta0_wm", "beta0", "beta_eq", "beta_star"]
    doc = {}
    for name in names:
        a, b = getattr(at0, name), getattr(at1, name) - getattr(at0, name)
        if abs(getattr(at2, name) - (a + 2 * b)) > 1e-9 * max(1.0, abs(a) + abs(b)):
            raise NumericalError(f"{name} is not affine in alpha")
        entry = {"intercept": a, "slope": b}
        if alpha is not None:
            entry["value"] = getattr(thresholds(game, r, cost, alpha, k), name)
        doc[name] = entry
        line = f"{name:<10} = {_rational(a)} + ({_rational(b)})*alpha    [{a:.12g} + {b:.12g}*alpha]"
        if alpha is not None:
            line += f"  -> {entry['value']:.12g}"
        click.echo(line)
    outs = Outputs(out)
    if "json" in _formats(formats):
        outs.write("thresholds.json", _dump_json({"game": game, "k": k, "r": r, "c": cost, "thresholds": doc}))
    outs.manifest("thresholds", params)


# -- phase ----------------------------------------------------------------------------------


@cli.command()
@click.option("--game", type=click.Choice(["peer", "pool"]), default="peer", show_default=True)
@click.option("--k", type=int, default=4, show_default=True)
@click.option("--r", type=float, required=True)
@click.option("--c", "cost", type=float, default=1.0, show_default=True)
@click.option("--alpha", "alphas", type=RANGE, default="0:1:0.05", show_default=True, help="lo:hi:step or list.")
@click.option("--beta", "betas", type=RANGE, default="0:8:0.1", show_default=True, help="lo:hi:step or list.")
@click.option("--population", type=click.Choice(["structured", "wellmixed"]), default="structured", show_default=True)
@click.option("--cross-validate", is_flag=True, help="Re-derive labels away from boundaries by integration.")
@click.option("--jobs", type=int, default=None, help="Worker processes (default: CPU count).")
@out_options
def phase(game, k, r, cost, alphas, betas, population, cross_validate, jobs, out, formats):
    """Phase diagram over (alpha, beta).

    \b
    phase.csv : alpha, beta, label
    phase.json: thresholds per alpha, cross-validation disagreements
    phase.svg : heatmap with the two boundary lines
    """
    params = dict(click.get_current_context().params)
    jobs = jobs or os.cpu_count() or 1
    grid = phase_diagram(game, alphas, betas, r, cost, k, population, cross_validate, jobs=jobs)
    ths = [thresholds(game, r, cost, a, k) for a in grid.alphas]
    lines = (
        {"beta0": [t.beta0 for t in ths], "beta_star": [t.beta_star for t in ths]}
        if population == "structured"
        else {"beta0_wm": [t.beta0_wm for t in ths]}
    )
    fmt, outs = _formats(formats), Outputs(out)
    if "csv" in fmt:
        outs.write("phase.csv", _csv(["alpha", "beta", "label"], ((_num(a), _num(b), lab) for a, b, lab in grid.rows())))
    if "json" in fmt:
        outs.write("phase.json", _dump_json({"alphas": grid.alphas, "thresholds": [t.as_dict() for t in ths],
                                             "cross_validated": cross_validate, "disagreements": grid.disagreements}))
    if "svg" in fmt:
        outs.write("phase.svg", svg.heatmap(grid.alphas, grid.betas, grid.labels, lines=lines, title=f"{game}, {population}, k={k}, r={r}"))
    outs.manifest("phase", params)
    counts = {lab: int(np.sum(grid.labels == lab)) for lab in sorted(set(grid.labels.ravel()))}
    click.echo(f"{grid.labels.size} cells: " + ", ".join(f"{k_}={v}" for k_, v in counts.items()))
    if cross_validate:
        click.echo(f"cross-validation disagreements: {len(grid.disagreements)}")


# -- simulation --------------------------------------------------------------------------------


def sim_options(default_delta: float):
    def deco(func):
        opts = [
            click.option("--rule", type=click.Choice(["pc", "db"]), default="pc", show_default=True),
            click.option("--N", "N", type=int, default=2000, show_default=True, help="Number of nodes."),
            click.option("--delta", type=float, default=default_delta, show_default=True),
            click.option("--x0", type=VECTOR, default=None, help="Initial frequencies (default uniform)."),
            click.option("--steps", type=int, default=200, show_default=True, help="Sweeps (N updates each)."),
            click.option("--measure-every", type=int, default=1, show_default=True),
            click.option("--replicas", type=int, default=20, show_default=True),
            click.option("--seed", type=int, default=0, show_default=True),
            click.option("--graph", type=click.Choice(["random", "ring"]), default="random", show_default=True),
            click.option("--graph-seed", type=int, default=None, help="Share one graph across replicas."),
            click.option("--jobs", type=int, default=None, help="Worker processes (default: CPU count)."),
        ]
        for opt in reversed(opts):
            func = opt(func)
        return func

    return deco


def _sim(model, rule, N, delta, x0, steps, measure_every, replicas, seed, graph, graph_seed, jobs):
    x0 = np.full(model.n, 1.0 / model.n) if x0 is None else _check_state(x0, model.n, "--x0")
    cfg = SimConfig(N, model.k, model, rule, delta, x0=x0, steps=steps, measure_every=measure_every,
                    replicas=replicas, seed=seed, graph=graph, graph_seed=graph_seed)
    return cfg, run(cfg, jobs=jobs or os.cpu_count() or 1)


@cli.command()
@model_options
@sim_options(default_delta=0.02)
@out_options
def simulate(game, payoff_file, k, r, cost, alpha, beta, rule, N, delta, x0, steps, measure_every, replicas, seed, graph, graph_seed, jobs, out, formats):
    """Agent-based simulation on a regular graph.

    \b
    simulation.csv : replica, sweep, x1..xn, q{j}|{i} (row-major, q[j|i])
    simulation.json: config echo, final means and standard errors, seeds
    simulation.svg : replica-mean frequencies against sweeps
    """
    params = dict(click.get_current_context().params)
    model = build_model(game, payoff_file, k, r, cost, alpha, beta)
    cfg, res = _sim(model, rule, N, delta, x0, steps, measure_every, replicas, seed, graph, graph_seed, jobs)
    fmt, outs = _formats(formats), Outputs(out)
    if "csv" in fmt:
        outs.write("simulation.csv", res.to_csv())
    if "json" in fmt:
        outs.write("simulation.json", _dump_json(res.summary()))
    if "svg" in fmt:
        outs.write("simulation.svg", svg.line_chart(res.sweeps, res.x.mean(axis=0), model.strategies, xlabel="sweep"))
    outs.manifest("simulate", params, model, seeds={"master": seed, "replicas": res.seeds})
    summ = res.summary()
    click.echo("final mean x: " + ", ".join(f"{m:.4f}±{s:.4f}" for m, s in zip(summ["final_mean"], summ["final_se"])))


@cli.command()
@model_options
@sim_options(default_delta=0.0)
@click.option("--burn-in", type=int, default=20, show_default=True, help="Sweeps skipped before averaging q.")
@out_options
def validate(game, payoff_file, k, r, cost, alpha, beta, rule, N, delta, x0, steps, measure_every, replicas, seed, graph, graph_seed, jobs, burn_in, out, formats):
    """Simulate, then compare measured edge frequencies with the closure (and drift signs if delta > 0).

    \b
    validation.csv : j, i, deviation, z
    validation.json: closure report; per-strategy drift sign tests vs the replicator rhs
    """
    params = dict(click.get_current_context().params)
    model = build_model(game, payoff_file, k, r, cost, alpha, beta)
    cfg, res = _sim(model, rule, N, delta, x0, steps, measure_every, replicas, seed, graph, graph_seed, jobs)
    rep = validate_closure(res, model.k, burn_in)
    doc = {"closure": rep.as_dict(), "config": res.config}
    if delta > 0:
        x_start = res.x[:, 0].mean(axis=0)
        velocity = ReplicatorSystem(model, rule).rhs(x_start)
        doc["drift"] = []
        for i in range(model.n):
            d = drift_sign_test(res, i)
            predicted = "decreasing" if velocity[i] < 0 else "increasing" if velocity[i] > 0 else "neutral"
            doc["drift"].append({"strategy": model.strategies[i], "direction": d.direction, "p_value": d.p_value,
                                 "negatives": d.negatives, "mean": d.mean, "se": d.se, "predicted": predicted})
    fmt, outs = _formats(formats), Outputs(out)
    if "csv" in fmt:
        rows = ((j, i, _num(rep.deviation[j, i]), _num(rep.z_scores[j, i])) for j in range(model.n) for i in range(model.n))
        outs.write("validation.csv", _csv(["j", "i", "deviation", "z"], rows))
    if "json" in fmt:
        outs.write("validation.json", _dump_json(doc))
    outs.manifest("validate", params, model, seeds={"master": seed, "replicas": res.seeds})
    click.echo(f"max |q_hat - closure| = {rep.max_abs_deviation:.3g} (burn-in {burn_in} sweeps)")
    for d in doc.get("drift", []):
        click.echo(f"drift {d['strategy']}: {d['direction']} (p={d['p_value']:.3g}), replicator predicts {d['predicted']}")


# -- games / payoff ---------------------------------------------------------------------------


@cli.group()
def games():
    """Built-in games."""


@games.command("list")
def games_list():
    """List built-in games and their strategies."""
    for name, (factory, desc) in sorted(GAMES.items()):
        strategies = factory(GameParams(3.0, 1.0, 0.5, 1.0), 4).strategies
        click.echo(f"{name:<6} {desc}  strategies: {', '.join(strategies)}")


@cli.group()
def payoff():
    """Payoff structures."""


@payoff.command("export")
@model_options
@click.option("--as", "kind", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
def payoff_export(game, payoff_file, k, r, cost, alpha, beta, kind, out):
    """Write the generalized payoff matrix (rows: focal strategy, columns: co-player configurations).

    \b
    payoff.json: loadable with --payoff-file
    payoff.csv : strategy, then one column per configuration "(k1 k2 ...)"
    """
    params = dict(click.get_current_context().params)
    model = build_model(game, payoff_file, k, r, cost, alpha, beta)
    outs = Outputs(out)
    if kind == "json":
        doc = model_document(model)
        if isinstance(model, LinearPayoff):  # export the full table too
            doc = {**doc, "table": model_document(PayoffModel(model.n, model.k, model.table, model.strategies, model.name))["table"]}
            doc.pop("linear")
        outs.write("payoff.json", _dump_json(doc))
    else:
        configs = cs.enumerate_configurations(model.n, model.k)
        header = ["strategy"] + ["(" + " ".join(map(str, c)) + ")" for c in configs]
        outs.write("payoff.csv", _csv(header, ([s] + [_num(v) for v in row] for s, row in zip(model.strategies, model.table))))
    outs.manifest("payoff export", params, model)
    click.echo(f"{model.name}: {model.n} strategies x {cs.count_configurations(model.n, model.k)} configurations")


# -- replay --------------------------------------------------------------------------------------


@cli.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Where to write (default: alongside the manifest).")
@click.pass_context
def replay(ctx, manifest, out):
    """Re-run the command recorded in a manifest."""
    doc = json.loads(Path(manifest).read_text())
    params = dict(doc["parameters"])
    target = Path(out) if out else Path(manifest).parent
    names = doc["command"].split()
    cmd: click.Command = cli
    for name in names:
        cmd = cmd.commands[name]  # type: ignore[attr-defined]
    if params.get("payoff_file") and "payoff" in doc:
        target.mkdir(parents=True, exist_ok=True)
        path = target / "replay_payoff.json"
        path.write_text(_dump_json(doc["payoff"]))
        params["payoff_file"] = str(path)
    params["out"] = str(target)
    # restore parameter types that JSON flattened
    for p in cmd.params:
        if p.name in params and params[p.name] is not None and isinstance(p.type, (Vector, Range)):
            params[p.name] = np.asarray(params[p.name], dtype=float)
        if p.name in params and p.multiple and params[p.name] is not None:
            params[p.name] = tuple(params[p.name])
    ctx.invoke(cmd, **params)


# -- entry point ----------------------------------------------------------------------------------


def main(argv: Optional[list[str]] = None) -> None:
    try:
        rv = cli.main(args=argv, prog_name="pairdyn", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_VALIDATION if exc.exit_code in (1, 2) else exc.exit_code)
    except (NumericalError, GraphConstructionError, np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except (ValueError, KeyError, TypeError) as exc:
        click.echo(f"invalid input: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    sys.exit(rv if isinstance(rv, int) else 0)


if __name__ == "__main__":
    main()
