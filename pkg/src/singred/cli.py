"""Command-line front end.

Each command reads an optional JSON config, writes ``<out>/<command>.json``
(deterministic), ``<out>/<command>.meta.json`` (timestamp and argv) and
optional CSV tables, and exits 0 when every check passes, 2 when a check
fails and 1 on bad input.
"""

from __future__ import annotations

import argparse
import functools
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import catalog
from .connection import (
    ConnectionChart,
    LoopPath,
    ambrose_singer_check,
    bianchi_residual,
    curvature_commutator,
    curvature_structure,
    holonomy,
    random_loop,
)
from .errors import InputError, IntegrationError
from .gauge import (
    GaugeChart,
    GaugeField,
    GaugeState,
    coordinate_field,
    gauge_bracket,
    gauge_flow,
    jacobi_residual,
    leaf_consistency,
    near_centre_state,
    oscillator_field,
    poisson_tensor,
    random_gauge_field,
    random_state,
)
from .homogeneous import (
    InvariantFunction,
    casimirs,
    coordinate_function,
    flow,
    lp_bracket,
    random_invariant_polynomial,
)
from .lie import ALGEBRAS
from .polynomial import Polynomial
from .serialize import algebra_from_document, write_record, write_table
from .strata import IsotropyClass, annihilator_basis, enumerate_strata, subgroup_from_document, zero_stratum_distance

VERSION = "0.1.0"
OUT_ENV = "SINGRED_OUT"

DEFAULT_TOLS = {
    "jacobi_structure": 1e-12,
    "rep": 1e-10,
    "subspace": 1e-8,
    "h_distance": 1e-7,
    "casimir": 1e-6,
    "curvature": 1e-5,
    "bianchi": 1e-4,
    "membership": 1e-7,
    "span": 1e-6,
    "bracket": 1e-10,
    "jacobi": 1e-8,
    "energy": 1e-8,
    "leaf": 1e-6,
}

COMMANDS = {}


def command(name):
    def wrap(fn):
        COMMANDS[name] = fn
        return fn
    return wrap


class Context:
    def __init__(self, config, seed, tols):
        self.config = config
        self.seed = seed
        self.tols = tols
        self.rng = np.random.default_rng(seed)
        self.entry = catalog.get_entry(config["entry"]) if config.get("entry") else None

    def get(self, key, default=None):
        return self.config.get(key, default)

    def name_from_entry(self, key, attr):
        value = self.config.get(key)
        if value is None and self.entry is not None:
            value = getattr(self.entry, attr)
        if value is None:
            raise InputError(f"config needs '{key}' (or an 'entry' that provides one)")
        return value


# -- resolvers ---------------------------------------------------------------------


def _config_errors(fn):
    """Report malformed config documents as input errors."""

    @functools.wraps(fn)
    def wrapped(*args):
        try:
            return fn(*args)
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed config for {fn.__name__[8:]}: {exc!r}") from None

    return wrapped


@_config_errors
def resolve_subgroup(ctx):
    spec = ctx.name_from_entry("subgroup", "subgroup")
    if isinstance(spec, str):
        return catalog.get_subgroup(spec)
    alg = algebra_from_document(spec.get("algebra", ctx.get("algebra")))
    return subgroup_from_document(alg, spec)


@_config_errors
def resolve_connection(ctx):
    spec = ctx.name_from_entry("chart", "connection")
    if isinstance(spec, str):
        return catalog.get_connection(spec)
    alg = algebra_from_document(spec["algebra"])
    return ConnectionChart.from_tables(alg, int(spec["n"]), spec["A"], spec["box"],
                                       spec.get("name", "custom"))


@_config_errors
def resolve_gauge(ctx):
    spec = ctx.name_from_entry("gauge_chart", "gauge")
    if isinstance(spec, str):
        return catalog.get_gauge_chart(spec)
    sub_ctx = Context({"subgroup": spec["subgroup"]}, ctx.seed, ctx.tols)
    H = resolve_subgroup(sub_ctx)
    conn = None
    if spec.get("connection") is not None:
        conn = resolve_connection(Context({"chart": spec["connection"]}, ctx.seed, ctx.tols))
    stratum = IsotropyClass(*spec["stratum"]) if spec.get("stratum") else None
    return GaugeChart(H, conn, spec.get("embedding"), stratum=stratum,
                      name=spec.get("name", "custom"))


@_config_errors
def resolve_function(spec, H, rng):
    k = H.k
    if isinstance(spec, str):
        if spec == "random":
            return random_invariant_polynomial(H, rng)
        if spec == "casimir":
            return casimirs(H.algebra)[0]
        if spec.startswith("mu") and spec[2:].isdigit():
            return coordinate_function(k, int(spec[2:]) - 1)
        raise InputError(f"unknown function {spec!r}")
    if "table" in spec:
        return InvariantFunction.from_table(k, spec["table"], spec.get("name", "table"))
    if "quadratic" in spec:
        return InvariantFunction(Polynomial.quadratic(spec["quadratic"]), name="quadratic")
    raise InputError(f"cannot build an invariant function from {spec!r}")


@_config_errors
def resolve_field(spec, chart, rng):
    if isinstance(spec, str):
        if spec == "random":
            return random_gauge_field(chart, rng)
        if spec == "oscillator":
            return oscillator_field(chart, rng)
        if spec == "kinetic":
            N, n = chart.dim, chart.n
            f = Polynomial(N)
            for i in range(n):
                f = f + 0.5 * Polynomial.variable(N, n + i) ** 2
            return GaugeField(f, name="kinetic")
        for kind in ("mu", "x", "p"):
            if spec.startswith(kind) and spec[len(kind):].isdigit():
                return coordinate_field(chart, kind, int(spec[len(kind):]) - 1)
        raise InputError(f"unknown field {spec!r}")
    if "table" in spec:
        return GaugeField(Polynomial.from_table(chart.dim, spec["table"]), name="table")
    raise InputError(f"cannot build a field from {spec!r}")


@_config_errors
def resolve_state(spec, chart, rng):
    if spec is None or spec == "random":
        return random_state(chart, rng)
    return GaugeState(np.asarray(spec.get("x", []), dtype=float),
                      np.asarray(spec.get("p", []), dtype=float),
                      np.asarray(spec["mu"], dtype=float))


@_config_errors
def resolve_loop(spec, chart, rng):
    if isinstance(spec, str) and spec == "random":
        return random_loop(chart, rng)
    kind = spec.get("kind", "points")
    n = chart.base_dim
    if kind == "square":
        return LoopPath.square(spec["corner"], spec.get("side", 1.0), spec.get("per_edge", 32),
                               tuple(spec.get("dims", (0, 1))), n)
    if kind == "circle":
        return LoopPath.circle(spec["center"], spec["radius"], spec.get("samples", 256),
                               tuple(spec.get("dims", (0, 1))), n)
    if kind == "polygon":
        return LoopPath.polygon(spec["vertices"], spec.get("per_edge", 32))
    if kind == "spherical_triangle":
        return LoopPath.spherical_triangle(*spec["vertices"], per_edge=spec.get("per_edge", 256))
    if kind == "points":
        return LoopPath(spec["points"])
    raise InputError(f"unknown loop kind {kind!r}")


def random_h0_point(H, rng):
    V = annihilator_basis(H).vectors
    if not V.shape[0]:
        return np.zeros(H.k)
    w = rng.normal(size=V.shape[0]) @ V
    return w / np.linalg.norm(w)


# -- commands ------------------------------------------------------------------------


@command("algebra-check")
def cmd_algebra_check(ctx):
    specs = ctx.get("algebras", sorted(ALGEBRAS))
    rows, results, ok = [], [], True
    for spec in specs:
        alg = algebra_from_document(spec)
        jac, rep, anti = alg.jacobi_residual(), alg.rep_residual(), alg.antisymmetry_residual()
        passed = anti == 0.0 and jac < ctx.tols["jacobi_structure"] and rep < ctx.tols["rep"]
        ok &= passed
        results.append({"name": alg.name, "dim": alg.dim, "jacobi_residual": jac,
                        "rep_residual": rep, "antisymmetry_residual": anti, "passed": passed})
        rows.append([alg.name, alg.dim, jac, rep, passed])
    return ok, {"algebras": results}, {"algebras": (["name", "dim", "jacobi", "rep", "passed"], rows)}


@command("strata")
def cmd_strata(ctx):
    H = resolve_subgroup(ctx)
    report = enumerate_strata(H, int(ctx.get("samples", 200)), ctx.seed)
    dist = zero_stratum_distance(H)
    record = report.to_record()
    record["zero_stratum_distance"] = dist
    ok = dist < ctx.tols["subspace"]
    expected = None
    if ctx.entry is not None and "strata" in ctx.entry.expected:
        expected = sorted(tuple(c) for c in ctx.entry.expected["strata"]["value"])
        ok &= expected == [tuple(c) for c in report.class_signature()]
    record["expected_signature"] = [list(c) for c in expected] if expected else None
    record["signature"] = [list(c) for c in report.class_signature()]
    return ok, record, {"strata": report.to_rows()}


@command("lp-bracket")
def cmd_lp_bracket(ctx):
    H = resolve_subgroup(ctx)
    f = resolve_function(ctx.get("f", "random"), H, ctx.rng)
    g = resolve_function(ctx.get("g", "random"), H, ctx.rng)
    mu = np.asarray(ctx.get("mu"), dtype=float) if ctx.get("mu") is not None else random_h0_point(H, ctx.rng)
    value = lp_bracket(f, g, mu, H)
    swapped = lp_bracket(g, f, mu, H)
    fd = lp_bracket(f, g, mu, H, finite_difference=True)
    scale = max(1.0, abs(value))
    ok = value + swapped == 0.0 and abs(value - fd) < 1e-6 * scale
    return ok, {"mu": mu, "value": value, "antisymmetry": value + swapped,
                "finite_difference_value": fd}, {}


@command("lp-flow")
def cmd_lp_flow(ctx):
    H = resolve_subgroup(ctx)
    f = resolve_function(ctx.get("f", "random"), H, ctx.rng)
    mu0 = np.asarray(ctx.get("mu0"), dtype=float) if ctx.get("mu0") is not None else random_h0_point(H, ctx.rng)
    traj = flow(f, mu0, float(ctx.get("T", 10.0)), int(ctx.get("steps", 2000)), H)
    ok = (traj.max_h_distance < ctx.tols["h_distance"] and traj.class_constant
          and traj.max_casimir_drift < ctx.tols["casimir"])
    record = {"mu0": mu0, "max_h_distance": traj.max_h_distance,
              "max_casimir_drift": traj.max_casimir_drift, "class_constant": traj.class_constant,
              "class": traj.classes[0].label, "final": traj.states[-1]}
    return ok, record, {"trajectory": traj.to_rows()}


@command("curvature")
def cmd_curvature(ctx):
    chart = resolve_connection(ctx)
    B = curvature_structure(chart)
    n = chart.base_dim
    worst, off_span, bianchi, rows = 0.0, 0.0, 0.0, []
    for x in chart.grid(int(ctx.get("per_axis", 5))):
        Bx = B(x)
        for i in range(n):
            for j in range(i + 1, n):
                comm, res = curvature_commutator(chart, x, i, j, return_residual=True)
                diff = float(np.abs(comm - Bx[:, i, j]).max(initial=0.0))
                worst, off_span = max(worst, diff), max(off_span, res)
                rows.append([*map(float, x), i + 1, j + 1, *map(float, Bx[:, i, j]), diff])
        bianchi = max(bianchi, bianchi_residual(chart, x))
    ok = worst < ctx.tols["curvature"] and bianchi < ctx.tols["bianchi"]
    header = [f"x{i + 1}" for i in range(n)] + ["i", "j"] + [
        f"B{a + 1}" for a in range(chart.fiber_dim)] + ["difference"]
    return ok, {"chart": chart.name, "max_difference": worst, "max_off_span": off_span,
                "max_bianchi": bianchi}, {"curvature": (header, rows)}


@command("holonomy")
def cmd_holonomy(ctx):
    chart = resolve_connection(ctx)
    loops = [resolve_loop(s, chart, ctx.rng) for s in ctx.get("loops", ["random"])]
    results, ok = [], True
    for loop in loops:
        h = holonomy(chart, loop, int(ctx.get("substeps", 4)))
        ok &= h.membership_residual < ctx.tols["membership"]
        results.append({"name": loop.name, **h.to_record()})
    return ok, {"chart": chart.name, "loops": results}, {}


@command("ambrose-singer")
def cmd_ambrose_singer(ctx):
    chart = resolve_connection(ctx)
    specs = ctx.get("loops") or ["random"] * int(ctx.get("random_loops", 10))
    loops = [resolve_loop(s, chart, ctx.rng) for s in specs]
    report = ambrose_singer_check(chart, loops, chart.grid(int(ctx.get("per_axis", 5))),
                                  membership_tol=ctx.tols["membership"], span_tol=ctx.tols["span"])
    return report.passed, {"chart": chart.name, **report.to_record()}, {}


@command("gauge-bracket")
def cmd_gauge_bracket(ctx):
    chart = resolve_gauge(ctx)
    s = resolve_state(ctx.get("state"), chart, ctx.rng)
    default_pairs = [["x1", "p1"], ["p1", "p2"]] if chart.n >= 2 else [["random", "random"]]
    pairs = ctx.get("pairs", default_pairs)
    P = poisson_tensor(chart, s)
    n = chart.n
    zero_blocks = float(np.abs(P[:2 * n, 2 * n:]).max(initial=0.0)) + float(
        np.abs(P[2 * n:, :2 * n]).max(initial=0.0))
    ok = zero_blocks == 0.0 and float(np.abs(P + P.T).max(initial=0.0)) == 0.0
    values = []
    for a, b in pairs:
        f, g = resolve_field(a, chart, ctx.rng), resolve_field(b, chart, ctx.rng)
        v = gauge_bracket(f, g, s, chart)
        w = gauge_bracket(g, f, s, chart)
        ok &= abs(v + w) < ctx.tols["bracket"]
        values.append({"f": a if isinstance(a, str) else "table",
                       "g": b if isinstance(b, str) else "table", "value": v})
    return ok, {"chart": chart.name, "state": {"x": s.x, "p": s.p, "mu": s.mu},
                "tensor": P, "zero_blocks": zero_blocks, "brackets": values}, {}


@command("jacobi")
def cmd_jacobi(ctx):
    chart = resolve_gauge(ctx)
    states = [resolve_state(ctx.get("state"), chart, ctx.rng)
              for _ in range(int(ctx.get("states", 3)))]
    trials = int(ctx.get("trials", 20))
    res = [jacobi_residual(chart, s, trials, ctx.rng) for s in states]
    worst = max(res)
    return worst < ctx.tols["jacobi"], {"chart": chart.name, "residuals": res,
                                        "max_residual": worst}, {}


@command("gauge-flow")
def cmd_gauge_flow(ctx):
    chart = resolve_gauge(ctx)
    if ctx.get("state") is None:
        s0 = near_centre_state(chart, ctx.rng)
    else:
        s0 = resolve_state(ctx.get("state"), chart, ctx.rng)
    f = resolve_field(ctx.get("field", "oscillator"), chart, ctx.rng)
    try:
        traj = gauge_flow(f, s0, float(ctx.get("T", 10.0)), int(ctx.get("steps", 10000)), chart)
    except IntegrationError as exc:
        return False, {"chart": chart.name, "error": str(exc), "failed_step": exc.step}, {}
    ok = (traj.failed_step is None and traj.max_energy_drift < ctx.tols["energy"]
          and traj.max_casimir_drift < ctx.tols["energy"] and traj.class_constant)
    record = {"chart": chart.name, "max_energy_drift": traj.max_energy_drift,
              "max_casimir_drift": traj.max_casimir_drift, "class_constant": traj.class_constant,
              "failed_step": traj.failed_step, "message": traj.message, "final": traj.states[-1]}
    return ok, record, {"trajectory": traj.to_rows(chart)}


@command("leaf-check")
def cmd_leaf_check(ctx):
    chart = resolve_gauge(ctx)
    out, worst = [], 0.0
    for _ in range(int(ctx.get("pairs", 10))):
        s = resolve_state(ctx.get("state"), chart, ctx.rng)
        f, g = random_gauge_field(chart, ctx.rng), random_gauge_field(chart, ctx.rng)
        res, br, om = leaf_consistency(chart, s, f, g)
        rel = res / max(1.0, abs(br))
        worst = max(worst, rel)
        out.append({"bracket": br, "omega": om, "residual": res})
    return worst < ctx.tols["leaf"], {"chart": chart.name, "max_relative_residual": worst,
                                      "pairs": out}, {}


@command("catalog")
def cmd_catalog(ctx):
    entries = [e.to_record() for e in catalog.entries()]
    rows = [[e["name"], e["algebra"], e["subgroup"] or "", e["gauge"] or "", e["description"]]
            for e in entries]
    return True, {"entries": entries}, {
        "catalog": (["name", "algebra", "subgroup", "gauge_chart", "description"], rows)}


# -- entry point -----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser():
    p = _Parser(prog="singred", description="Numerical checks for singular cotangent-bundle reduction.")
    p.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    p.add_argument("--config", help="JSON document with the command's inputs")
    p.add_argument("--entry", help="catalog entry supplying default inputs")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./singred-out)")
    p.add_argument("--seed", type=int, default=0, help="seed for all sampling (default 0)")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                   help="override a tolerance; repeatable")
    p.add_argument("--quiet", action="store_true")
    return p


def parse_tols(items):
    tols = dict(DEFAULT_TOLS)
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or name not in tols:
            raise InputError(f"bad --tol {item!r}; known names: {sorted(tols)}")
        try:
            v = float(value)
        except ValueError:
            raise InputError(f"tolerance {name} is not a number") from None
        if not v > 0:
            raise InputError(f"tolerance {name} must be positive")
        tols[name] = v
    return tols


def run(command_name, config, out_dir, seed=0, tols=None, argv=None):
    """Run one command; returns (exit status, record path)."""
    if command_name not in COMMANDS:
        raise InputError(f"unknown command {command_name!r}; known: {', '.join(COMMANDS)}")
    if seed < 0 or seed >= 2 ** 64:
        raise InputError("seed must be an unsigned 64-bit integer")
    tols = dict(DEFAULT_TOLS) if tols is None else tols
    ctx = Context(config, seed, tols)
    ok, record, tables = COMMANDS[command_name](ctx)
    record = {"command": command_name, "seed": seed, "passed": bool(ok),
              "tolerances": tols, "config": config, "result": record}
    out_dir = Path(out_dir)
    meta = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "argv": list(argv or []),
            "version": VERSION}
    path = write_record(out_dir / f"{command_name}.json", record, meta)
    for name, (header, rows) in tables.items():
        write_table(out_dir / f"{command_name}_{name}.csv", header, rows)
    return (0 if ok else 2), path


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(argv)
        config = {}
        if args.config:
            try:
                config = json.loads(Path(args.config).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read config: {exc}") from None
            if not isinstance(config, dict):
                raise InputError("config document must be a JSON object")
        if args.entry:
            config.setdefault("entry", args.entry)
        out = args.out or os.environ.get(OUT_ENV) or "singred-out"
        status, path = run(args.command, config, out, args.seed, parse_tols(args.tol), argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        print(f"{args.command}: {'ok' if status == 0 else 'FAILED'} -> {path}")
    return status


if __name__ == "__main__":
    sys.exit(main())
