"""Acceptance gate: one test per criterion, each reporting a single pass/fail line.

Run directly (``python3 tests/test_acceptance.py``) or through pytest, where
the lines are collected into the terminal summary.
"""

import time
from itertools import cycle
from pathlib import Path

import numpy as np
from scipy import integrate

from singred import cli
from singred.catalog import JACOBI_VALID, get_connection, get_gauge_chart, get_subgroup
from singred.connection import (
    LoopPath,
    ambrose_singer_check,
    bianchi_residual,
    curvature_commutator_table,
    curvature_structure,
    holonomy,
    random_loop,
)
from singred.gauge import (
    bracket_terms,
    coordinate_field,
    free_sternberg_bracket,
    gauge_bracket,
    gauge_flow,
    jacobi_residual,
    leaf_consistency,
    momentum_of_state,
    near_centre_state,
    oscillator_field,
    poisson_tensor,
    random_gauge_field,
    random_state,
)
from singred.homogeneous import flow_many, homogeneous_tensor, leaf_report, random_invariant_polynomial
from singred.lie import ALGEBRAS, get_algebra, u1
from singred.strata import annihilator_basis, enumerate_strata, zero_stratum_distance

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

PAIRS = ("so3_so2", "su2_u1", "so3_z2")


def report(number, ok, detail, elapsed, budget=None):
    within = budget is None or elapsed < budget
    status = "PASS" if ok and within else "FAIL"
    limit = f", budget {budget:g} s" if budget is not None else ""
    line = f"criterion {number}: {status} - {detail} ({elapsed:.2f} s{limit})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
    assert within, line


def test_criterion_01_structure_integrity():
    t0 = time.perf_counter()
    worst_j = worst_r = 0.0
    for name in sorted(ALGEBRAS):
        a = get_algebra(name)
        worst_j = max(worst_j, a.jacobi_residual())
        worst_r = max(worst_r, a.rep_residual())
    ok = worst_j < 1e-12 and worst_r < 1e-10
    report(1, ok, f"max Jacobi {worst_j:.1e}, max rep {worst_r:.1e} over {len(ALGEBRAS)} algebras",
           time.perf_counter() - t0, 1.0)


def test_criterion_02_zero_stratum():
    t0 = time.perf_counter()
    dists = {name: zero_stratum_distance(get_subgroup(name)) for name in PAIRS}
    ok = all(d < 1e-8 for d in dists.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in dists.items())
    report(2, ok, f"principal-angle distance {detail}", time.perf_counter() - t0, 5.0)


def _initial_points(H, rng, count=20):
    """Unit points of h° plus the special points (origin, fixed axes) of each pair."""
    V = annihilator_basis(H).vectors
    special = [np.zeros(H.k)]
    if H.name == "so3_z2":
        special += [np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -0.5])]
    out = list(special)
    while len(out) < count:
        w = rng.normal(size=V.shape[0]) @ V
        out.append(w / np.linalg.norm(w))
    return np.array(out)


def test_criterion_03_invariance():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    subgroups = {name: get_subgroup(name) for name in PAIRS}
    worst, constant, flows = 0.0, True, 0
    for _, name in zip(range(20), cycle(PAIRS)):
        H = subgroups[name]
        f = random_invariant_polynomial(H, rng)
        for tr in flow_many(f, _initial_points(H, rng), T=10.0, steps=1000, H=H):
            worst = max(worst, tr.max_h_distance)
            constant &= tr.class_constant and tr.failed_step is None
            flows += 1
    ok = worst < 1e-7 and constant
    report(3, ok, f"{flows} flows, max distance to h° {worst:.1e}, classes constant: {constant}",
           time.perf_counter() - t0, 60.0)


def test_criterion_04_stratification():
    t0 = time.perf_counter()
    # (stabilizer dim, component order, stratum dim) derived by hand
    expected = {
        "so3_so2": [(0, 1, 2), (1, 1, 0)],
        "su2_u1": [(0, 1, 2), (1, 1, 0)],
        "so3_z2": [(0, 1, 3), (0, 2, 1)],
    }
    got = {name: enumerate_strata(get_subgroup(name), samples=200, seed=4).class_signature()
           for name in PAIRS}
    strata_ok = got == expected
    rng = np.random.default_rng(4)
    so3_so2, so3_e = get_subgroup("so3_so2"), get_subgroup("so3_e")
    planar = [np.append(v, 0.0) for v in rng.normal(size=(10, 2))]
    dims_zero = {leaf_report(mu, so3_so2).leaf_dim for mu in planar}
    dims_sphere = {leaf_report(mu, so3_e).leaf_dim for mu in rng.normal(size=(10, 3))}
    ok = strata_ok and dims_zero == {0} and dims_sphere == {2}
    report(4, ok, f"class lists match: {strata_ok}; leaf dims (SO(3),SO(2)) {sorted(dims_zero)}, "
                  f"H={{e}} {sorted(dims_sphere)}", time.perf_counter() - t0, 30.0)


def test_criterion_05_curvature_equivalence():
    t0 = time.perf_counter()
    worst = {}
    for name in ("flat", "abelian_plane", "hopf", "so3_poly"):
        chart = get_connection(name)
        S, C = curvature_structure(chart), curvature_commutator_table(chart)
        worst[name] = max(float(np.abs(S(x) - C(x)).max()) for x in chart.grid(5))
    poly = get_connection("so3_poly")
    bianchi = max(bianchi_residual(poly, x) for x in poly.grid(5))
    ok = all(v < 1e-5 for v in worst.values()) and bianchi < 1e-4
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(5, ok, f"route difference {detail}; Bianchi (so3_poly, 125 points) {bianchi:.1e}",
           time.perf_counter() - t0, 30.0)


def test_criterion_06_ambrose_singer():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    memb = span = 0.0
    passed = True
    for name in ("abelian_plane", "hopf"):
        chart = get_connection(name)
        loops = [random_loop(chart, rng) for _ in range(10)]
        rep = ambrose_singer_check(chart, loops, chart.grid(5))
        passed &= rep.passed
        memb = max([memb] + [e["membership_residual"] for e in rep.loops])
        span = max([span] + [e["span_residual"] for e in rep.loops])
    chart = get_connection("abelian_plane")
    flux, _ = integrate.dblquad(lambda y, x: curvature_structure(chart)([x, y])[0, 0, 1],
                                0.0, 1.0, 0.0, 1.0)
    hol = holonomy(chart, LoopPath.square([0.0, 0.0], 1.0))
    stokes = float(np.abs(hol.element - u1().exponential([-flux])).max())
    ok = passed and memb < 1e-7 and span < 1e-6 and stokes < 1e-6
    report(6, ok, f"20 loops, max membership {memb:.1e}, max span {span:.1e}; "
                  f"unit-square vs exp(-flux) {stokes:.1e}", time.perf_counter() - t0, 60.0)


def test_criterion_07_gauge_table():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    canonical_exact, zero_exact, coupling = True, True, 0.0
    for name in ("free_hopf", "abelian_plane"):
        chart = get_gauge_chart(name)
        B = curvature_structure(chart.connection)
        x1, p1 = coordinate_field(chart, "x", 0), coordinate_field(chart, "p", 0)
        p2 = coordinate_field(chart, "p", 1)
        for _ in range(10):
            s = random_state(chart, rng)
            canonical_exact &= gauge_bracket(x1, p1, s, chart) == 1.0
            mu = momentum_of_state(chart, s)
            # mu_alpha B^alpha_12 with the curvature pushed into g through E and C
            oracle = float(np.einsum("a,ab,b->", mu, chart.C @ chart.embedding, B(s.x)[:, 0, 1]))
            coupling = max(coupling, abs(gauge_bracket(p1, p2, s, chart) - oracle))
            P = poisson_tensor(chart, s)
            n = chart.n
            zero_exact &= not (P[:n, :n].any() or P[:2 * n, 2 * n:].any() or P[2 * n:, :2 * n].any())
    valid = 0.0
    for name in JACOBI_VALID:
        chart = get_gauge_chart(name)
        for _ in range(3):
            valid = max(valid, jacobi_residual(chart, random_state(chart, rng), trials=10, rng=rng))
    neg_chart = get_gauge_chart("negative_control")
    negative = min(jacobi_residual(neg_chart, random_state(neg_chart, rng), trials=10, rng=rng)
                   for _ in range(3))
    ok = canonical_exact and zero_exact and coupling < 1e-10 and valid < 1e-8 and negative > 1e-3
    report(7, ok, f"{{x1,p1}}=1 exact: {canonical_exact}; zero blocks exact: {zero_exact}; "
                  f"{{p1,p2}} error {coupling:.1e}; Jacobi valid {valid:.1e}, "
                  f"negative control {negative:.1e}", time.perf_counter() - t0, 30.0)


def test_criterion_08_regressions():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    chart = get_gauge_chart("free_hopf")
    worst = 0.0
    for _ in range(50):
        s = random_state(chart, rng)
        f, g = random_gauge_field(chart, rng), random_gauge_field(chart, rng)
        ref = free_sternberg_bracket(f, g, s, chart)
        terms = bracket_terms(f, g, s, chart)
        worst = max([worst, abs(gauge_bracket(f, g, s, chart) - sum(ref.values()))]
                    + [abs(terms[k] - ref[k]) for k in ref])
    exact = True
    for name, sub in (("homogeneous_t_star_s2", "so3_so2"), ("homogeneous_t_star_so3", "so3_e")):
        gc, H = get_gauge_chart(name), get_subgroup(sub)
        for _ in range(10):
            s = random_state(gc, rng)
            exact &= np.array_equal(poisson_tensor(gc, s),
                                    homogeneous_tensor(H, momentum_of_state(gc, s), gc.adapted))
    ok = worst < 1e-8 and exact
    report(8, ok, f"free three-term max difference {worst:.1e} over 50 pairs; "
                  f"transitive tensors identical: {exact}", time.perf_counter() - t0)


def test_criterion_09_leaves_and_conservation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    names = ("free_hopf", "abelian_plane", "flat", "so3_so2", "su2_u1", "so3_z2",
             "homogeneous_t_star_s2", "homogeneous_t_star_so3")
    charts = {name: get_gauge_chart(name) for name in names}
    leaf = 0.0
    for _, name in zip(range(50), cycle(names)):
        chart = charts[name]
        s = random_state(chart, rng)
        res, _, _ = leaf_consistency(chart, s, random_gauge_field(chart, rng),
                                     random_gauge_field(chart, rng))
        leaf = max(leaf, res)
    energy = casimir = 0.0
    complete = True
    for name in ("free_hopf", "abelian_plane", "so3_so2", "so3_z2", "homogeneous_t_star_so3"):
        chart = charts[name]
        tr = gauge_flow(oscillator_field(chart, rng), near_centre_state(chart, rng), T=10.0,
                        steps=10000, chart=chart)
        complete &= tr.failed_step is None and tr.class_constant
        energy = max(energy, tr.max_energy_drift)
        casimir = max(casimir, tr.max_casimir_drift)
    ok = leaf < 1e-6 and energy < 1e-8 and casimir < 1e-8 and complete
    report(9, ok, f"leaf residual {leaf:.1e} over 50 pairs; T=10 drift energy {energy:.1e}, "
                  f"Casimirs {casimir:.1e}", time.perf_counter() - t0)


DETERMINISM_RUNS = [
    ("algebra-check", None), ("strata", "so3_z2"), ("lp-bracket", "so3_so2"),
    ("lp-flow", "su2_u1"), ("curvature", "free_hopf"), ("holonomy", "free_hopf"),
    ("ambrose-singer", "abelian_plane"), ("gauge-bracket", "free_hopf"),
    ("jacobi", "abelian_plane"), ("gauge-flow", "so3_z2"), ("leaf-check", "so3_z2"),
    ("catalog", None),
]


def test_criterion_10_determinism(tmp_path):
    t0 = time.perf_counter()
    differing = []
    for command, entry in DETERMINISM_RUNS:
        paths = []
        for run in ("first", "second"):
            out = Path(tmp_path) / run / command
            args = [command, "--seed", "12345", "--out", str(out), "--quiet"]
            if entry:
                args += ["--entry", entry]
            cli.main(args)
            paths.append(out / f"{command}.json")
        if not (paths[0].exists() and paths[0].read_bytes() == paths[1].read_bytes()):
            differing.append(command)
    ok = not differing
    report(10, ok, f"{len(DETERMINISM_RUNS)} commands, records differing: {differing or 'none'}",
           time.perf_counter() - t0)


if __name__ == "__main__":
    import tempfile

    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn(tempfile.mkdtemp()) if "tmp_path" in fn.__code__.co_varnames else fn()
            except AssertionError:
                failures += 1
    raise SystemExit(1 if failures else 0)
