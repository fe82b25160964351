"""Connections in a local trivialization U x N(H)/H: curvature, horizontal
lifts and holonomy.

A chart stores A_i^a(x), the coefficients of the reduced principal connection
with values in n/h. The horizontal lift of a base curve x(t) solves

    g' = -(A_i^a(x) x'^i) rho(e_a) g,

so lifts compose right to left: hol(loop2 after loop1) = hol(loop2) hol(loop1).
With this lift the curvature is

    B^a_ij = d_i A_j^a - d_j A_i^a + c^a_bc A_i^b A_j^c.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from .errors import InputError
from .lie import LieAlgebra
from .polynomial import Polynomial
from .strata import numerical_rank

FD_STEP = 1e-5
LOG_BRANCH_MARGIN = 1e-3


@dataclass(frozen=True, eq=False)
class ConnectionChart:
    """Connection coefficients on a coordinate box.

    ``coefficients(x)`` returns A with shape (n, a): A[i, alpha] = A_i^alpha.
    ``jacobian(x)``, if given, returns dA with dA[i, alpha, l] = d_l A_i^alpha.
    """

    algebra: LieAlgebra
    base_dim: int
    coefficients: Callable
    box: np.ndarray
    jacobian: Callable | None = None
    name: str = ""
    tables: dict | None = None

    def __post_init__(self):
        box = np.asarray(self.box, dtype=float).reshape(self.base_dim, 2)
        if np.any(box[:, 0] >= box[:, 1]):
            raise InputError("box bounds must satisfy lower < upper")
        object.__setattr__(self, "box", box)

    @classmethod
    def from_polynomials(cls, algebra, polys, box, name=""):
        """``polys[i][alpha]`` is a Polynomial in n variables giving A_i^alpha."""
        n = len(polys)
        a = algebra.dim
        grid = [[polys[i][al] for al in range(a)] for i in range(n)]
        derivs = [[[p.derivative(l) for l in range(n)] for p in row] for row in grid]

        def coefficients(x):
            return np.array([[p(x) for p in row] for row in grid]).reshape(n, a)

        def jacobian(x):
            return np.array([[[d(x) for d in ds] for ds in row] for row in derivs]).reshape(n, a, n)

        tables = {"A": [[p.to_table() for p in row] for row in grid]}
        return cls(algebra, n, coefficients, box, jacobian, name, tables)

    @classmethod
    def from_tables(cls, algebra, n, tables, box, name=""):
        polys = [[Polynomial.from_table(n, t) for t in row] for row in tables]
        return cls.from_polynomials(algebra, polys, box, name)

    @classmethod
    def flat(cls, algebra, n, box=None, name="flat"):
        box = np.tile([-1.0, 1.0], (n, 1)) if box is None else box
        zero = Polynomial(n)
        return cls.from_polynomials(algebra, [[zero] * algebra.dim for _ in range(n)], box, name)

    @property
    def fiber_dim(self):
        return self.algebra.dim

    def check_point(self, x, margin=0.0, index=None):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.base_dim,):
            raise InputError(f"base point has shape {x.shape}, expected ({self.base_dim},)")
        lo, hi = self.box[:, 0] + margin, self.box[:, 1] - margin
        if np.any(x < lo) or np.any(x > hi):
            where = "" if index is None else f" (sample {index})"
            raise InputError(f"base point {x.tolist()} outside chart box{where}")
        return x

    def A(self, x):
        return np.asarray(self.coefficients(np.asarray(x, dtype=float)), dtype=float).reshape(
            self.base_dim, self.fiber_dim)

    def dA(self, x, step=FD_STEP):
        """dA[i, alpha, l] = d_l A_i^alpha (analytic when available)."""
        x = np.asarray(x, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x), dtype=float).reshape(
                self.base_dim, self.fiber_dim, self.base_dim)
        out = np.empty((self.base_dim, self.fiber_dim, self.base_dim))
        for l in range(self.base_dim):
            e = np.zeros(self.base_dim)
            e[l] = step
            out[:, :, l] = (self.A(x + e) - self.A(x - e)) / (2 * step)
        return out

    def grid(self, per_axis=5, margin_fraction=0.1):
        """per_axis^n points filling the box interior."""
        axes = []
        for lo, hi in self.box:
            pad = margin_fraction * (hi - lo)
            axes.append(np.linspace(lo + pad, hi - pad, per_axis))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1) if axes else np.zeros((1, 0))


@dataclass(frozen=True, eq=False)
class CurvatureTable:
    """B(x) with shape (a, n, n), antisymmetric in the last two slots."""

    evaluator: Callable
    provenance: str

    def __call__(self, x):
        B = np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)
        return 0.5 * (B - B.transpose(0, 2, 1))


def curvature_structure(chart: ConnectionChart) -> CurvatureTable:
    c = chart.algebra.structure_constants

    def evaluate(x):
        chart.check_point(x)
        A, dA = chart.A(x), chart.dA(x)
        # d_i A_j^a - d_j A_i^a  with dA[j, a, i] = d_i A_j^a
        grad = dA.transpose(1, 2, 0) - dA.transpose(1, 0, 2)
        return grad + np.einsum("abc,ib,jc->aij", c, A, A)

    return CurvatureTable(evaluate, "structure_formula")


def _lift_field(chart, x, g, i):
    """Group component of the horizontal lift of d/dx^i at (x, g)."""
    return -chart.algebra.to_matrix(chart.A(x)[i]) @ g


def curvature_commutator(chart: ConnectionChart, x, i, j, step=FD_STEP, return_residual=False):
    """B^a_ij(x) = -A([X_i, X_j]) from finite-difference commutation of lift fields at g = 1.

    Only the base direction needs differencing; the fields are linear in g.
    """
    x = chart.check_point(x, margin=2 * step)
    d = chart.algebra.rep_dim
    I = np.eye(d)

    def directional(jj, ii):
        # D V_jj [V_ii] at (x, 1)
        e = np.zeros(chart.base_dim)
        e[ii] = step
        Vi = _lift_field(chart, x, I, ii)
        plus = _lift_field(chart, x + e, I + step * Vi, jj)
        minus = _lift_field(chart, x - e, I - step * Vi, jj)
        return (plus - minus) / (2 * step)

    W = directional(j, i) - directional(i, j)
    coords, residual = chart.algebra.from_matrix(-W, return_residual=True)
    if return_residual:
        return coords, residual
    return coords


def curvature_commutator_table(chart: ConnectionChart, step=FD_STEP) -> CurvatureTable:
    n = chart.base_dim

    def evaluate(x):
        B = np.zeros((chart.fiber_dim, n, n))
        for i in range(n):
            for j in range(i + 1, n):
                B[:, i, j] = curvature_commutator(chart, x, i, j, step)
                B[:, j, i] = -B[:, i, j]
        return B

    return CurvatureTable(evaluate, "commutator_fd")


def bianchi_residual(chart: ConnectionChart, x, curvature: CurvatureTable | None = None,
                     step=1e-4):
    """max over i<j<k of |cyclic (d_i B_jk + [A_i, B_jk])|, derivatives by central differences."""
    n = chart.base_dim
    if n < 3:
        return 0.0
    B = curvature or curvature_structure(chart)
    x = chart.check_point(x, margin=2 * step)
    c = chart.algebra.structure_constants
    A = chart.A(x)
    B0 = B(x)
    dB = np.empty((n,) + B0.shape)
    for l in range(n):
        e = np.zeros(n)
        e[l] = step
        dB[l] = (B(x + e) - B(x - e)) / (2 * step)
    res = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                total = np.zeros(chart.fiber_dim)
                for (p, q, r) in ((i, j, k), (j, k, i), (k, i, j)):
                    total += dB[p][:, q, r] + np.einsum("abc,b,c->a", c, A[p], B0[:, q, r])
                res = max(res, float(np.abs(total).max()))
    return res


# -- loops ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LoopPath:
    """Polyline through ``samples`` (m x n). Closed loops repeat the first point."""

    samples: np.ndarray
    name: str = ""

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if s.shape[0] < 1:
            raise InputError("a path needs at least one sample")
        object.__setattr__(self, "samples", s)

    @property
    def closed(self):
        return float(np.abs(self.samples[-1] - self.samples[0]).max()) < 1e-12

    @property
    def closure_gap(self):
        return float(np.abs(self.samples[-1] - self.samples[0]).max())

    @classmethod
    def polygon(cls, vertices, per_edge=32, name="polygon"):
        V = np.asarray(vertices, dtype=float)
        V = np.vstack([V, V[:1]])
        pts = [V[0]]
        for a, b in zip(V[:-1], V[1:]):
            for t in np.arange(1, per_edge + 1) / per_edge:
                pts.append(a + t * (b - a))
        pts[-1] = V[0]
        return cls(np.array(pts), name)

    @classmethod
    def square(cls, corner, side=1.0, per_edge=32, dims=(0, 1), n=2):
        """Counter-clockwise square in the (dims[0], dims[1]) plane starting at ``corner``."""
        corner = np.asarray(corner, dtype=float).reshape(n)
        i, j = dims
        verts = []
        for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
            v = corner.copy()
            v[i] += di * side
            v[j] += dj * side
            verts.append(v)
        return cls.polygon(verts, per_edge, "square")

    @classmethod
    def circle(cls, center, radius, samples=256, dims=(0, 1), n=2):
        center = np.asarray(center, dtype=float).reshape(n)
        t = np.linspace(0.0, 2 * np.pi, samples + 1)
        pts = np.tile(center, (samples + 1, 1))
        pts[:, dims[0]] += radius * np.cos(t)
        pts[:, dims[1]] += radius * np.sin(t)
        pts[-1] = pts[0]
        return cls(pts, "circle")

    @classmethod
    def spherical_triangle(cls, v1, v2, v3, per_edge=64):
        """Geodesic triangle on S^2 in (theta, phi) coordinates, phi unwrapped."""
        verts = [np.asarray(v, dtype=float) / np.linalg.norm(v) for v in (v1, v2, v3)]
        pts = []
        for a, b in zip(verts, verts[1:] + verts[:1]):
            omega = np.arccos(np.clip(a @ b, -1.0, 1.0))
            for t in np.arange(per_edge) / per_edge:
                pts.append((np.sin((1 - t) * omega) * a + np.sin(t * omega) * b) / np.sin(omega))
        pts.append(verts[0])
        P = np.array(pts)
        theta = np.arccos(np.clip(P[:, 2], -1.0, 1.0))
        phi = np.unwrap(np.arctan2(P[:, 1], P[:, 0]))
        out = np.stack([theta, phi], axis=1)
        out[-1] = out[0]
        return cls(out, "spherical_triangle")

    def reversed(self):
        return LoopPath(self.samples[::-1].copy(), f"{self.name}_reversed")

    def concatenate(self, other: "LoopPath"):
        """Traverse self, then other (other must start where self ends)."""
        if np.abs(other.samples[0] - self.samples[-1]).max() > 1e-12:
            raise InputError("paths do not join")
        return LoopPath(np.vstack([self.samples, other.samples[1:]]), f"{self.name}+{other.name}")

    def refine(self, factor=2):
        pts = [self.samples[0]]
        for a, b in zip(self.samples[:-1], self.samples[1:]):
            for t in np.arange(1, factor + 1) / factor:
                pts.append(a + t * (b - a))
        return LoopPath(np.array(pts), self.name)


def signed_solid_angle(v1, v2, v3):
    """Van Oosterom-Strackee signed solid angle of the triangle v1 -> v2 -> v3."""
    a, b, c = (np.asarray(v, dtype=float) / np.linalg.norm(v) for v in (v1, v2, v3))
    num = a @ np.cross(b, c)
    den = 1.0 + a @ b + b @ c + c @ a
    return 2.0 * np.arctan2(num, den)


def random_loop(chart: ConnectionChart, rng, per_edge=24, size=0.5, margin_fraction=0.1):
    """A random closed polygon (3 to 6 vertices) in a sub-box of relative ``size``."""
    extent = chart.box[:, 1] - chart.box[:, 0]
    lo = chart.box[:, 0] + margin_fraction * extent
    hi = chart.box[:, 1] - margin_fraction * extent
    half = 0.5 * size * extent
    centre = lo + half + rng.random(chart.base_dim) * np.maximum(hi - lo - 2 * half, 0.0)
    m = int(rng.integers(3, 7))
    verts = centre - half + rng.random((m, chart.base_dim)) * 2 * half
    return LoopPath.polygon(np.clip(verts, lo, hi), per_edge, "random")


# -- lifts and holonomy -----------------------------------------------------------


def horizontal_lift(chart: ConnectionChart, path: LoopPath, g0=None, substeps=4):
    """Group elements at every path sample, RK4 on each polyline segment."""
    d = chart.algebra.rep_dim
    g = np.eye(d) if g0 is None else np.asarray(g0, dtype=float)
    for idx, x in enumerate(path.samples):
        chart.check_point(x, index=idx)
    rho = chart.algebra.rep
    out = [g]
    for a, b in zip(path.samples[:-1], path.samples[1:]):
        v = b - a
        if not np.any(v):
            out.append(g)
            continue
        h = 1.0 / substeps

        def rhs(s, gg):
            xi = chart.A(a + s * v).T @ v  # A_i^alpha v^i
            return -np.einsum("a,abc->bc", xi, rho) @ gg

        for m in range(substeps):
            s = m * h
            k1 = rhs(s, g)
            k2 = rhs(s + h / 2, g + h / 2 * k1)
            k3 = rhs(s + h / 2, g + h / 2 * k2)
            k4 = rhs(s + h, g + h * k3)
            g = g + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(g)
    return np.array(out)


@dataclass
class HolonomyResult:
    element: np.ndarray
    logarithm: np.ndarray
    membership_residual: float
    log_reliable: bool
    error_estimate: float

    def to_record(self):
        return {
            "element": self.element.tolist(),
            "logarithm": self.logarithm.tolist(),
            "membership_residual": self.membership_residual,
            "log_reliable": self.log_reliable,
            "error_estimate": self.error_estimate,
        }


def group_log(algebra: LieAlgebra, g):
    """Principal logarithm in algebra coordinates, and whether it is away from the branch cut."""
    eig = np.linalg.eigvals(g)
    reliable = bool(np.all(np.abs(np.angle(eig)) < np.pi - LOG_BRANCH_MARGIN))
    L = linalg.logm(g)
    L = np.real_if_close(L, tol=1e6)
    if np.iscomplexobj(L):
        return np.full(algebra.dim, np.nan), False
    return algebra.from_matrix(L), reliable


def holonomy(chart: ConnectionChart, loop: LoopPath, substeps=4) -> HolonomyResult:
    """Holonomy from the identity, Richardson-extrapolated over one substep halving."""
    if not loop.closed:
        raise InputError(f"loop is not closed (gap {loop.closure_gap:.3e})")
    coarse = horizontal_lift(chart, loop, None, substeps)[-1]
    fine = horizontal_lift(chart, loop, None, 2 * substeps)[-1]
    g = fine + (fine - coarse) / 15.0
    err = float(np.abs(fine - coarse).max())
    d = g.shape[0]
    orth = float(np.abs(g.T @ g - np.eye(d)).max()) if chart.algebra.orthogonal else 0.0
    log, reliable = group_log(chart.algebra, g)
    if np.all(np.isfinite(log)):
        recon = float(np.abs(chart.algebra.exponential(log) - g).max())
    else:
        recon = np.inf
    return HolonomyResult(g, log, max(orth, recon), reliable, err)


def lie_closure(algebra: LieAlgebra, vectors, tol=1e-9):
    """Orthonormal rows spanning the Lie subalgebra generated by ``vectors``."""
    V = np.asarray(vectors, dtype=float).reshape(-1, algebra.dim)
    basis = _orth(V, tol)
    while True:
        brs = [algebra.bracket(a, b) for a in basis for b in basis]
        new = _orth(np.vstack([basis] + brs) if brs else basis, tol)
        if new.shape[0] == basis.shape[0]:
            return new
        basis = new


def _orth(V, tol):
    if V.size == 0:
        return np.zeros((0, V.shape[1]))
    _, s, Vt = np.linalg.svd(V, full_matrices=False)
    return Vt[s > tol * max(1.0, s[0])]


@dataclass
class AmbroseSingerReport:
    span: np.ndarray
    loops: list = field(default_factory=list)  # dicts per loop

    @property
    def passed(self):
        return all(entry["passed"] for entry in self.loops)

    def to_record(self):
        return {"span_dim": int(self.span.shape[0]), "span": self.span.tolist(),
                "passed": self.passed, "loops": self.loops}


def ambrose_singer_check(chart: ConnectionChart, loops, grid, curvature=None,
                         membership_tol=1e-7, span_tol=1e-6, substeps=4):
    """Holonomy logs should lie in the Lie span of curvature values over the grid."""
    B = curvature or curvature_structure(chart)
    n = chart.base_dim
    values = []
    for x in grid:
        Bx = B(x)
        values += [Bx[:, i, j] for i in range(n) for j in range(i + 1, n)]
    span = lie_closure(chart.algebra, np.array(values).reshape(-1, chart.fiber_dim))
    report = AmbroseSingerReport(span)
    for idx, loop in enumerate(loops):
        hol = holonomy(chart, loop, substeps)
        log = hol.logarithm
        if np.all(np.isfinite(log)):
            proj = span.T @ (span @ log) if span.size else np.zeros_like(log)
            span_res = float(np.linalg.norm(log - proj))
        else:
            span_res = float("inf")
        ok = hol.membership_residual < membership_tol and span_res < span_tol and hol.log_reliable
        report.loops.append({
            "index": idx,
            "name": loop.name,
            "membership_residual": hol.membership_residual,
            "span_residual": span_res,
            "log_reliable": hol.log_reliable,
            "logarithm": log.tolist(),
            "passed": bool(ok),
        })
    return report


def curvature_rank(chart: ConnectionChart, grid, curvature=None):
    B = curvature or curvature_structure(chart)
    n = chart.base_dim
    vals = [B(x)[:, i, j] for x in grid for i in range(n) for j in range(i + 1, n)]
    return numerical_rank(np.array(vals).reshape(-1, chart.fiber_dim), 1e-9)


# -- catalog connection charts ----------------------------------------------------


def abelian_plane_chart(algebra=None, box=((-2.0, 2.0), (-2.0, 2.0))):
    """A = (-x2 dx1 + x1 dx2)/2 with values in a one-dimensional algebra; B_12 = 1."""
    from .lie import u1

    algebra = algebra or u1()
    x1, x2 = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    return ConnectionChart.from_polynomials(algebra, [[-0.5 * x2], [0.5 * x1]], box,
                                            "abelian_plane")


def hopf_chart(algebra=None, slot=0, box=((0.2, np.pi - 0.2), (-3.5, 3.5))):
    """(theta, phi) chart of S^2 with A_phi = (1 - cos theta)/2 in the ``slot`` direction."""
    from .lie import u1

    algebra = algebra or u1()
    a = algebra.dim

    def coefficients(x):
        A = np.zeros((2, a))
        A[1, slot] = 0.5 * (1.0 - np.cos(x[0]))
        return A

    def jacobian(x):
        dA = np.zeros((2, a, 2))
        dA[1, slot, 0] = 0.5 * np.sin(x[0])
        return dA

    return ConnectionChart(algebra, 2, coefficients, box, jacobian, "hopf")


def hopf_curvature_exact(theta):
    """B_theta,phi of the chart above."""
    return 0.5 * np.sin(theta)


def so3_poly_chart(box=((-1.0, 1.0),) * 3):
    """Nonabelian so(3)-valued connection on R^3 with polynomial coefficients."""
    from .lie import so3

    n = 3
    x = [Polynomial.variable(n, i) for i in range(n)]
    zero = Polynomial(n)
    polys = [
        [0.3 * x[1], zero + 0.2, 0.5 * x[2] * x[0]],
        [zero, 0.4 * x[2] - 0.1 * x[0] * x[0], 0.25 * x[0]],
        [0.2 * x[0] * x[1], zero - 0.3, 0.6 * x[1]],
    ]
    return ConnectionChart.from_polynomials(so3(), polys, box, "so3_poly")
