"""Reduced gauge Poisson bracket on a chart of the Sternberg stratum.

Phase-space coordinates are z = (x, p, mu_f): base positions, base momenta,
and h° coordinates mu_f in the complement part of an adapted basis of g
(mu = C mu_f with C the last k - r adapted basis columns). The Poisson
tensor is

    {x^i, p_j} = delta_ij,   {p_i, p_j} = mu_f . (E B_ij(x)),
    {mu_a, mu_b} = -c'^m_ab mu_m,   all (x, mu) and (p, mu) entries zero,

where E embeds n/h coordinates into fiber coordinates and c' are structure
constants in the adapted basis. Hamiltonian fields are z' = P(z) grad f.

The table satisfies Jacobi when B obeys Bianchi *and* every curvature value
E B_ij is central for the fiber bracket at the state (ad*_{C E B} mu = 0);
this holds for abelian n/h factors that commute with g, and trivially when
n/h = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connection import ConnectionChart, CurvatureTable, curvature_commutator, curvature_structure
from .errors import DegenerateFormError, InputError, IntegrationError, InvarianceError
from .homogeneous import casimirs, invariant_generators, leaf_generators
from .polynomial import Polynomial
from .strata import (
    IsotropyClass,
    Subgroup,
    adapted_basis,
    isotropy_at,
    isotropy_many,
    normalizer_algebra,
    orbit_generators,
)


@dataclass(frozen=True, eq=False)
class GaugeChart:
    subgroup: Subgroup
    connection: ConnectionChart | None = None
    embedding: np.ndarray | None = None
    curvature: CurvatureTable | None = None
    stratum: IsotropyClass | None = None
    name: str = ""

    def __post_init__(self):
        H = self.subgroup
        T = adapted_basis(H)
        object.__setattr__(self, "adapted", T)
        if np.abs(H.complement @ T[:, : H.r]).max(initial=0.0) >= 1e-10:
            raise InputError("adapted basis does not start with a basis of h")
        object.__setattr__(self, "fiber_constants",
                           H.algebra.change_basis(T).structure_constants[H.r:, H.r:, H.r:])
        a = self.connection.algebra.dim if self.connection is not None else 0
        m = H.k - H.r
        if self.connection is None:
            E = np.zeros((m, 0))
        elif self.embedding is None:
            nq = normalizer_algebra(H).quotient_dim
            if a and a == m == nq:
                E = np.eye(m)
            elif a == nq:
                E = (T[:, H.r:].T @ normalizer_algebra(H).quotient.T).reshape(m, a)
            else:
                raise InputError("connection algebra dimension does not match n/h")
        else:
            E = np.asarray(self.embedding, dtype=float).reshape(m, a)
        object.__setattr__(self, "embedding", E)
        if self.connection is not None and self.curvature is None:
            object.__setattr__(self, "curvature", curvature_structure(self.connection))
        self._check_blocks()

    def _check_blocks(self):
        """Curvature values must land in the n/h block of the fiber coordinates."""
        if not self.embedding.size:
            return
        n_basis = normalizer_algebra(self.subgroup).basis
        vecs = self.C @ self.embedding
        proj = n_basis.T @ (n_basis @ vecs) if n_basis.size else np.zeros_like(vecs)
        res = float(np.abs(vecs - proj).max())
        if res >= 1e-10:
            raise InputError(f"embedding leaves the n/h block (residual {res:.3e})")

    @property
    def C(self):
        return self.adapted[:, self.subgroup.r:]

    @property
    def n(self):
        return self.connection.base_dim if self.connection is not None else 0

    @property
    def m(self):
        return self.subgroup.k - self.subgroup.r

    @property
    def dim(self):
        return 2 * self.n + self.m

    @property
    def algebra(self):
        return self.subgroup.algebra

    def coupling(self, x, mu_f):
        """beta_ij = mu_f . (E B_ij(x))."""
        if self.n == 0:
            return np.zeros((0, 0))
        B = self.curvature(x)
        return np.einsum("a,ab,bij->ij", mu_f, self.embedding, B)

    def fiber_block(self, mu_f):
        return -np.einsum("mab,m->ab", self.fiber_constants, mu_f)

    def fiber_casimirs(self):
        """Casimirs of g pulled back to polynomials in the full phase space."""
        out = []
        pos = list(range(2 * self.n, self.dim))
        for c in casimirs(self.algebra):
            q = c.polynomial.substitute_linear(self.C).embed(self.dim, pos)
            out.append(GaugeField(q, name=c.name))
        return out


@dataclass(frozen=True)
class GaugeState:
    x: np.ndarray
    p: np.ndarray
    mu: np.ndarray

    @classmethod
    def from_vector(cls, chart: GaugeChart, z):
        z = np.asarray(z, dtype=float)
        n = chart.n
        return cls(z[:n], z[n:2 * n], z[2 * n:])

    @property
    def z(self):
        return np.concatenate([self.x, self.p, self.mu])


def validate_state(chart: GaugeChart, s: GaugeState, check_class=True):
    if s.x.shape != (chart.n,) or s.p.shape != (chart.n,) or s.mu.shape != (chart.m,):
        raise InputError("state does not match chart dimensions")
    if chart.n:
        chart.connection.check_point(s.x)
    if check_class and chart.stratum is not None:
        got = isotropy_at(momentum_of_state(chart, s), chart.subgroup)
        if got != chart.stratum:
            raise InputError(f"state is in class {got.label}, chart declares {chart.stratum.label}")
    return s


def momentum_of_state(chart: GaugeChart, s: GaugeState):
    """mu in g* coordinates (zero on the h-dual block)."""
    return chart.C @ np.asarray(s.mu, dtype=float)


class GaugeField:
    """f(x, p, mu_f) given by a Polynomial in 2n + m variables or by callables."""

    def __init__(self, evaluator, gradient=None, name=""):
        if isinstance(evaluator, Polynomial):
            self.polynomial = evaluator
            self.gradient_fn = evaluator.gradient
        else:
            self.polynomial = None
            self.gradient_fn = gradient
        self.evaluator = evaluator
        self.name = name
        self._certified = {}

    def __call__(self, z):
        return self.evaluator(z)

    def gradient(self, z, step=1e-6):
        z = np.asarray(z, dtype=float)
        if self.gradient_fn is not None:
            return np.asarray(self.gradient_fn(z), dtype=float)
        h = step * max(1.0, float(np.linalg.norm(z)))
        g = np.empty_like(z)
        for i in range(z.size):
            e = np.zeros_like(z)
            e[i] = h
            g[i] = (self.evaluator(z + e) - self.evaluator(z - e)) / (2 * h)
        return g

    def __mul__(self, other):
        return GaugeField(self.polynomial * (other.polynomial if isinstance(other, GaugeField) else other))

    def __add__(self, other):
        return GaugeField(self.polynomial + (other.polynomial if isinstance(other, GaugeField) else other))

    __rmul__ = __mul__
    __radd__ = __add__

    def certify(self, chart: GaugeChart, samples=6, seed=4321):
        """H-invariance of the mu-dependence at random states of the chart."""
        if id(chart) in self._certified:
            return self._certified[id(chart)]
        H = chart.subgroup
        rng = np.random.default_rng(seed)
        res = 0.0
        for _ in range(samples):
            z = random_state(chart, rng, check_class=False).z
            grad = self.gradient(z)
            mu = chart.C @ z[2 * chart.n:]
            dmu = chart.C @ grad[2 * chart.n:]
            value = float(self.evaluator(z))
            scale = max(1.0, abs(value), float(np.linalg.norm(grad) * np.linalg.norm(z)))
            inf = max((abs(float(H.algebra.coadjoint_ad(eta, mu) @ dmu)) for eta in H.basis),
                      default=0.0)
            disc = 0.0
            for A in H.generator_Ads:
                z2 = z.copy()
                z2[2 * chart.n:] = chart.C.T @ (A.T @ mu)
                disc = max(disc, abs(float(self.evaluator(z2)) - value))
            res = max(res, inf / scale, disc / scale)
            if inf / scale >= 1e-6 or disc / scale >= 1e-8:
                raise InvarianceError(f"field {self.name!r} is not invariant in mu",
                                      sample=z, residual=res)
        self._certified[id(chart)] = res
        return res


def coordinate_field(chart: GaugeChart, kind: str, index: int):
    """x^i, p_i or mu_a as a GaugeField (0-based index)."""
    offset = {"x": 0, "p": chart.n, "mu": 2 * chart.n}[kind]
    return GaugeField(Polynomial.variable(chart.dim, offset + index), name=f"{kind}{index + 1}")


def random_state(chart: GaugeChart, rng, check_class=True, mu_scale=1.0):
    """A state with x inside the box and mu_f drawn from the chart's declared class if any."""
    n = chart.n
    if n:
        lo, hi = chart.connection.box[:, 0], chart.connection.box[:, 1]
        pad = 0.15 * (hi - lo)
        x = lo + pad + rng.random(n) * (hi - lo - 2 * pad)
    else:
        x = np.zeros(0)
    p = rng.normal(size=n)
    mu = mu_scale * rng.normal(size=chart.m)
    s = GaugeState(x, p, mu)
    if check_class and chart.stratum is not None:
        if isotropy_at(momentum_of_state(chart, s), chart.subgroup) != chart.stratum:
            raise InputError("random state fell outside the declared stratum; pass a state explicitly")
    return s


def random_gauge_field(chart: GaugeChart, rng, degree=2):
    """Random polynomial in (x, p) plus invariant fiber terms times low-degree base terms."""
    N, n = chart.dim, chart.n
    z = [Polynomial.variable(N, i) for i in range(N)]
    f = Polynomial.constant(N, rng.normal())
    base = list(range(2 * n))
    for i in base:
        f = f + rng.normal() * z[i]
    for d in range(2, degree + 1):
        for _ in range(2 * n):
            idx = rng.choice(base, size=d) if base else []
            mono = Polynomial.constant(N, rng.normal() / d)
            for i in idx:
                mono = mono * z[i]
            f = f + mono
    pos = list(range(2 * n, N))
    for g in invariant_generators(chart.subgroup):
        gi = g.substitute_linear(chart.C).embed(N, pos)
        f = f + rng.normal() * gi
        if base:
            f = f + 0.5 * rng.normal() * gi * z[int(rng.choice(base))]
    return GaugeField(f, name="random_field")


def oscillator_field(chart: GaugeChart, rng=None, stiffness=1.0, fiber_weight=0.5):
    """|p|^2/2 + stiffness |x - c|^2/2 + a random invariant fiber quadratic.

    c is the box centre, so small-energy orbits stay inside the chart.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    N, n = chart.dim, chart.n
    f = Polynomial(N)
    if n:
        centre = chart.connection.box.mean(axis=1)
        for i in range(n):
            xi = Polynomial.variable(N, i) - centre[i]
            f = f + 0.5 * Polynomial.variable(N, n + i) ** 2 + 0.5 * stiffness * xi * xi
    pos = list(range(2 * n, N))
    for g in invariant_generators(chart.subgroup):
        f = f + fiber_weight * rng.normal() * g.substitute_linear(chart.C).embed(N, pos)
    return GaugeField(f, name="oscillator")


def near_centre_state(chart: GaugeChart, rng, radius=0.3, check_class=True):
    """A state with x within ``radius`` of the box centre and small momenta."""
    n = chart.n
    x = chart.connection.box.mean(axis=1) + radius * rng.uniform(-1, 1, n) if n else np.zeros(0)
    p = radius * rng.uniform(-1, 1, n)
    s = GaugeState(x, p, rng.normal(size=chart.m))
    if check_class:
        validate_state(chart, s)
    return s


# -- tensor and bracket ------------------------------------------------------


def poisson_tensor(chart: GaugeChart, s: GaugeState):
    n, m = chart.n, chart.m
    P = np.zeros((2 * n + m, 2 * n + m))
    P[:n, n:2 * n] = np.eye(n)
    P[n:2 * n, :n] = -np.eye(n)
    if n:
        P[n:2 * n, n:2 * n] = chart.coupling(s.x, s.mu)
    P[2 * n:, 2 * n:] = chart.fiber_block(s.mu)
    return P


def gauge_bracket(f: GaugeField, g: GaugeField, s: GaugeState, chart: GaugeChart, certify=True):
    validate_state(chart, s)
    if certify:
        f.certify(chart)
        g.certify(chart)
    z = s.z
    return float(f.gradient(z) @ poisson_tensor(chart, s) @ g.gradient(z))


def bracket_terms(f, g, s: GaugeState, chart: GaugeChart):
    """Canonical, curvature-coupling and fiber contributions from the tensor blocks."""
    n = chart.n
    P = poisson_tensor(chart, s)
    df, dg = f.gradient(s.z), g.gradient(s.z)
    canon = np.zeros_like(P)
    canon[:2 * n, :2 * n] = P[:2 * n, :2 * n]
    canon[n:2 * n, n:2 * n] = 0.0
    coup = np.zeros_like(P)
    coup[n:2 * n, n:2 * n] = P[n:2 * n, n:2 * n]
    fib = np.zeros_like(P)
    fib[2 * n:, 2 * n:] = P[2 * n:, 2 * n:]
    return {name: float(df @ M @ dg) for name, M in
            (("canonical", canon), ("coupling", coup), ("fiber", fib))}


def free_sternberg_bracket(f, g, s: GaugeState, chart: GaugeChart):
    """Three-term bracket for H = {e}, assembled without the Poisson tensor.

    canonical: the sharp map of the canonical form on the base,
    coupling:  <mu, B(f_p, g_p)> with B from lift-field commutators,
    fiber:     -<mu, [df/dmu, dg/dmu]> contracted from structure constants.
    """
    if chart.subgroup.r:
        raise InputError("the free bracket applies to charts with H = {e}")
    n = chart.n
    df, dg = f.gradient(s.z), g.gradient(s.z)
    fx, fp, fm = df[:n], df[n:2 * n], df[2 * n:]
    gx, gp, gm = dg[:n], dg[n:2 * n], dg[2 * n:]
    # sharp of a dx + b dp is the vector (b, -a); pair with the other differential
    f_sharp = np.concatenate([fp, -fx])
    canonical = float(np.concatenate([gx, gp]) @ f_sharp) * -1.0
    coupling = 0.0
    mu = chart.C @ s.mu
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            Bij = curvature_commutator(chart.connection, s.x, i, j)
            coupling += float(mu @ (chart.C @ chart.embedding @ Bij)) * fp[i] * gp[j]
    c = chart.algebra.structure_constants
    xi, eta = chart.C @ fm, chart.C @ gm
    fiber = -float(np.einsum("kij,k,i,j->", c, mu, xi, eta))
    return {"canonical": canonical, "coupling": coupling, "fiber": fiber}


def tensor_derivative(chart: GaugeChart, s: GaugeState, step=1e-5):
    """dP[l] = d P / d z_l by central differences (exact in p and mu: P is affine there)."""
    z = s.z
    N = z.size
    out = np.empty((N, N, N))
    for l in range(N):
        e = np.zeros(N)
        e[l] = step
        Pp = poisson_tensor(chart, GaugeState.from_vector(chart, z + e))
        Pm = poisson_tensor(chart, GaugeState.from_vector(chart, z - e))
        out[l] = (Pp - Pm) / (2 * step)
    return out


def schouten(chart: GaugeChart, s: GaugeState, step=1e-5):
    """J[i, j, k] = sum_l P^il d_l P^jk + cyclic; zero iff the tensor is Poisson at s."""
    P = poisson_tensor(chart, s)
    dP = tensor_derivative(chart, s, step)
    t = np.einsum("il,ljk->ijk", P, dP)
    return t + t.transpose(1, 2, 0) + t.transpose(2, 0, 1)


def jacobi_residual(chart: GaugeChart, s: GaugeState, trials=20, rng=None, fields=None):
    """Max normalised |{f,{g,h}} + cyclic| over random triples of polynomial fields.

    For an antisymmetric tensor the Jacobiator of f, g, h equals
    J(df, dg, dh) with J the Schouten tensor, so second derivatives of the
    fields cancel and only the tensor needs differentiating.
    """
    validate_state(chart, s, check_class=False)
    rng = np.random.default_rng(0) if rng is None else rng
    J = schouten(chart, s)
    z = s.z
    res = 0.0
    triples = fields or [tuple(random_gauge_field(chart, rng) for _ in range(3)) for _ in range(trials)]
    for f, g, h in triples:
        a, b, c = f.gradient(z), g.gradient(z), h.gradient(z)
        scale = max(1.0, np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(c))
        res = max(res, abs(float(np.einsum("ijk,i,j,k->", J, a, b, c))) / scale)
    return res


# -- dynamics ----------------------------------------------------------------


@dataclass
class GaugeTrajectory:
    times: np.ndarray
    states: np.ndarray
    energy_drift: np.ndarray
    casimir_drift: np.ndarray
    classes: list
    failed_step: int | None = None
    message: str = ""

    @property
    def max_energy_drift(self):
        return float(self.energy_drift.max(initial=0.0))

    @property
    def max_casimir_drift(self):
        return float(self.casimir_drift.max(initial=0.0))

    @property
    def class_constant(self):
        return all(c == self.classes[0] for c in self.classes)

    def to_rows(self, chart: GaugeChart):
        n, m = chart.n, chart.m
        header = (["step", "t"] + [f"x{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]
                  + [f"mu{a + 1}" for a in range(m)]
                  + ["energy_drift", "casimir_drift", "stabilizer_dim", "component_order"])
        rows = []
        for k, (t, z) in enumerate(zip(self.times, self.states)):
            c = self.classes[k]
            rows.append([k, float(t), *map(float, z), float(self.energy_drift[k]),
                         float(self.casimir_drift[k]), c.stabilizer_dim, c.component_order])
        return header, rows


def hamiltonian_vector(chart: GaugeChart, f: GaugeField, z):
    s = GaugeState.from_vector(chart, z)
    return poisson_tensor(chart, s) @ f.gradient(z)


def gauge_flow(f: GaugeField, s0: GaugeState, T: float, steps: int, chart: GaugeChart):
    """RK4 for z' = P grad f; stops early (failed_step set) if the box is left."""
    validate_state(chart, s0)
    f.certify(chart)
    if steps < 1:
        raise InputError("steps must be >= 1")
    dt = T / steps
    z = s0.z
    states = [z]
    failed, message = None, ""

    def rhs(zz):
        return hamiltonian_vector(chart, f, zz)

    for k in range(steps):
        try:
            k1 = rhs(z)
            k2 = rhs(z + 0.5 * dt * k1)
            k3 = rhs(z + 0.5 * dt * k2)
            k4 = rhs(z + dt * k3)
        except InputError as exc:
            failed, message = k + 1, str(exc)
            break
        z = z + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise IntegrationError(f"non-finite state at step {k + 1}", step=k + 1)
        if chart.n:
            box = chart.connection.box
            x = z[:chart.n]
            if np.any(x < box[:, 0]) or np.any(x > box[:, 1]):
                failed, message = k + 1, "trajectory left the chart box"
                break
        states.append(z)
    states = np.array(states)
    energy = np.array([f(zz) for zz in states])
    e_drift = np.abs(energy - energy[0]) / max(1.0, abs(energy[0]))
    c_drift = np.zeros(len(states))
    for c in chart.fiber_casimirs():
        vals = np.array([c(zz) for zz in states])
        c_drift = np.maximum(c_drift, np.abs(vals - vals[0]) / max(1.0, abs(vals[0])))
    classes = isotropy_many(chart.subgroup, states[:, 2 * chart.n:] @ chart.C.T)
    times = dt * np.arange(len(states))
    return GaugeTrajectory(times, states, e_drift, c_drift, classes, failed, message)


# -- leaves --------------------------------------------------------------------


@dataclass
class MinimalCouplingForm:
    matrix: np.ndarray  # on (x, p, leaf fiber) coordinates
    generators: np.ndarray  # algebra vectors zeta_a spanning the fiber leaf directions
    tangents: np.ndarray  # columns: fiber-coordinate tangent vectors of zeta_a
    n: int

    @property
    def fiber_dim(self):
        return self.generators.shape[0]


def minimal_coupling_form(chart: GaugeChart, s: GaugeState, generators=None):
    """dx^i ^ dp_i - mu B_ij dx^i ^ dx^j (i < j) + fiber orbit form, as a matrix.

    ``generators`` may supply the fiber directions as algebra vectors; each
    must give a direction tangent to the leaf.
    """
    validate_state(chart, s)
    H, n = chart.subgroup, chart.n
    mu = momentum_of_state(chart, s)
    if generators is None:
        Z = leaf_generators(H, mu)
    else:
        Z = np.atleast_2d(np.asarray(generators, dtype=float)).reshape(-1, H.k)
        _check_tangent(chart, mu, Z)
    d = Z.shape[0]
    beta = chart.coupling(s.x, s.mu) if n else np.zeros((0, 0))
    W = np.zeros((2 * n + d, 2 * n + d))
    W[:n, :n] = -beta
    W[:n, n:2 * n] = np.eye(n)
    W[n:2 * n, :n] = -np.eye(n)
    for a in range(d):
        for b in range(d):
            W[2 * n + a, 2 * n + b] = -float(mu @ H.algebra.bracket(Z[a], Z[b]))
    tangents = np.array([chart.C.T @ H.algebra.coadjoint_ad(z, mu) for z in Z]).reshape(d, chart.m).T
    return MinimalCouplingForm(W, Z, tangents, n)


def _check_tangent(chart, mu, Z, tol=1e-8):
    H = chart.subgroup
    for z in Z:
        t = H.algebra.coadjoint_ad(z, mu)
        off = float(np.abs(H.basis @ t).max(initial=0.0))
        if off >= tol * max(1.0, float(np.linalg.norm(mu))):
            raise InputError(f"fiber direction leaves h° (residual {off:.3e})")


def leaf_differential(form: MinimalCouplingForm, f: GaugeField, z):
    """df restricted to the leaf coordinates (x, p, fiber generators)."""
    n = form.n
    df = f.gradient(z)
    fib = df[2 * n:] @ form.tangents if form.fiber_dim else np.zeros(0)
    return np.concatenate([df[:2 * n], fib])


def leaf_hamiltonian_vector(form: MinimalCouplingForm, f: GaugeField, z):
    """X_f with omega(X_f, .) = -df on the leaf, i.e. X_f = -Omega^{-1} df."""
    W = form.matrix
    if W.size and np.linalg.cond(W) > 1e12:
        raise DegenerateFormError("minimal coupling form is degenerate on the supplied directions")
    return -np.linalg.solve(W, leaf_differential(form, f, z)) if W.size else np.zeros(0)


def leaf_consistency(chart: GaugeChart, s: GaugeState, f: GaugeField, g: GaugeField):
    """(|{f,g} - omega_min(X_f, X_g)|, {f,g}, omega value)."""
    form = minimal_coupling_form(chart, s)
    z = s.z
    Xf = leaf_hamiltonian_vector(form, f, z)
    Xg = leaf_hamiltonian_vector(form, g, z)
    omega = float(Xf @ form.matrix @ Xg) if Xf.size else 0.0
    br = gauge_bracket(f, g, s, chart)
    return abs(br - omega), br, omega
