"""The homogeneous Lie-Poisson structure on h°/H.

Functions on h°/H are represented by H-invariant functions on g*. With the
(−) convention the bracket is ``{F, G}(mu) = -<mu, [dF, dG]>`` and the
Hamiltonian vector field of F is ``mu' = ad*_{dF} mu``, so that
``dF/dt = {F, H}`` along the flow of H.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .errors import InputError, IntegrationError, InvarianceError
from .lie import LieAlgebra
from .polynomial import Polynomial
from .strata import (
    IsotropyClass,
    Subgroup,
    annihilator_basis,
    check_in_annihilator,
    isotropy_at,
    isotropy_many,
    null_rows,
    numerical_rank,
    orbit_generators,
    stabilizer,
    stratum_dimensions,
)

INFINITESIMAL_TOL = 1e-6
DISCRETE_TOL = 1e-8


def _as_subgroup(H):
    if isinstance(H, LieAlgebra):
        return Subgroup.trivial(H)
    return H


class InvariantFunction:
    """A function on g* with gradient access and a cached H-invariance certificate.

    Pass either a Polynomial (exact gradient, batched evaluation) or an
    evaluator with an optional analytic gradient. Without a gradient, central
    differences with relative step ``fd_step`` are used.
    """

    def __init__(self, evaluator, gradient=None, fd_step=1e-6, name=""):
        if isinstance(evaluator, Polynomial):
            self.polynomial = evaluator
            self.evaluator = evaluator
            self.analytic = evaluator.gradient
        else:
            self.polynomial = None
            self.evaluator = evaluator
            self.analytic = gradient
        self.fd_step = fd_step
        self.name = name
        self._certificates = {}

    @classmethod
    def from_table(cls, nvars, table, name=""):
        return cls(Polynomial.from_table(nvars, table), name=name)

    def __call__(self, mu):
        return self.evaluator(mu)

    def gradient(self, mu, finite_difference=False):
        """dF/dmu as an algebra vector (batched for polynomials)."""
        mu = np.asarray(mu, dtype=float)
        if self.analytic is not None and not finite_difference:
            if mu.ndim > 1 and self.polynomial is None:
                return np.array([self.analytic(m) for m in mu])
            return np.asarray(self.analytic(mu), dtype=float)
        if mu.ndim > 1:
            return np.array([self.gradient(m, True) for m in mu])
        h = self.fd_step * max(1.0, float(np.linalg.norm(mu)))
        g = np.empty_like(mu)
        for i in range(mu.size):
            e = np.zeros_like(mu)
            e[i] = h
            g[i] = (self.evaluator(mu + e) - self.evaluator(mu - e)) / (2 * h)
        return g

    # arithmetic on polynomial representatives keeps gradients exact
    def _poly(self, other):
        if self.polynomial is None or (isinstance(other, InvariantFunction) and other.polynomial is None):
            raise InputError("composition is only supported for polynomial invariant functions")
        return other.polynomial if isinstance(other, InvariantFunction) else other

    def __add__(self, other):
        return InvariantFunction(self.polynomial + self._poly(other))

    def __mul__(self, other):
        return InvariantFunction(self.polynomial * self._poly(other))

    __radd__ = __add__
    __rmul__ = __mul__

    def invariance_residuals(self, H: Subgroup, mu):
        """(infinitesimal, discrete) residuals, each divided by a scale."""
        mu = np.asarray(mu, dtype=float)
        grad = self.gradient(mu)
        value = float(self.evaluator(mu))
        scale = max(1.0, abs(value), float(np.linalg.norm(grad) * np.linalg.norm(mu)))
        inf = 0.0
        for eta in H.basis:
            inf = max(inf, abs(float(H.algebra.coadjoint_ad(eta, mu) @ grad)))
        disc = 0.0
        for A in H.generator_Ads:
            disc = max(disc, abs(float(self.evaluator(A.T @ mu)) - value))
        return inf / scale, disc / scale

    def certify(self, H: Subgroup, samples=8, seed=12345):
        """Check invariance at random points of h°; raise InvarianceError on failure."""
        key = id(H)
        if key in self._certificates:
            ok, sample, res = self._certificates[key]
        else:
            rng = np.random.default_rng(seed)
            V = annihilator_basis(H).vectors
            ok, sample, res = True, None, 0.0
            pts = [rng.normal(size=V.shape[0]) @ V for _ in range(samples)] if V.shape[0] else []
            for mu in pts:
                inf, disc = self.invariance_residuals(H, mu)
                res = max(res, inf, disc)
                if inf >= INFINITESIMAL_TOL or disc >= DISCRETE_TOL:
                    ok, sample = False, mu
                    break
            self._certificates[key] = (ok, sample, res)
        if not ok:
            raise InvarianceError(
                f"function {self.name!r} is not {H.name}-invariant (residual {res:.3e})",
                sample=sample, residual=res)
        return res


def constant_function(k, value=1.0):
    return InvariantFunction(Polynomial.constant(k, value), name="constant")


def coordinate_function(k, i):
    return InvariantFunction(Polynomial.variable(k, i), name=f"mu{i + 1}")


# -- invariant families --------------------------------------------------------


def _chop(rows, rel=1e-12):
    """Zero entries at roundoff level relative to each row's largest entry.

    SVD null bases carry ~1e-16 leakage into coordinates the invariants do not
    touch; near unstable fixed sets that leakage grows into a spurious class change.
    """
    rows = np.array(rows, dtype=float)
    if rows.size:
        peak = np.abs(rows).max(axis=tuple(range(1, rows.ndim)), keepdims=True)
        rows[np.abs(rows) < rel * peak] = 0.0
    return rows


def linear_invariants(H: Subgroup):
    """Rows z with [eta, z] = 0 for eta in h and Ad_g z = z; F = <mu, z>."""
    k = H.k
    blocks = [H.algebra.ad_matrix(eta) for eta in H.basis]
    blocks += [A - np.eye(k) for A in H.generator_Ads]
    return _chop(null_rows(np.vstack(blocks) if blocks else np.zeros((0, k)), k))


def _sym_basis(k):
    out = []
    for i, j in combinations_with_replacement(range(k), 2):
        E = np.zeros((k, k))
        E[i, j] = E[j, i] = 1.0
        out.append(E)
    return out


def quadratic_invariants(H: Subgroup):
    """Symmetric Q with mu^T Q mu H-invariant on all of g*."""
    k = H.k
    basis = _sym_basis(k)
    cols = []
    for E in basis:
        parts = [(H.algebra.ad_matrix(eta) @ E + E @ H.algebra.ad_matrix(eta).T).ravel()
                 for eta in H.basis]
        parts += [(A @ E @ A.T - E).ravel() for A in H.generator_Ads]
        cols.append(np.concatenate(parts) if parts else np.zeros(0))
    M = np.array(cols).T
    coeffs = _chop(null_rows(M, len(basis))) if M.size else np.eye(len(basis))
    return [np.einsum("a,aij->ij", c, np.array(basis)) for c in coeffs]


def casimirs(algebra: LieAlgebra):
    """Ad*-invariant functions: the inverse-metric quadratic and linear central ones."""
    k = algebra.dim
    out = []
    if algebra.metric is not None:
        out.append(InvariantFunction(Polynomial.quadratic(np.linalg.inv(algebra.metric)),
                                     name="metric_quadratic"))
    for i, z in enumerate(algebra.center()):
        out.append(InvariantFunction(Polynomial.linear(z), name=f"central_{i + 1}"))
    return out


def invariant_generators(H: Subgroup):
    """Linear and quadratic invariant polynomials (a generating family up to degree 2)."""
    gens = [Polynomial.linear(z) for z in linear_invariants(H)]
    gens += [Polynomial.quadratic(Q) for Q in quadratic_invariants(H)]
    return gens


def random_invariant_polynomial(H: Subgroup, rng, degree=4):
    """Random combination of invariant generators and their pairwise products."""
    gens = invariant_generators(H)
    p = Polynomial.constant(H.k, rng.normal())
    for g in gens:
        p = p + rng.normal() * g
    if degree >= 3:
        weight = 1.0 / max(1, len(gens))
        for a, b in combinations_with_replacement(range(len(gens)), 2):
            if gens[a].degree + gens[b].degree <= degree:
                p = p + weight * rng.normal() * gens[a] * gens[b]
    return InvariantFunction(p, name="random_invariant")


# -- bracket and Hamiltonian field ---------------------------------------------


def _prepare(H, mu, functions):
    H = _as_subgroup(H)
    mu = check_in_annihilator(H, mu)
    for f in functions:
        f.certify(H)
    return H, mu


def lp_bracket(f: InvariantFunction, g: InvariantFunction, mu, H, finite_difference=False):
    """{f, g}([mu]) = -<mu, [dF, dG]> for mu in h°."""
    H, mu = _prepare(H, mu, (f, g))
    df = f.gradient(mu, finite_difference)
    dg = g.gradient(mu, finite_difference)
    return -float(mu @ H.algebra.bracket(df, dg))


def ham_field(f: InvariantFunction, mu, H, finite_difference=False):
    """ad*_{dF} mu."""
    H, mu = _prepare(H, mu, (f,))
    return H.algebra.coadjoint_ad(f.gradient(mu, finite_difference), mu)


def lie_poisson_direct(algebra: LieAlgebra, df, dg, mu):
    """Reference (−) Lie-Poisson bracket, -c^k_ij mu_k df^i dg^j."""
    c = algebra.structure_constants
    total = 0.0
    for kk in range(algebra.dim):
        for i in range(algebra.dim):
            for j in range(algebra.dim):
                total -= c[kk, i, j] * mu[kk] * df[i] * dg[j]
    return total


def homogeneous_tensor(H: Subgroup, mu, T=None):
    """Bracket matrix on h° coordinates mu_f (mu = C mu_f): pi_ab = -<mu, [zeta_a, zeta_b]>.

    ``T`` is an orthogonal adapted basis (first r columns span h); by default
    the complement rows of H are used.
    """
    H = _as_subgroup(H)
    C = H.complement.T if T is None else np.asarray(T)[:, H.r:]
    mu = np.asarray(mu, dtype=float)
    m = C.shape[1]
    pi = np.zeros((m, m))
    for a in range(m):
        for b in range(m):
            pi[a, b] = -mu @ H.algebra.bracket(C[:, a], C[:, b])
    return pi


# -- flows ---------------------------------------------------------------------


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (steps + 1, k)
    h_distance: np.ndarray
    casimir_drift: np.ndarray
    classes: list
    failed_step: int | None = None

    @property
    def max_h_distance(self):
        return float(self.h_distance.max())

    @property
    def max_casimir_drift(self):
        return float(self.casimir_drift.max(initial=0.0))

    @property
    def class_constant(self):
        return all(c == self.classes[0] for c in self.classes)

    def to_rows(self):
        k = self.states.shape[1]
        header = ["step", "t"] + [f"mu{i + 1}" for i in range(k)] + [
            "h_distance", "casimir_drift", "stabilizer_dim", "component_order"]
        rows = []
        for n, (t, s) in enumerate(zip(self.times, self.states)):
            c = self.classes[n]
            rows.append([n, float(t), *map(float, s), float(self.h_distance[n]),
                         float(self.casimir_drift[n]), c.stabilizer_dim, c.component_order])
        return header, rows


def _rk4(rhs, y0, T, steps):
    dt = T / steps
    ys = np.empty((steps + 1,) + y0.shape)
    ys[0] = y = y0
    for n in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at step {n + 1}", step=n + 1)
        ys[n + 1] = y
    return ys


def flow_many(f: InvariantFunction, mu0s, T: float, steps: int, H, classify=True):
    """RK4 trajectories of mu' = ad*_{dF} mu from several initial points at once."""
    H = _as_subgroup(H)
    if steps < 1:
        raise InputError("steps must be >= 1")
    mu0s = np.atleast_2d(np.asarray(mu0s, dtype=float))
    for m in mu0s:
        check_in_annihilator(H, m)
    f.certify(H)
    Tc = H.algebra.coadjoint_tensor

    def rhs(mus):
        return np.einsum("jik,ni,nk->nj", Tc, f.gradient(mus), mus)

    ys = _rk4(rhs, mu0s, T, steps)
    P = annihilator_basis(H).projector
    cas = casimirs(H.algebra)
    times = np.linspace(0.0, T, steps + 1)
    out = []
    for n in range(len(mu0s)):
        states = ys[:, n, :]
        dist = np.linalg.norm(states - states @ P.T, axis=1)
        drift = np.zeros(steps + 1)
        for c in cas:
            vals = np.array(c(states)) if c.polynomial is not None else np.array([c(s) for s in states])
            drift = np.maximum(drift, np.abs(vals - vals[0]) / max(1.0, abs(vals[0])))
        classes = isotropy_many(H, states) if classify else [isotropy_at(states[0], H)]
        out.append(Trajectory(times, states, dist, drift, classes))
    return out


def flow(f: InvariantFunction, mu0, T: float, steps: int, H, classify=True) -> Trajectory:
    return flow_many(f, [mu0], T, steps, H, classify)[0]


# -- leaves --------------------------------------------------------------------


def gradient_space(H: Subgroup, mu):
    """Rows spanning {zeta fixed by the stabilizer of mu, <ad*_eta mu, zeta> = 0 for eta in h}.

    Every gradient of an H-invariant function at mu lies here.
    """
    k = H.k
    k_mu, fixing = stabilizer(H, mu)
    blocks = [H.algebra.ad_matrix(z) for z in k_mu]
    blocks += [H.finite_Ads[i] - np.eye(k) for i in fixing]
    L = orbit_generators(H, mu)
    if L.size:
        blocks.append(L.T)
    return null_rows(np.vstack(blocks) if blocks else np.zeros((0, k)), k)


def _span_rank(M, mu):
    return numerical_rank(M, 1e-8 * max(1.0, float(np.linalg.norm(mu))))


@dataclass
class LeafProbe:
    origin: np.ndarray
    casimir_values: list
    isotropy: IsotropyClass
    leaf_dim: int
    span_rank: int
    orbit_in_span: int
    stratum_dim: int = 0
    notes: list = field(default_factory=list)

    def verify(self, H):
        return isotropy_at(self.origin, H) == self.isotropy

    def to_record(self):
        return {
            "origin": list(map(float, self.origin)),
            "casimir_values": [float(v) for v in self.casimir_values],
            "stabilizer_dim": self.isotropy.stabilizer_dim,
            "component_order": self.isotropy.component_order,
            "leaf_dim": self.leaf_dim,
            "span_rank": self.span_rank,
            "orbit_in_span": self.orbit_in_span,
            "stratum_dim": self.stratum_dim,
        }


def leaf_report(mu0, H, functions=None) -> LeafProbe:
    """Leaf dimension through [mu0] from Hamiltonian vectors modulo H-orbit directions.

    With ``functions`` the spanning family is the given invariant functions;
    otherwise it is the whole space of admissible gradients at mu0.
    """
    H = _as_subgroup(H)
    mu0 = check_in_annihilator(H, mu0)
    if functions is None:
        grads = gradient_space(H, mu0)
    else:
        for f in functions:
            f.certify(H)
        grads = np.array([f.gradient(mu0) for f in functions]).reshape(-1, H.k)
    S = np.array([H.algebra.coadjoint_ad(z, mu0) for z in grads]).reshape(-1, H.k).T
    O = orbit_generators(H, mu0)
    rs, ro = _span_rank(S, mu0), _span_rank(O, mu0)
    both = _span_rank(np.hstack([S, O]), mu0)
    inter = rs + ro - both
    cas = [float(c(mu0)) for c in casimirs(H.algebra)]
    return LeafProbe(mu0, cas, isotropy_at(mu0, H), rs - inter, rs, inter,
                     stratum_dimensions(H, mu0)[0])


def leaf_generators(H, mu):
    """Algebra vectors zeta_a whose ad*_{zeta_a} mu span the leaf modulo h.mu."""
    H = _as_subgroup(H)
    mu = np.asarray(mu, dtype=float)
    Z = gradient_space(H, mu)
    if not Z.size:
        return np.zeros((0, H.k))
    S = np.array([H.algebra.coadjoint_ad(z, mu) for z in Z]).T
    O = orbit_generators(H, mu)
    tol = 1e-8 * max(1.0, float(np.linalg.norm(mu)))
    if O.size:
        U, s, _ = np.linalg.svd(O, full_matrices=False)
        U = U[:, s > tol]
        S = S - U @ (U.T @ S)
    _, s, Vt = np.linalg.svd(S, full_matrices=False)
    return Vt[s > tol] @ Z


def stratified_kks_pair(mu, xi, eta, H=None, tol=1e-8):
    """omega(ad*_xi mu, ad*_eta mu) = -<mu, [xi, eta]> on O ∩ h°_(K).

    Both generators must be tangent to the stratum; otherwise InputError.
    """
    if H is None:
        raise InputError("a subgroup (or algebra for H = {e}) is required")
    H = _as_subgroup(H)
    mu = check_in_annihilator(H, mu)
    scale = max(1.0, float(np.linalg.norm(mu)))
    k_mu, fixing = stabilizer(H, mu)
    C = H.complement
    blocks = [H.algebra.ad_star_matrix(z) @ C.T for z in k_mu]
    blocks += [(H.finite_Ads[i].T - np.eye(H.k)) @ C.T for i in fixing]
    if C.shape[0]:
        ker = null_rows(np.vstack(blocks) if blocks else np.zeros((0, C.shape[0])), C.shape[0])
        fix = ker @ C
    else:
        fix = np.zeros((0, H.k))
    tangent = np.hstack([orbit_generators(H, mu), fix.T])
    U, s, _ = np.linalg.svd(tangent, full_matrices=False) if tangent.size else (None, [], None)
    U = U[:, np.asarray(s) > 1e-8 * scale] if tangent.size else np.zeros((H.k, 0))
    for v in (xi, eta):
        t = H.algebra.coadjoint_ad(v, mu)
        res = float(np.linalg.norm(t - U @ (U.T @ t)))
        if res >= tol * scale:
            raise InputError(f"generator is not tangent to the stratum (residual {res:.3e})")
    return -float(mu @ H.algebra.bracket(xi, eta))
