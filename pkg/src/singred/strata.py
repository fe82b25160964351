"""Subgroups H of a matrix group, the spaces h°, g/h, n(H), and the
orbit-type stratification of h° under the coadjoint action of H.

Isotropy classes are identified by the invariant pair
(stabilizer dimension, order of the discrete stabilizer). This is not a
conjugacy test; it separates every catalog example but can merge distinct
classes in general.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg

from .errors import InputError
from .lie import LieAlgebra, MEMBERSHIP_TOL

GROUP_ORDER_CAP = 64
RANK_TOL = 1e-8
H_CIRC_TOL = 1e-10


def orth_rows(vectors, tol=1e-10):
    """Orthonormal rows spanning the row space of ``vectors``."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if V.size == 0:
        return np.zeros((0, V.shape[-1] if V.ndim == 2 else 0))
    return linalg.orth(V.T, rcond=tol).T


def null_rows(M, dim, tol=1e-10):
    """Orthonormal rows spanning the kernel of M (M has ``dim`` columns)."""
    M = np.asarray(M, dtype=float).reshape(-1, dim)
    if M.shape[0] == 0:
        return np.eye(dim)
    if dim == 0:
        return np.zeros((0, 0))
    _, s, Vt = np.linalg.svd(M)
    cutoff = tol * max(1.0, s[0] if s.size else 0.0)
    return Vt[int(np.sum(s > cutoff)):]


def numerical_rank(M, tol):
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol))


def subspace_distance(A, B):
    """Largest principal angle between row spaces (pi/2 if dimensions differ)."""
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    ra = A.shape[0] if A.size else 0
    rb = B.shape[0] if B.size else 0
    if ra != rb:
        return float(np.pi / 2)
    if ra == 0:
        return 0.0
    return float(np.max(linalg.subspace_angles(A.T, B.T)))


def finite_group(matrices, cap=GROUP_ORDER_CAP, tol=1e-8):
    """Elements of the group generated by ``matrices`` (identity first).

    Returns ``(elements, capped)``; enumeration stops once ``cap`` elements
    have been found.
    """
    mats = [np.asarray(g, dtype=float) for g in matrices]
    if not mats:
        return [], False
    d = mats[0].shape[0]
    elements = [np.eye(d)]
    frontier = [np.eye(d)]

    def known(m):
        return any(np.abs(m - e).max() < tol for e in elements)

    while frontier:
        new = []
        for a in frontier:
            for g in mats:
                m = g @ a
                if not known(m):
                    elements.append(m)
                    new.append(m)
                    if len(elements) >= cap:
                        return elements, True
        frontier = new
    return elements, False


@dataclass(frozen=True, eq=False)
class Subgroup:
    """H with Lie algebra spanned by the rows of ``basis`` and component group
    generated by ``generators`` (matrices in the parent's representation)."""

    algebra: LieAlgebra
    basis: np.ndarray
    generators: tuple = ()
    name: str = ""

    def __post_init__(self):
        k = self.algebra.dim
        B = np.asarray(self.basis, dtype=float).reshape(-1, k)
        if B.shape[0] and numerical_rank(B, 1e-10) < B.shape[0]:
            raise InputError(f"subgroup {self.name!r}: subalgebra basis is rank deficient")
        object.__setattr__(self, "basis", B)
        gens = tuple(np.asarray(g, dtype=float) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        self.validate()

    @classmethod
    def from_indices(cls, algebra, indices, generators=(), name=""):
        return cls(algebra, np.eye(algebra.dim)[list(indices)], generators, name)

    @classmethod
    def trivial(cls, algebra, name=""):
        return cls(algebra, np.zeros((0, algebra.dim)), (), name or f"{algebra.name}_e")

    @property
    def r(self):
        return self.basis.shape[0]

    @property
    def k(self):
        return self.algebra.dim

    @cached_property
    def orthonormal_basis(self):
        return orth_rows(self.basis) if self.r else np.zeros((0, self.k))

    @cached_property
    def complement(self):
        """Orthonormal rows spanning the Euclidean complement of h (identified with h°)."""
        return null_rows(self.orthonormal_basis, self.k)

    def closure_residual(self):
        C = self.complement
        res = 0.0
        for a in self.basis:
            for b in self.basis:
                res = max(res, float(np.abs(C @ self.algebra.bracket(a, b)).max(initial=0.0)))
        return res

    def normalizes_residual(self):
        C = self.complement
        res = 0.0
        for A in self.generator_Ads:
            for a in self.basis:
                res = max(res, float(np.abs(C @ (A @ a)).max(initial=0.0)))
        return res

    def validate(self):
        if self.closure_residual() >= 1e-10:
            raise InputError(f"subgroup {self.name!r}: basis does not close under the bracket")
        if self.normalizes_residual() >= 1e-10:
            raise InputError(f"subgroup {self.name!r}: a generator does not normalize h")

    @cached_property
    def generator_Ads(self):
        return [self.algebra.Ad(g) for g in self.generators]

    @cached_property
    def _finite(self):
        elements, capped = finite_group(self.generators)
        return elements, [self.algebra.Ad(g, tol=1e-6) for g in elements], capped

    @property
    def finite_elements(self):
        return self._finite[0]

    @property
    def finite_Ads(self):
        return self._finite[1]

    @property
    def finite_capped(self):
        return self._finite[2]

    def random_element(self, rng):
        """exp of a random h element times a random element of the finite part."""
        d = self.algebra.rep_dim
        g = np.eye(d)
        if self.r:
            g = self.algebra.exponential(rng.normal(size=self.r) @ self.basis * 2.0)
        if self.finite_elements:
            g = g @ self.finite_elements[rng.integers(len(self.finite_elements))]
        return g


def subgroup_from_document(algebra, doc):
    """Build a Subgroup from ``{"name", "basis_indices" | "basis", "generators"}``."""
    name = doc.get("name", "")
    gens = [np.asarray(g, dtype=float) for g in doc.get("generators", [])]
    if "basis_indices" in doc:
        return Subgroup.from_indices(algebra, doc["basis_indices"], gens, name)
    basis = np.asarray(doc.get("basis", []), dtype=float).reshape(-1, algebra.dim)
    return Subgroup(algebra, basis, gens, name)


# -- linear spaces attached to H ------------------------------------------


@dataclass(frozen=True)
class AnnihilatorBasis:
    vectors: np.ndarray  # (k - r, k), orthonormal rows
    projector: np.ndarray  # (k, k)

    @property
    def dim(self):
        return self.vectors.shape[0]

    def distance(self, mu):
        mu = np.asarray(mu, dtype=float)
        return float(np.linalg.norm(mu - self.projector @ mu))


def annihilator_basis(H: Subgroup) -> AnnihilatorBasis:
    V = H.complement
    return AnnihilatorBasis(V, V.T @ V)


def adapted_basis(H: Subgroup):
    """Orthogonal matrix T whose first r columns span h.

    The remaining columns are standard basis vectors projected off h and
    orthonormalised, so for coordinate subalgebras T is a permutation.
    """
    k, r = H.k, H.r
    cols = list(H.orthonormal_basis)
    for i in np.argsort(-np.linalg.norm(H.complement, axis=0), kind="stable"):
        if len(cols) == k:
            break
        v = np.eye(k)[i]
        for c in cols:
            v = v - (c @ v) * c
        n = np.linalg.norm(v)
        if n > 1e-8:
            cols.append(v / n)
    T = np.array(cols).T if cols else np.zeros((0, 0))
    if T.shape != (k, k):
        raise InputError("could not complete an adapted basis")
    # keep the complement columns in ascending coordinate order when possible
    comp = T[:, r:]
    order = np.argsort([int(np.argmax(np.abs(c))) for c in comp.T], kind="stable")
    T[:, r:] = comp[:, order]
    return T


@dataclass(frozen=True)
class NormalizerAlgebra:
    basis: np.ndarray  # rows spanning n
    quotient: np.ndarray  # rows spanning a complement of h in n, orthogonal to h

    @property
    def quotient_dim(self):
        return self.quotient.shape[0]


def normalizer_algebra(H: Subgroup) -> NormalizerAlgebra:
    """n = {xi : [eta, xi] in h for eta in h, Ad_g xi - xi in h for generators g}."""
    k, C = H.k, H.complement
    rows = [C @ H.algebra.ad_matrix(eta) for eta in H.basis]
    rows += [C @ (A - np.eye(k)) for A in H.generator_Ads]
    n = null_rows(np.vstack(rows) if rows else np.zeros((0, k)), k)
    quotient = orth_rows(n @ (C.T @ C)) if n.shape[0] else np.zeros((0, k))
    quotient = quotient if quotient.size else np.zeros((0, k))
    return NormalizerAlgebra(n, quotient)


def fixed_set(H: Subgroup, space: str = "h°"):
    """Rows spanning the H-fixed subspace of h° (covectors) or of g/h.

    g/h is identified with the Euclidean complement of h, so the rows are
    algebra vectors orthogonal to h.
    """
    k, C = H.k, H.complement
    m = C.shape[0]
    if space in ("g/h", "quotient"):
        blocks = [C @ H.algebra.ad_matrix(eta) @ C.T for eta in H.basis]
        blocks += [C @ A @ C.T - np.eye(m) for A in H.generator_Ads]
    elif space in ("h°", "h0", "annihilator"):
        blocks = [H.algebra.ad_star_matrix(eta) @ C.T for eta in H.basis]
        blocks += [(A.T - np.eye(k)) @ C.T for A in H.generator_Ads]
    else:
        raise InputError(f"unknown space {space!r}; use 'h°' or 'g/h'")
    if m == 0:
        return np.zeros((0, k))
    ker = null_rows(np.vstack(blocks) if blocks else np.zeros((0, m)), m)
    return ker @ C if ker.size else np.zeros((0, k))


def zero_stratum_distance(H: Subgroup):
    """Principal-angle distance between Fix(H, g/h) and n/h."""
    return subspace_distance(fixed_set(H, "g/h"), normalizer_algebra(H).quotient)


# -- isotropy ---------------------------------------------------------------


@dataclass(frozen=True, order=True)
class IsotropyClass:
    stabilizer_dim: int
    component_order: int
    capped: bool = False

    @property
    def label(self):
        order = f"≥{self.component_order}" if self.capped else str(self.component_order)
        return f"(K: dim={self.stabilizer_dim}, order={order})"

    def __str__(self):
        return self.label


def _scale(mu):
    return max(1.0, float(np.linalg.norm(mu)))


def orbit_generators(H: Subgroup, mu):
    """Columns ad*_eta mu for eta in the basis of h (shape k x r)."""
    if not H.r:
        return np.zeros((H.k, 0))
    return np.array([H.algebra.coadjoint_ad(eta, mu) for eta in H.basis]).T


def check_in_annihilator(H, mu, tol=H_CIRC_TOL):
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (H.k,):
        raise InputError(f"covector has shape {mu.shape}, expected ({H.k},)")
    dist = float(np.abs(H.basis @ mu).max(initial=0.0)) if H.r else 0.0
    if dist >= tol * _scale(mu):
        raise InputError(f"covector is not in h° (residual {dist:.3e})")
    return mu


def stabilizer(H: Subgroup, mu):
    """(stabilizer subalgebra rows, indices of finite elements fixing mu)."""
    mu = np.asarray(mu, dtype=float)
    tol = RANK_TOL * _scale(mu)
    L = orbit_generators(H, mu)
    if H.r:
        _, sv, Vt = np.linalg.svd(L)
        k_mu = Vt[int(np.sum(sv > tol)):] @ H.basis
    else:
        k_mu = np.zeros((0, H.k))
    fixing = [i for i, A in enumerate(H.finite_Ads) if np.abs(A.T @ mu - mu).max() < tol]
    return k_mu, fixing


def isotropy_at(mu, H: Subgroup) -> IsotropyClass:
    mu = check_in_annihilator(H, mu)
    tol = RANK_TOL * _scale(mu)
    rank = numerical_rank(orbit_generators(H, mu), tol)
    if H.finite_Ads:
        order = sum(1 for A in H.finite_Ads if np.abs(A.T @ mu - mu).max() < tol)
    else:
        order = 1
    return IsotropyClass(H.r - rank, order, H.finite_capped)


def isotropy_many(H: Subgroup, mus):
    """isotropy_at for a stack of covectors (no h° check; used on trajectories)."""
    mus = np.atleast_2d(np.asarray(mus, dtype=float))
    tol = RANK_TOL * np.maximum(1.0, np.linalg.norm(mus, axis=1))
    if H.r:
        L = np.einsum("jik,ai,nk->nja", H.algebra.coadjoint_tensor, H.basis, mus)
        sv = np.linalg.svd(L, compute_uv=False)
        dims = H.r - np.sum(sv > tol[:, None], axis=1)
    else:
        dims = np.zeros(len(mus), dtype=int)
    if H.finite_Ads:
        orders = sum((np.abs(mus @ A - mus).max(axis=1) < tol).astype(int) for A in H.finite_Ads)
    else:
        orders = np.ones(len(mus), dtype=int)
    return [IsotropyClass(int(d), int(o), H.finite_capped) for d, o in zip(dims, orders)]


def stratum_dimensions(H: Subgroup, mu):
    """(stratum dim, orbit dim) of h°_(K) at mu.

    Locally the stratum is H . (Fix(K_mu) ∩ h°), so its tangent is spanned
    by the orbit directions and the K_mu-fixed covectors in h°.
    """
    mu = np.asarray(mu, dtype=float)
    tol = RANK_TOL * _scale(mu)
    C = H.complement
    m = C.shape[0]
    L = orbit_generators(H, mu)
    orbit_dim = numerical_rank(L, tol)
    k_mu, fixing = stabilizer(H, mu)
    blocks = [H.algebra.ad_star_matrix(z) @ C.T for z in k_mu]
    blocks += [(H.finite_Ads[i].T - np.eye(H.k)) @ C.T for i in fixing]
    if m == 0:
        return 0, 0
    ker = null_rows(np.vstack(blocks) if blocks else np.zeros((0, m)), m)
    fix = ker @ C if ker.size else np.zeros((0, H.k))
    span = np.hstack([L, fix.T])
    return numerical_rank(span, 1e-8), orbit_dim


# -- enumeration ------------------------------------------------------------


@dataclass
class StratumEntry:
    isotropy: IsotropyClass
    representatives: list = field(default_factory=list)
    count: int = 0
    sources: set = field(default_factory=set)
    contains_origin: bool = False
    stratum_dim: int = 0
    orbit_dim: int = 0

    @property
    def quotient_dim(self):
        return self.stratum_dim - self.orbit_dim

    @property
    def confidence(self):
        return "high" if self.count >= 3 else "low"


@dataclass
class StrataReport:
    subgroup: str
    classes: list
    partial_order: list  # (lower label, upper label): lower isotropy <= upper isotropy
    samples: int
    seed: int | None
    notes: tuple = (
        "classes are keyed by (stabilizer_dim, component_order), not by conjugacy",
        "partial order estimated by closure sampling along segments",
    )

    def class_signature(self):
        return sorted((c.isotropy.stabilizer_dim, c.isotropy.component_order, c.stratum_dim)
                      for c in self.classes)

    def to_record(self):
        return {
            "subgroup": self.subgroup,
            "samples": self.samples,
            "seed": self.seed,
            "notes": list(self.notes),
            "classes": [
                {
                    "label": c.isotropy.label,
                    "stabilizer_dim": c.isotropy.stabilizer_dim,
                    "component_order": c.isotropy.component_order,
                    "capped": c.isotropy.capped,
                    "stratum_dim": c.stratum_dim,
                    "orbit_dim": c.orbit_dim,
                    "quotient_dim": c.quotient_dim,
                    "count": c.count,
                    "confidence": c.confidence,
                    "sources": sorted(c.sources),
                    "contains_origin": c.contains_origin,
                    "representatives": [list(map(float, r)) for r in c.representatives],
                }
                for c in self.classes
            ],
            "partial_order": [list(p) for p in self.partial_order],
        }

    def to_rows(self):
        header = ["label", "stabilizer_dim", "component_order", "stratum_dim",
                  "representative", "confidence"]
        rows = [[c.isotropy.label, c.isotropy.stabilizer_dim, c.isotropy.component_order,
                 c.stratum_dim, " ".join(format(float(v), ".17g") for v in c.representatives[0]),
                 c.confidence] for c in self.classes]
        return header, rows


def _probe_points(H: Subgroup, rng):
    """Origin plus points of every fixed subspace we can name."""
    k, C = H.k, H.complement
    subspaces = [fixed_set(H, "h°")]
    for A in H.finite_Ads[1:]:
        ker = null_rows((A.T - np.eye(k)) @ C.T, C.shape[0]) if C.shape[0] else np.zeros((0, 0))
        subspaces.append(ker @ C if ker.size else np.zeros((0, k)))
    for eta in H.basis:
        M = H.algebra.ad_star_matrix(eta) @ C.T
        ker = null_rows(M, C.shape[0]) if C.shape[0] else np.zeros((0, 0))
        subspaces.append(ker @ C if ker.size else np.zeros((0, k)))
    points = [np.zeros(k)]
    for S in subspaces:
        for v in S:
            points += [v, -v]
        if S.shape[0] > 1:
            w = rng.normal(size=S.shape[0]) @ S
            points.append(w / np.linalg.norm(w))
    return points


def enumerate_strata(H: Subgroup, samples: int = 200, seed: int | None = 0) -> StrataReport:
    if samples < 1:
        raise InputError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    C = H.complement
    entries: dict = {}

    def add(mu, source):
        iso = isotropy_at(mu, H)
        e = entries.get(iso)
        if e is None:
            e = entries[iso] = StratumEntry(iso)
            e.stratum_dim, e.orbit_dim = stratum_dimensions(H, mu)
        e.count += 1
        e.sources.add(source)
        if not np.any(mu):
            e.contains_origin = True
        if len(e.representatives) < 3 and not any(np.allclose(mu, r) for r in e.representatives):
            e.representatives.append(np.asarray(mu, dtype=float))

    for mu in _probe_points(H, rng):
        add(mu, "probe")
    if C.shape[0]:
        for _ in range(samples):
            w = rng.normal(size=C.shape[0])
            add(w @ C / np.linalg.norm(w), "sample")

    classes = sorted(entries.values(), key=lambda e: (-e.isotropy.stabilizer_dim,
                                                      -e.isotropy.component_order))
    order = []
    for lo in classes:
        for hi in classes:
            if lo is hi:
                continue
            if (lo.isotropy.stabilizer_dim > hi.isotropy.stabilizer_dim
                    or lo.isotropy.component_order > hi.isotropy.component_order):
                continue
            if _in_closure(H, lo, hi):
                order.append((lo.isotropy.label, hi.isotropy.label))
    return StrataReport(H.name, classes, order, samples, seed)


def _in_closure(H, lo: StratumEntry, hi: StratumEntry):
    """Does some representative of ``hi`` lie in the closure of the ``lo`` stratum?"""
    for b in hi.representatives:
        for a in lo.representatives:
            if all(isotropy_at(b + t * (a - b), H) == lo.isotropy for t in (1e-3, 1e-4)):
                return True
    return False
