"""Finite-dimensional Lie algebras and their matrix groups.

Conventions (used everywhere in the package):

* ``c[k, i, j]`` are structure constants, ``[e_i, e_j] = c[k, i, j] e_k``.
* Covectors are coordinate vectors in the dual basis; the pairing is the dot
  product.
* ``ad*_xi mu`` is fixed by ``<ad*_xi mu, eta> = <mu, [xi, eta]>``, i.e.
  ``(ad*_xi mu)_j = c[k, i, j] xi^i mu_k``.
* ``Ad*_g`` is the dual of ``Ad_g`` (the transpose in coordinates). The left
  coadjoint *action* of ``g`` is ``Ad*_{g^-1}``, the inverse transpose of
  ``Ad_g``; its generator is ``d/dt Ad*_{exp(-t xi)} mu = -ad*_xi mu``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg

from .errors import InputError, UnsupportedError

MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """A Lie algebra given by structure constants.

    Attributes:
        structure_constants: array ``c[k, i, j]`` of shape (dim, dim, dim).
        labels: names of the basis vectors.
        rep: optional faithful matrix representation, shape (dim, d, d).
        metric: optional Ad-invariant inner product on the algebra.
        orthogonal: whether the represented group consists of orthogonal matrices.
    """

    structure_constants: np.ndarray
    labels: tuple = ()
    rep: np.ndarray | None = None
    metric: np.ndarray | None = None
    name: str = ""
    orthogonal: bool = True

    def __post_init__(self):
        c = np.array(self.structure_constants, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise InputError(f"structure constants must be k x k x k, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "structure_constants", c)
        k = c.shape[0]
        labels = tuple(self.labels) if self.labels else tuple(f"e{i + 1}" for i in range(k))
        if len(labels) != k:
            raise InputError("need one label per basis vector")
        object.__setattr__(self, "labels", labels)
        if self.rep is not None:
            rep = np.array(self.rep, dtype=float)
            if k == 0:
                rep = rep.reshape(0, *rep.shape[1:]) if rep.ndim == 3 else np.zeros((0, 1, 1))
            if rep.ndim != 3 or rep.shape[0] != k or rep.shape[1] != rep.shape[2]:
                raise InputError(f"rep must have shape ({k}, d, d), got {rep.shape}")
            rep.setflags(write=False)
            object.__setattr__(self, "rep", rep)
        if self.metric is not None:
            m = np.array(self.metric, dtype=float)
            if m.shape != (k, k) or not np.allclose(m, m.T):
                raise InputError("metric must be a symmetric k x k matrix")
            if k and np.linalg.eigvalsh(m).min() <= 0:
                raise InputError("metric must be positive definite")
            m.setflags(write=False)
            object.__setattr__(self, "metric", m)

    @property
    def dim(self):
        return self.structure_constants.shape[0]

    @property
    def rep_dim(self):
        if self.rep is None:
            raise UnsupportedError(f"algebra {self.name!r} has no matrix representation")
        return self.rep.shape[1]

    # -- integrity ----------------------------------------------------------

    def antisymmetry_residual(self):
        c = self.structure_constants
        return float(np.abs(c + c.transpose(0, 2, 1)).max(initial=0.0))

    def jacobi_residual(self):
        """Max over (i, j, k, l) of the cyclic Jacobi sum of structure constants."""
        c = self.structure_constants
        # t[l, i, j, k] = sum_m c^m_ij c^l_mk
        t = np.einsum("mij,lmk->lijk", c, c)
        cyc = t + t.transpose(0, 2, 3, 1) + t.transpose(0, 3, 1, 2)
        return float(np.abs(cyc).max(initial=0.0))

    def rep_residual(self):
        """Max entry of rho_i rho_j - rho_j rho_i - c^k_ij rho_k."""
        if self.rep is None:
            return 0.0
        R = self.rep
        comm = np.einsum("iab,jbc->ijac", R, R)
        comm = comm - comm.transpose(1, 0, 2, 3)
        rhs = np.einsum("kij,kac->ijac", self.structure_constants, R)
        return float(np.abs(comm - rhs).max(initial=0.0))

    def validate(self, jacobi_tol=1e-12, rep_tol=1e-10):
        if self.antisymmetry_residual() != 0.0:
            raise InputError(f"{self.name}: structure constants are not antisymmetric")
        if self.jacobi_residual() >= jacobi_tol:
            raise InputError(f"{self.name}: Jacobi identity fails")
        if self.rep_residual() >= rep_tol:
            raise InputError(f"{self.name}: representation does not match structure constants")
        return self

    # -- brackets and coadjoint operators -----------------------------------

    def _vec(self, v, what="vector"):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise InputError(f"{what} has shape {v.shape}, expected ({self.dim},)")
        return v

    def bracket(self, xi, eta):
        xi, eta = self._vec(xi), self._vec(eta)
        return np.einsum("kij,i,j->k", self.structure_constants, xi, eta)

    def ad_matrix(self, xi):
        """Matrix of eta -> [xi, eta]."""
        return np.einsum("kij,i->kj", self.structure_constants, self._vec(xi))

    def ad_star_matrix(self, xi):
        """Matrix of mu -> ad*_xi mu; the transpose of ad_matrix."""
        return self.ad_matrix(xi).T

    def coadjoint_ad(self, xi, mu):
        mu = self._vec(mu, "covector")
        return np.einsum("kij,i,k->j", self.structure_constants, self._vec(xi), mu)

    @cached_property
    def coadjoint_tensor(self):
        """T[j, i, k] = c[k, i, j]: (ad*_xi mu)_j = T[j, i, k] xi^i mu_k."""
        return np.ascontiguousarray(self.structure_constants.transpose(2, 1, 0))

    def center(self):
        """Orthonormal basis (rows) of the centre {z : [z, eta] = 0 for all eta}."""
        k = self.dim
        if k == 0:
            return np.zeros((0, 0))
        M = self.structure_constants.transpose(0, 2, 1).reshape(k * k, k)
        _, s, Vt = np.linalg.svd(M)
        return Vt[int(np.sum(s > 1e-12 * max(1.0, s[0]))):]

    # -- matrix representation ----------------------------------------------

    @cached_property
    def _rep_pinv(self):
        R = self.rep.reshape(self.dim, -1).T  # (d*d, k)
        return np.linalg.pinv(R), R

    def to_matrix(self, xi):
        if self.rep is None:
            raise UnsupportedError(f"algebra {self.name!r} has no matrix representation")
        return np.einsum("i,iab->ab", self._vec(xi), self.rep)

    def from_matrix(self, X, return_residual=False):
        """Coordinates of a matrix in the span of the representation (least squares)."""
        if self.rep is None:
            raise UnsupportedError(f"algebra {self.name!r} has no matrix representation")
        pinv, R = self._rep_pinv
        x = np.asarray(X, dtype=float).ravel()
        coords = pinv @ x
        if return_residual:
            return coords, float(np.abs(R @ coords - x).max(initial=0.0))
        return coords

    def check_membership(self, g, tol=MEMBERSHIP_TOL):
        """Residual of g against the represented group; raises InputError above tol."""
        g = np.asarray(g, dtype=float)
        d = self.rep_dim
        if g.shape != (d, d):
            raise InputError(f"group element has shape {g.shape}, expected ({d}, {d})")
        res = 0.0
        if self.orthogonal:
            res = float(np.abs(g.T @ g - np.eye(d)).max())
        if res < tol:
            ginv = g.T if self.orthogonal else np.linalg.inv(g)
            for Ri in self.rep:
                _, r = self.from_matrix(g @ Ri @ ginv, return_residual=True)
                res = max(res, r)
        if res >= tol:
            raise InputError(f"matrix is not in the represented group (residual {res:.3e})")
        return res

    def Ad(self, g, tol=MEMBERSHIP_TOL):
        """Matrix of Ad_g in basis coordinates (columns are Ad_g e_i)."""
        self.check_membership(g, tol)
        g = np.asarray(g, dtype=float)
        ginv = g.T if self.orthogonal else np.linalg.inv(g)
        pinv, _ = self._rep_pinv
        cols = [pinv @ (g @ Ri @ ginv).ravel() for Ri in self.rep]
        return np.array(cols).T.reshape(self.dim, self.dim)

    def group_adjoint(self, g, xi):
        return self.Ad(g) @ self._vec(xi)

    def group_coadjoint(self, g, mu):
        """Ad*_g mu, the dual of Ad_g: <Ad*_g mu, xi> = <mu, Ad_g xi>."""
        return self.Ad(g).T @ self._vec(mu, "covector")

    def coadjoint_action(self, g, mu):
        """Left coadjoint action g . mu = Ad*_{g^-1} mu."""
        return np.linalg.solve(self.Ad(g).T, self._vec(mu, "covector"))

    def exponential(self, xi):
        """exp(rho(xi)) via scaling-and-squaring Pade (scipy.linalg.expm)."""
        return linalg.expm(self.to_matrix(xi))

    # -- constructions ------------------------------------------------------

    def change_basis(self, T, name=None):
        """Same algebra in the basis given by the columns of T."""
        T = np.asarray(T, dtype=float)
        Tinv = np.linalg.inv(T)
        c = np.einsum("km,mab,ai,bj->kij", Tinv, self.structure_constants, T, T)
        rep = None if self.rep is None else np.einsum("ai,abc->ibc", T, self.rep)
        metric = None if self.metric is None else T.T @ self.metric @ T
        labels = tuple(f"f{i + 1}" for i in range(self.dim))
        return LieAlgebra(c, labels, rep, metric, name or f"{self.name}'", self.orthogonal)

    def direct_sum(self, other, name=None):
        k1, k2 = self.dim, other.dim
        k = k1 + k2
        c = np.zeros((k, k, k))
        c[:k1, :k1, :k1] = self.structure_constants
        c[k1:, k1:, k1:] = other.structure_constants
        rep = None
        if self.rep is not None and other.rep is not None:
            d1, d2 = self.rep_dim, other.rep_dim
            rep = np.zeros((k, d1 + d2, d1 + d2))
            rep[:k1, :d1, :d1] = self.rep
            rep[k1:, d1:, d1:] = other.rep
        metric = None
        if self.metric is not None and other.metric is not None:
            metric = linalg.block_diag(self.metric, other.metric)
        return LieAlgebra(c, self.labels + other.labels, rep, metric,
                          name or f"{self.name}+{other.name}",
                          self.orthogonal and other.orthogonal)


def structure_constants_from_rep(rep):
    """c[k, i, j] from commutators of a (possibly complex) matrix basis."""
    rep = np.asarray(rep)
    k = rep.shape[0]
    basis = rep.reshape(k, -1).T
    c = np.zeros((k, k, k))
    for i in range(k):
        for j in range(k):
            comm = (rep[i] @ rep[j] - rep[j] @ rep[i]).ravel()
            coords, *_ = np.linalg.lstsq(basis, comm, rcond=None)
            c[:, i, j] = np.real_if_close(coords).real
    return c


def realify(matrices):
    """Real 2d x 2d form of complex d x d matrices, X -> [[Re X, -Im X], [Im X, Re X]]."""
    M = np.asarray(matrices, dtype=complex)
    re, im = M.real, M.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def _levi_civita():
    eps = np.zeros((3, 3, 3))
    for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
                         (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}.items():
        eps[k, i, j] = s
    return eps


def so3():
    """so(3) with [e1, e2] = e3 (cyclic), 3x3 rotation generators."""
    rep = np.zeros((3, 3, 3))
    for i in range(3):
        rep[i] = -_levi_civita()[i]  # (e_i)_{ab} = -eps_{iab}
    return LieAlgebra(_levi_civita(), ("e1", "e2", "e3"), rep, np.eye(3), "so3")


PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


def su2_complex_basis():
    """e_k = -(i/2) sigma_k, so that [e1, e2] = e3."""
    return -0.5j * PAULI


def su2():
    """su(2) in the basis -(i/2) sigma_k, represented by real 4x4 matrices."""
    return LieAlgebra(_levi_civita(), ("e1", "e2", "e3"), realify(su2_complex_basis()),
                      np.eye(3), "su2")


def u1():
    return LieAlgebra(np.zeros((1, 1, 1)), ("e",), np.array([[[0.0, -1.0], [1.0, 0.0]]]),
                      np.eye(1), "u1")


def so3_u1():
    return so3().direct_sum(u1(), name="so3_u1")


ALGEBRAS = {"so3": so3, "su2": su2, "u1": u1, "so3_u1": so3_u1}


def get_algebra(name):
    try:
        return ALGEBRAS[name]()
    except KeyError:
        raise InputError(f"unknown algebra {name!r}; known: {sorted(ALGEBRAS)}") from None


def zero_algebra():
    """The zero algebra (n/h when H is its own normalizer), acting on R^1."""
    return LieAlgebra(np.zeros((0, 0, 0)), (), np.zeros((0, 1, 1)), np.zeros((0, 0)), "zero")
