"""Sparse multivariate polynomials with exact gradients.

Used for invariant functions on g*, connection coefficients A_i^a(x) and
phase-space fields on gauge charts. Terms are stored as a mapping from
exponent tuples to coefficients; evaluation is vectorised with numpy.
"""

from __future__ import annotations

from functools import cached_property
from itertools import product

import numpy as np

from .errors import InputError


class Polynomial:
    """Polynomial in ``nvars`` real variables.

    >>> p = Polynomial.variable(2, 0) * Polynomial.variable(2, 1) + 3
    >>> p([2.0, 5.0])
    13.0
    """

    def __init__(self, nvars: int, terms=None):
        self.nvars = int(nvars)
        clean = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars or min(exps, default=0) < 0:
                raise InputError(f"bad exponent tuple {exps} for {self.nvars} variables")
            coef = float(coef)
            if coef != 0.0:
                clean[exps] = clean.get(exps, 0.0) + coef
        self.terms = {e: c for e, c in clean.items() if c != 0.0}

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars, index):
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): 1.0})

    @classmethod
    def linear(cls, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        n = coeffs.size
        return cls(n, {tuple(int(i == j) for j in range(n)): c for i, c in enumerate(coeffs)})

    @classmethod
    def quadratic(cls, matrix):
        """The form z^T Q z (Q symmetrised)."""
        Q = np.asarray(matrix, dtype=float)
        Q = 0.5 * (Q + Q.T)
        n = Q.shape[0]
        terms = {}
        for i in range(n):
            for j in range(i, n):
                exps = [0] * n
                exps[i] += 1
                exps[j] += 1
                terms[tuple(exps)] = Q[i, i] if i == j else 2.0 * Q[i, j]
        return cls(n, terms)

    @classmethod
    def from_table(cls, nvars, table):
        """Build from ``[{"coef": c, "powers": [...]}, ...]``."""
        terms = {}
        for row in table:
            exps = tuple(row["powers"])
            terms[exps] = terms.get(exps, 0.0) + float(row["coef"])
        return cls(nvars, terms)

    def to_table(self):
        return [{"coef": c, "powers": list(e)} for e, c in sorted(self.terms.items())]

    # -- algebra ------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise InputError("polynomials in different numbers of variables")
            return other
        return Polynomial.constant(self.nvars, float(other))

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.nvars, {e: c * float(other) for e, c in self.terms.items()})
        other = self._coerce(other)
        terms = {}
        for (e1, c1), (e2, c2) in product(self.terms.items(), other.terms.items()):
            e = tuple(a + b for a, b in zip(e1, e2))
            terms[e] = terms.get(e, 0.0) + c1 * c2
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Polynomial.constant(self.nvars, 1.0)
        for _ in range(int(k)):
            out = out * self
        return out

    @property
    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def derivative(self, index):
        terms = {}
        for e, c in self.terms.items():
            if e[index]:
                d = list(e)
                d[index] -= 1
                terms[tuple(d)] = terms.get(tuple(d), 0.0) + c * e[index]
        return Polynomial(self.nvars, terms)

    def substitute_linear(self, matrix):
        """Return q(y) = p(M y) for an (nvars x m) matrix M."""
        M = np.asarray(matrix, dtype=float)
        if M.shape[0] != self.nvars:
            raise InputError("substitution matrix has wrong row count")
        rows = [Polynomial.linear(M[i]) for i in range(self.nvars)]
        out = Polynomial.constant(M.shape[1], 0.0)
        for e, c in self.terms.items():
            mono = Polynomial.constant(M.shape[1], c)
            for i, k in enumerate(e):
                if k:
                    mono = mono * rows[i] ** k
            out = out + mono
        return out

    def embed(self, nvars, positions):
        """Re-index into a larger variable space; variable i goes to ``positions[i]``."""
        terms = {}
        for e, c in self.terms.items():
            new = [0] * nvars
            for i, k in enumerate(e):
                new[positions[i]] += k
            terms[tuple(new)] = terms.get(tuple(new), 0.0) + c
        return Polynomial(nvars, terms)

    # -- evaluation ---------------------------------------------------------

    @cached_property
    def _compiled(self):
        if self.terms:
            exps = np.array(list(self.terms.keys()), dtype=float).reshape(-1, self.nvars)
            coefs = np.array(list(self.terms.values()))
        else:
            exps = np.zeros((0, self.nvars))
            coefs = np.zeros(0)
        dexps, dcoefs, dvar = [], [], []
        for e, c in self.terms.items():
            for i, k in enumerate(e):
                if k:
                    d = list(e)
                    d[i] -= 1
                    dexps.append(d)
                    dcoefs.append(c * k)
                    dvar.append(i)
        dexps = np.array(dexps, dtype=float).reshape(-1, self.nvars)
        return exps, coefs, dexps, np.array(dcoefs), np.array(dvar, dtype=int)

    def __call__(self, z):
        """Value at z; a stack of points (..., nvars) gives an array of values."""
        z = np.asarray(z, dtype=float)
        exps, coefs, *_ = self._compiled
        if z.ndim > 1:
            if not coefs.size:
                return np.zeros(z.shape[:-1])
            return np.prod(z[..., None, :] ** exps, axis=-1) @ coefs
        if not coefs.size:
            return 0.0
        return float(coefs @ np.prod(z ** exps, axis=1))

    def gradient(self, z):
        z = np.asarray(z, dtype=float)
        _, _, dexps, dcoefs, dvar = self._compiled
        if not dcoefs.size:
            return np.zeros(z.shape)
        if z.ndim > 1:
            vals = dcoefs * np.prod(z[..., None, :] ** dexps, axis=-1)
            onehot = np.eye(self.nvars)[dvar]
            return vals @ onehot
        vals = dcoefs * np.prod(z ** dexps, axis=1)
        return np.bincount(dvar, weights=vals, minlength=self.nvars)

    def __repr__(self):
        return f"Polynomial(nvars={self.nvars}, terms={len(self.terms)}, degree={self.degree})"
