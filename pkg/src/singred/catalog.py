"""Built-in examples: algebras, subgroup pairs, connection charts and gauge charts.

Every stored expectation records how it was obtained: ``"trivial"`` for
values forced by definitions, ``"derived"`` with the name of the oracle that
recomputes it independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .connection import (
    ConnectionChart,
    CurvatureTable,
    abelian_plane_chart,
    hopf_chart,
    so3_poly_chart,
)
from .errors import InputError
from .gauge import GaugeChart
from .lie import get_algebra, so3, so3_u1, su2, u1, zero_algebra
from .strata import IsotropyClass, Subgroup


def expect(value, provenance, oracle=""):
    return {"value": value, "provenance": provenance, "oracle": oracle}


# -- subgroups -----------------------------------------------------------------


def so3_so2():
    return Subgroup.from_indices(so3(), [2], name="so3_so2")


def su2_u1():
    return Subgroup.from_indices(su2(), [2], name="su2_u1")


def so3_z2():
    a = so3()
    return Subgroup(a, np.zeros((0, 3)), [a.exponential([0.0, 0.0, np.pi])], "so3_z2")


def so3_e():
    return Subgroup.trivial(so3(), "so3_e")


def u1_e():
    return Subgroup.trivial(u1(), "u1_e")


def so3_u1_e():
    return Subgroup.trivial(so3_u1(), "so3_u1_e")


SUBGROUPS: dict[str, Callable] = {
    "so3_so2": so3_so2,
    "su2_u1": su2_u1,
    "so3_z2": so3_z2,
    "so3_e": so3_e,
    "u1_e": u1_e,
    "so3_u1_e": so3_u1_e,
}

# -- connection charts -----------------------------------------------------------


def negative_control_curvature():
    """B_12 = x3, all else zero: dB != 0, so Bianchi (and Jacobi) must fail."""

    def evaluate(x):
        B = np.zeros((1, 3, 3))
        B[0, 0, 1] = x[2]
        B[0, 1, 0] = -x[2]
        return B

    return CurvatureTable(evaluate, "override")


CONNECTIONS: dict[str, Callable] = {
    "flat": lambda: ConnectionChart.flat(so3(), 2, name="flat"),
    "abelian_plane": abelian_plane_chart,
    "hopf": hopf_chart,
    "so3_poly": so3_poly_chart,
}

# -- gauge charts ----------------------------------------------------------------

PRINCIPAL = IsotropyClass(0, 1)


def _gauge_flat():
    return GaugeChart(so3_e(), ConnectionChart.flat(so3(), 2, name="flat"), np.eye(3),
                      stratum=PRINCIPAL, name="flat")


def _gauge_abelian():
    return GaugeChart(u1_e(), abelian_plane_chart(), np.eye(1), stratum=PRINCIPAL,
                      name="abelian_plane")


def _gauge_free_hopf():
    # H = {e}, g = so(3) + u(1); the connection lives in the central u(1) slot
    return GaugeChart(so3_u1_e(), hopf_chart(so3_u1(), slot=3), np.eye(4),
                      stratum=PRINCIPAL, name="free_hopf")


def _gauge_so3_so2():
    conn = ConnectionChart.flat(zero_algebra(), 2, name="so3_so2_base")
    return GaugeChart(so3_so2(), conn, stratum=PRINCIPAL, name="so3_so2")


def _gauge_su2_u1():
    conn = ConnectionChart.flat(zero_algebra(), 2, name="su2_u1_base")
    return GaugeChart(su2_u1(), conn, stratum=PRINCIPAL, name="su2_u1")


def _gauge_so3_z2():
    conn = ConnectionChart.flat(u1(), 2, name="so3_z2_base")
    return GaugeChart(so3_z2(), conn, stratum=PRINCIPAL, name="so3_z2")


def _gauge_t_star_s2():
    return GaugeChart(so3_so2(), None, stratum=PRINCIPAL, name="homogeneous_t_star_s2")


def _gauge_t_star_so3():
    return GaugeChart(so3_e(), None, stratum=PRINCIPAL, name="homogeneous_t_star_so3")


def _gauge_negative():
    conn = ConnectionChart.flat(u1(), 3, name="negative_control_base")
    return GaugeChart(u1_e(), conn, np.eye(1), negative_control_curvature(), PRINCIPAL,
                      "negative_control")


def _gauge_so3_poly():
    return GaugeChart(so3_e(), so3_poly_chart(), np.eye(3), stratum=PRINCIPAL,
                      name="so3_poly_noncentral")


GAUGE_CHARTS: dict[str, Callable] = {
    "flat": _gauge_flat,
    "abelian_plane": _gauge_abelian,
    "free_hopf": _gauge_free_hopf,
    "so3_so2": _gauge_so3_so2,
    "su2_u1": _gauge_su2_u1,
    "so3_z2": _gauge_so3_z2,
    "homogeneous_t_star_s2": _gauge_t_star_s2,
    "homogeneous_t_star_so3": _gauge_t_star_so3,
    "negative_control": _gauge_negative,
    "so3_poly_noncentral": _gauge_so3_poly,
}

# charts whose local table is expected to satisfy Jacobi
JACOBI_VALID = ("flat", "abelian_plane", "free_hopf", "so3_so2", "su2_u1", "so3_z2",
                "homogeneous_t_star_s2", "homogeneous_t_star_so3")


@dataclass
class CatalogEntry:
    name: str
    algebra: str
    description: str
    subgroup: str | None = None
    connection: str | None = None
    gauge: str | None = None
    expected: dict = field(default_factory=dict)

    def to_record(self):
        return {
            "name": self.name,
            "algebra": self.algebra,
            "subgroup": self.subgroup,
            "connection": self.connection,
            "gauge": self.gauge,
            "description": self.description,
            "expected": self.expected,
        }


def _strata_expect(classes):
    return expect([list(c) for c in classes], "derived",
                   "isotropy_at on sphere samples and fixed-subspace probes")


ENTRIES = [
    CatalogEntry(
        "so3_so2", "so3", "SO(3) with the rotation subgroup about e3",
        subgroup="so3_so2", gauge="so3_so2",
        expected={
            "strata": _strata_expect([(0, 1, 2), (1, 1, 0)]),
            "normalizer_quotient_dim": expect(0, "derived", "solve [xi, e3] in span(e3)"),
            "leaf_dim_at_e1": expect(0, "derived", "rank of Hamiltonian vectors modulo h.mu"),
        }),
    CatalogEntry(
        "su2_u1", "su2", "SU(2) with the diagonal U(1)",
        subgroup="su2_u1", gauge="su2_u1",
        expected={
            "strata": _strata_expect([(0, 1, 2), (1, 1, 0)]),
            "normalizer_quotient_dim": expect(0, "derived", "solve [xi, e3] in span(e3)"),
        }),
    CatalogEntry(
        "so3_z2", "so3", "SO(3) with Z2 generated by the rotation by pi about e3",
        subgroup="so3_z2", gauge="so3_z2",
        expected={
            "strata": _strata_expect([(0, 1, 3), (0, 2, 1)]),
            "normalizer_quotient_dim": expect(1, "derived", "eigenspace of Ad_g for eigenvalue 1"),
        }),
    CatalogEntry(
        "so3_e", "so3", "SO(3) with trivial H: coadjoint spheres",
        subgroup="so3_e",
        expected={
            "strata": _strata_expect([(0, 1, 3)]),
            "leaf_dim_at_e1": expect(2, "derived", "rank of ad*_xi mu over basis xi"),
        }),
    CatalogEntry(
        "free_hopf", "so3_u1", "H = {e}; Hopf connection on the (theta, phi) chart of S^2",
        subgroup="so3_u1_e", connection="hopf", gauge="free_hopf",
        expected={
            "x1_p1": expect(1.0, "trivial", "canonical block of the local table"),
            "curvature_at_theta_1": expect(float(0.5 * np.sin(1.0)), "derived",
                                           "closed form sin(theta)/2"),
        }),
    CatalogEntry(
        "homogeneous_t_star_s2", "so3", "Transitive case: T*(SO(3)/SO(2)) reduced, n = 0",
        subgroup="so3_so2", gauge="homogeneous_t_star_s2",
        expected={"fiber_block_zero": expect(True, "derived", "mu_3 = 0 on h°")}),
    CatalogEntry(
        "homogeneous_t_star_so3", "so3", "Transitive case with H = {e}: the Lie-Poisson space so(3)*",
        subgroup="so3_e", gauge="homogeneous_t_star_so3",
        expected={"pi_12_at_e3": expect(-1.0, "derived", "structure-constant contraction")}),
    CatalogEntry(
        "abelian_plane", "u1", "u(1) connection on the plane with constant curvature 1",
        subgroup="u1_e", connection="abelian_plane", gauge="abelian_plane",
        expected={
            "p1_p2_at_mu_0.7": expect(0.7, "derived", "mu B_12 with B_12 = 1"),
            "unit_square_log": expect(-1.0, "derived", "abelian Stokes: -area"),
        }),
    CatalogEntry(
        "flat", "so3", "Flat chart: A = 0",
        subgroup="so3_e", connection="flat", gauge="flat",
        expected={"curvature": expect(0.0, "trivial", "A = 0")}),
    CatalogEntry(
        "negative_control", "u1", "Curvature B_12 = x3 violating Bianchi",
        subgroup="u1_e", gauge="negative_control",
        expected={"jacobi_fails": expect(True, "derived", "dB = dx3 ^ dx1 ^ dx2 is nonzero")}),
    CatalogEntry(
        "so3_poly", "so3", "Nonabelian so(3) connection with polynomial coefficients",
        subgroup="so3_e", connection="so3_poly", gauge="so3_poly_noncentral",
        expected={"bianchi": expect(0.0, "derived", "covariant Bianchi by finite differences")}),
]


def entries():
    return list(ENTRIES)


def get_entry(name):
    for e in ENTRIES:
        if e.name == name:
            return e
    raise InputError(f"unknown catalog entry {name!r}")


def get_subgroup(name):
    try:
        return SUBGROUPS[name]()
    except KeyError:
        raise InputError(f"unknown subgroup {name!r}; known: {sorted(SUBGROUPS)}") from None


def get_connection(name):
    try:
        return CONNECTIONS[name]()
    except KeyError:
        raise InputError(f"unknown connection chart {name!r}; known: {sorted(CONNECTIONS)}") from None


def get_gauge_chart(name):
    try:
        return GAUGE_CHARTS[name]()
    except KeyError:
        raise InputError(f"unknown gauge chart {name!r}; known: {sorted(GAUGE_CHARTS)}") from None


__all__ = ["get_algebra", "get_subgroup", "get_connection", "get_gauge_chart", "entries",
           "get_entry", "JACOBI_VALID"]
