# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

import pathlib

from mixdim_solve.assembly import Coefficients, assemble
from mixdim_solve.geometry import build_arrangement
from mixdim_solve.mesh import triangulate
from mixdim_solve.space import build_dofmap

_template_path = pathlib.Path(__file__).resolve().parent / "data_template"

CROSSING = [((0.0, 0.5), (1.0, 0.5)), ((0.5, 0.0), (0.5, 1.0))]
CHORD = [((0.0, 0.5), (1.0, 0.5))]
SLIT = [((0.3, 0.5), (0.7, 0.5))]
T_JUNCTION = [((0.0, 0.5), (1.0, 0.5)), ((0.5, 0.5), (0.5, 1.0))]
ENCLOSED_TRIANGLE = [
    ((0.2, 0.2), (0.8, 0.2)),
    ((0.8, 0.2), (0.5, 0.8)),
    ((0.5, 0.8), (0.2, 0.2)),
]


def build_problem(segments=CROSSING, h=0.25, a_iface=1.0, b_iface=1.0, f=1.0, g=0.0):
    """Arrangement, mesh, dof map, coefficients and system of a small instance."""
    domain = build_arrangement(segments=segments)
    mesh = triangulate(domain, h)
    dofmap = build_dofmap(mesh)
    coefficients = Coefficients.constant(mesh, 1.0, a_iface, b_iface)
    system = assemble(mesh, dofmap, coefficients, f_bulk=f, f_iface=f, g=g)
    return domain, mesh, dofmap, coefficients, system
