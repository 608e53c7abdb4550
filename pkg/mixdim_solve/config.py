# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

import pathlib

# Geometry
# * snap tolerance, relative to the domain diameter
# * default domain: the unit square, counter-clockwise
_DEFAULT_SNAP_FACTOR = 1e-9
_UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]

# Mesh
# * minimal angle (degrees) the mesher refines towards
# * fill points closer than this fraction of h to a constraint are dropped
# * maximal number of circumcenter insertion rounds
_DEFAULT_ANGLE_FLOOR = 20.0
_FILL_CLEARANCE = 0.5
_MAX_REFINEMENT_ROUNDS = 12

# Assembly: quadrature rules, recorded in every output header
_BULK_QUADRATURE = "3-point mid-edge"
_IFACE_QUADRATURE = "2-point Gauss"
_SOURCE_DECAY = 10.0
_SOURCE_CENTER = (0.5, 0.5)

# Solver
_DENSE_SCHUR_CAP = 20000
_DEFAULT_RTOL = 1e-8
_DEFAULT_MAXIT = 20000

# Analysis
_DENSE_EIGEN_CAP = 2000
_POINCARE_TOL = 1e-6
_POINCARE_MAXIT = 5000

# Harness
_AVAILABLE_VERBS = ["mesh", "solve", "convergence", "iterations", "diagnose"]
_EXPERIMENT_PATH = pathlib.Path(__file__).resolve().parent / "experiments"
_DESK_CHORD_COUNT = 50
_DEFAULT_MAX_LENGTH = 0.2
