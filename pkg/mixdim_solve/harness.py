# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

"""Experiments: random networks, convergence and iteration-count studies."""

import math
import pathlib
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import yaml

from .analysis import (
    coercivity_walk,
    condition_number,
    corner_classification,
    graph_laplacian,
    interface_graph,
    mass_matrix,
    network_statistics,
    poincare_constant,
    predicted_rate,
    spectral_equivalence,
    write_report,
)
from .assembly import Coefficients, assemble, energy_norm, source_function
from .config import (
    _DEFAULT_MAX_LENGTH,
    _DEFAULT_MAXIT,
    _DEFAULT_RTOL,
    _DENSE_EIGEN_CAP,
    _DESK_CHORD_COUNT,
    _EXPERIMENT_PATH,
    _UNIT_SQUARE,
)
from .exception import ConfigException
from .geometry import Segment2D, build_arrangement, load_segments
from .log import experiment_log, logger
from .mesh import refine, triangulate, write_mesh
from .precond import build_preconditioner
from .solver import (
    energy_error_history,
    factor_bulk,
    monolithic_solve,
    pcg,
    recover_bulk,
    write_residual_history,
)
from .space import build_dofmap, prolongate
from .tools import (
    _ensure_directory,
    _parallel_map,
    _read_content,
    _write_content,
    _write_key_values,
    _write_table,
    parse_float_list,
    points_in_polygon,
)


@dataclass
class ExperimentConfig:
    geometry: str = "chords:%d" % _DESK_CHORD_COUNT
    seed: int = 0
    h: float = 1.0 / 16
    levels: int = 2
    extra: int = 1
    H: list = field(default_factory=lambda: [1.0 / 8, 1.0 / 16])
    A_bulk: float = 1.0
    A_iface: list = field(default_factory=lambda: ["const:1"])
    B: list = field(default_factory=lambda: [1.0])
    f_bulk: str = "exp"
    f_iface: str = "exp"
    g: float = 0.0
    solver: str = "direct"
    rtol: float = _DEFAULT_RTOL
    maxit: int = _DEFAULT_MAXIT
    angle_floor: float = None
    unpreconditioned: bool = False
    threads: int = 1
    out: str = "mixdim-output"

    def __post_init__(self):
        self.H = parse_float_list(self.H)
        self.B = parse_float_list(self.B)
        if isinstance(self.A_iface, str):
            self.A_iface = [x.strip() for x in self.A_iface.split("|") if x.strip()]
        self.validate()

    def validate(self):
        if self.levels < 1:
            raise ConfigException("levels must be at least 1, got %s" % self.levels)
        if self.extra < 1:
            raise ConfigException("extra must be at least 1, got %s" % self.extra)
        if not self.h or self.h <= 0:
            raise ConfigException("h must be positive, got %s" % self.h)
        if not self.H or min(self.H) <= 0:
            raise ConfigException("H values must be positive, got %s" % self.H)
        if not self.A_iface or not self.B:
            raise ConfigException("A_iface and B need at least one value")
        if min(self.B) < 0:
            raise ConfigException("B values must be non negative, got %s" % self.B)
        if self.solver not in ("direct", "pcg"):
            raise ConfigException("solver must be 'direct' or 'pcg', got %s" % self.solver)
        for spec in self.A_iface:
            parse_coefficient_spec(spec)
        parse_geometry_spec(self.geometry)

    def header_lines(self):
        return ["%s: %s" % (key, value) for key, value in asdict(self).items()]


def _preset_path(name):
    path = _EXPERIMENT_PATH / ("%s.yaml" % name)
    if not path.exists():
        available = sorted(x.stem for x in _EXPERIMENT_PATH.glob("*.yaml"))
        raise ConfigException(
            "Unknown preset '%s', available: %s" % (name, ", ".join(available))
        )
    return path


def load_config(file_path=None, preset=None, overrides=None):
    """Defaults, then a YAML file or preset, then the non-None ``overrides``."""
    values = {}
    for path in filter(None, [preset and _preset_path(preset), file_path]):
        content = yaml.safe_load(_read_content(path)) or {}
        if not isinstance(content, dict):
            raise ConfigException("%s: expected a mapping of settings" % path)
        values.update(content)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigException("Unknown configuration keys: %s" % ", ".join(unknown))
    return ExperimentConfig(**values)


def parse_coefficient_spec(spec):
    """``const:V`` -> ("const", V); ``uniform:A,B`` -> ("uniform", A, B)."""
    text = str(spec).strip()
    kind, _sep, rest = text.partition(":")
    try:
        if kind == "const":
            value = float(rest)
            if value > 0:
                return ("const", value)
        elif kind == "uniform":
            low, high = (float(x) for x in rest.split(","))
            if 0 < low <= high:
                return ("uniform", low, high)
    except ValueError:
        pass
    raise ConfigException(
        "Invalid interface coefficient '%s', expected const:V or uniform:A,B"
        " with positive values" % spec
    )


def parse_geometry_spec(spec):
    """``chords:N``, ``segments:N[:L]``, ``none`` or a segment file path."""
    text = str(spec).strip()
    kind, _sep, rest = text.partition(":")
    if text == "none":
        return ("none",)
    try:
        if kind == "chords":
            count = int(rest)
            if count >= 1:
                return ("chords", count)
        elif kind == "segments":
            parts = rest.split(":")
            count = int(parts[0])
            length = float(parts[1]) if len(parts) > 1 else _DEFAULT_MAX_LENGTH
            if count >= 1 and length > 0:
                return ("segments", count, length)
        else:
            return ("file", text)
    except ValueError:
        pass
    raise ConfigException("Invalid geometry '%s'" % spec)


def _chord_range(point, direction, polygon):
    """Parameters where point + t * direction crosses the convex polygon."""
    low, high = -math.inf, math.inf
    for a, b in zip(polygon, np.roll(polygon, -1, axis=0)):
        edge = b - a
        normal = np.array([-edge[1], edge[0]])
        rate = float(normal @ direction)
        offset = float(normal @ (point - a))
        if rate > 0:
            low = max(low, -offset / rate)
        elif rate < 0:
            high = min(high, -offset / rate)
    return low, high


def _random_points(rng, count, polygon):
    low, high = polygon.min(axis=0), polygon.max(axis=0)
    points = []
    while len(points) < count:
        candidate = low + (high - low) * rng.random(2)
        if points_in_polygon(candidate, polygon)[0]:
            points.append(candidate)
    return points


def gen_infinite_chords(count, seed, polygon=None):
    """Lines through a uniform random point at a uniform angle, cut to the domain."""
    if count < 1:
        raise ConfigException("Chord count must be positive, got %s" % count)
    polygon = np.asarray(polygon if polygon is not None else _UNIT_SQUARE, dtype=float)
    rng = np.random.default_rng(seed)
    segments = []
    for point in _random_points(rng, count, polygon):
        angle = math.pi * rng.random()
        direction = np.array([math.cos(angle), math.sin(angle)])
        low, high = _chord_range(point, direction, polygon)
        segments.append(
            Segment2D(tuple(point + low * direction), tuple(point + high * direction))
        )
    return segments


def gen_finite_segments(count, max_length=None, seed=0, polygon=None):
    """Segments of uniform center, angle and length in (0, max_length], cut to the domain."""
    max_length = _DEFAULT_MAX_LENGTH if max_length is None else max_length
    if count < 1:
        raise ConfigException("Segment count must be positive, got %s" % count)
    if max_length <= 0:
        raise ConfigException("Maximal length must be positive, got %s" % max_length)
    polygon = np.asarray(polygon if polygon is not None else _UNIT_SQUARE, dtype=float)
    rng = np.random.default_rng(seed)
    segments = []
    for center in _random_points(rng, count, polygon):
        angle = math.pi * rng.random()
        length = max_length * (1.0 - rng.random())
        direction = np.array([math.cos(angle), math.sin(angle)])
        low, high = _chord_range(center, direction, polygon)
        start = max(low, -0.5 * length)
        stop = min(high, 0.5 * length)
        segments.append(
            Segment2D(tuple(center + start * direction), tuple(center + stop * direction))
        )
    return segments


def build_segments(spec, seed):
    parsed = parse_geometry_spec(spec)
    if parsed[0] == "none":
        return []
    if parsed[0] == "chords":
        return gen_infinite_chords(parsed[1], seed)
    if parsed[0] == "segments":
        return gen_finite_segments(parsed[1], parsed[2], seed)
    if not pathlib.Path(parsed[1]).is_file():
        raise ConfigException("Unable to find segment file: %s" % parsed[1])
    return load_segments(parsed[1])


def build_coefficients(m, spec, a_bulk, b_iface, seed):
    parsed = parse_coefficient_spec(spec)
    if parsed[0] == "const":
        return Coefficients.constant(m, a_bulk, parsed[1], b_iface)
    return Coefficients.uniform_iface(m, parsed[1], parsed[2], seed, a_bulk, b_iface)


def mesh_statistics(m, angle_floor=None):
    angles = m.angles().min(axis=1) if m.n_triangles else np.zeros(0)
    stats = {
        "level": m.level,
        "vertices": m.n_vertices,
        "triangles": m.n_triangles,
        "interface_edges": len(m.interface_edges),
        "h": m.h,
        "min_angle": m.min_angle(),
        "regions": len(m.domain.bulk_regions),
        "triangles_per_region": " ".join(
            str(x) for x in np.bincount(m.triangle_regions).tolist()
        ),
    }
    if angle_floor is not None:
        stats["below_angle_floor"] = int(np.sum(angles < angle_floor))
    return stats


def _gnuplot(file_path, csv_name, title, xlabel, ylabel, plots, logscale="xy"):
    lines = [
        "# gnuplot script for %s" % csv_name,
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set title '%s'" % title,
        "set xlabel '%s'" % xlabel,
        "set ylabel '%s'" % ylabel,
    ]
    if logscale:
        lines.append("set logscale %s" % logscale)
    lines.append("plot " + ", \\\n     ".join(plots))
    _write_content(file_path, "\n".join(lines) + "\n")


@dataclass
class SolveResult:
    system: object
    dofmap: object
    values: np.ndarray
    iterations: int = 0
    pcg: object = None


@dataclass
class ConvergenceResult:
    rows: list
    slope: float
    file_path: str = None


class Experiment:
    """One configured experiment; the ``run_*`` methods write into ``out``."""

    def __init__(self, config):
        self.config = config
        self._domain = None
        self._base_mesh = None
        self._directory = None

    @property
    def directory(self):
        if self._directory is None:
            self._directory = _ensure_directory(self.config.out)
        return self._directory

    @property
    def domain(self):
        if self._domain is None:
            segments = build_segments(self.config.geometry, self.config.seed)
            self._domain = build_arrangement(segments=segments)
        return self._domain

    @property
    def base_mesh(self):
        if self._base_mesh is None:
            self._base_mesh = triangulate(
                self.domain, self.config.h, angle_floor=self.config.angle_floor
            )
        return self._base_mesh

    def hierarchy(self, levels):
        meshes = [self.base_mesh]
        while len(meshes) < levels:
            meshes.append(refine(meshes[-1]))
        return meshes

    def coefficients(self, meshes, spec=None, b_iface=None):
        """Coefficients drawn on the base mesh, inherited by every refinement."""
        cfg = self.config
        spec = cfg.A_iface[0] if spec is None else spec
        b_iface = cfg.B[0] if b_iface is None else b_iface
        result = [build_coefficients(meshes[0], spec, cfg.A_bulk, b_iface, cfg.seed)]
        for mesh in meshes[1:]:
            result.append(result[-1].refine(mesh))
        return result

    def _sources(self):
        cfg = self.config
        return source_function(cfg.f_bulk), source_function(cfg.f_iface), source_function(cfg.g)

    def _header(self, m=None):
        lines = self.config.header_lines()
        if m is not None:
            lines += [
                "mesh %s: %s" % (key, value)
                for key, value in mesh_statistics(m, self.config.angle_floor).items()
            ]
        return lines

    def solve(self, m, c, H=None):
        """Direct solve, or Schur complement PCG when ``H`` is given."""
        cfg = self.config
        f_bulk, f_iface, g = self._sources()
        d = build_dofmap(m)
        sys = assemble(m, d, c, f_bulk=f_bulk, f_iface=f_iface, g=g)
        if H is None or sys.n1 == 0:
            U0, U1 = monolithic_solve(sys)
            return SolveResult(sys, d, sys.expand(U0, U1))
        op = factor_bulk(sys, threads=cfg.threads)
        preconditioner = build_preconditioner(op, d, m, H, threads=cfg.threads)
        result = pcg(op, preconditioner, rtol=cfg.rtol, maxit=cfg.maxit)
        U0 = recover_bulk(op, result.x)
        return SolveResult(sys, d, sys.expand(U0, result.x), result.iterations, result)

    def run_mesh(self):
        m = self.base_mesh
        write_mesh(m, self.directory / "mesh.txt")
        stats = mesh_statistics(m, self.config.angle_floor)
        _write_key_values(self.directory / "mesh_stats.txt", stats.items(), self._header())
        return stats

    def run_solve(self):
        cfg = self.config
        m = self.base_mesh
        c = self.coefficients([m])[0]
        H = None if cfg.solver == "direct" else cfg.H[0]
        result = self.solve(m, c, H)
        d = result.dofmap
        bulk, iface = d.split(result.values)
        rows = [
            {"kind": "bulk", "region": r, "x": x, "y": y, "value": v}
            for r, (x, y), v in zip(
                d.bulk_region.tolist(), m.vertices[d.bulk_vertex].tolist(), bulk.tolist()
            )
        ]
        rows += [
            {"kind": "iface", "region": -1, "x": x, "y": y, "value": v}
            for (x, y), v in zip(m.vertices[d.iface_vertex].tolist(), iface.tolist())
        ]
        _write_table(
            self.directory / "solution.csv",
            ["kind", "region", "x", "y", "value"],
            rows,
            self._header(m),
        )
        _gnuplot(
            self.directory / "solution.gp",
            "solution.csv",
            "solution",
            "x",
            "y",
            [
                "'solution.csv' using 3:4:5 with points palette pointtype 7"
                " pointsize 0.5 title 'u'"
            ],
            logscale=None,
        )
        if result.pcg is not None:
            write_residual_history(result.pcg, self.directory / "residuals.csv")
            logger.info(
                "Solved with PCG in %d iterations, kappa %.4g"
                % (result.iterations, result.pcg.kappa)
            )
        return result

    def run_convergence(self):
        cfg = self.config
        reference_level = cfg.levels - 1 + cfg.extra
        meshes = self.hierarchy(reference_level + 1)
        coefficients = self.coefficients(meshes)
        H = None if cfg.solver == "direct" else cfg.H[0]

        solutions = []
        for level in list(range(cfg.levels)) + [reference_level]:
            solutions.append(self.solve(meshes[level], coefficients[level], H))
            logger.info("Level %d solved, h=%.4g" % (level, meshes[level].h))
        reference = solutions[-1]
        dofmaps = {}
        for level, result in zip(list(range(cfg.levels)) + [reference_level], solutions):
            dofmaps[level] = result.dofmap
        for level in range(reference_level + 1):
            if level not in dofmaps:
                dofmaps[level] = build_dofmap(meshes[level])

        rows = []
        for level in range(cfg.levels):
            bulk, iface = dofmaps[level].split(solutions[level].values)
            for k in range(level, reference_level):
                bulk, iface = prolongate(dofmaps[k], dofmaps[k + 1], meshes[k + 1], bulk, iface)
            error = reference.values - np.concatenate([bulk, iface])
            row = {
                "level": level,
                "h": meshes[level].h,
                "dofs": solutions[level].system.n0 + solutions[level].system.n1,
                "energy_error": energy_norm(reference.system, error),
            }
            for name, matrix in reference.system.terms.items():
                row["%s_error" % name] = math.sqrt(max(float(error @ (matrix @ error)), 0.0))
            rows.append(row)

        errors = np.array([row["energy_error"] for row in rows])
        if len(rows) >= 2 and np.all(errors > 0):
            hs = np.array([row["h"] for row in rows])
            slope = float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
        else:
            slope = math.nan
        logger.info("Convergence slope: %.4g" % slope)

        file_path = self.directory / "convergence.csv"
        _write_table(
            file_path,
            ["level", "h", "dofs", "energy_error", "bulk_error", "iface_error", "coupling_error"],
            rows,
            self._header(meshes[0])
            + ["reference level: %d" % reference_level, "slope: %r" % slope],
        )
        _gnuplot(
            self.directory / "convergence.gp",
            "convergence.csv",
            "energy error, slope %.3f" % slope,
            "h",
            "error",
            [
                "'convergence.csv' using 2:%d with linespoints" % column
                for column in (4, 5, 6, 7)
            ],
        )
        return ConvergenceResult(rows, slope, str(file_path))

    def _iteration_cells(self, m, c, level, spec, b_iface):
        cfg = self.config
        f_bulk, f_iface, g = self._sources()
        d = build_dofmap(m)
        if d.n1 == 0:
            raise ConfigException("The geometry has no free interface dof")
        sys = assemble(m, d, c, f_bulk=f_bulk, f_iface=f_iface, g=g)
        op = factor_bulk(sys, threads=1)
        extra = {"schur_cg_iterations": "", "full_cg_iterations": ""}
        if cfg.unpreconditioned:
            extra["schur_cg_iterations"] = pcg(op, None, rtol=cfg.rtol, maxit=cfg.maxit).iterations
            extra["full_cg_iterations"] = pcg(
                sys.free_matrix(),
                None,
                b=np.concatenate([sys.b0, sys.b1]),
                rtol=cfg.rtol,
                maxit=cfg.maxit,
            ).iterations
        exact = monolithic_solve(sys)[1]
        rows = []
        for H in cfg.H:
            preconditioner = build_preconditioner(op, d, m, H)
            result, history = energy_error_history(
                op, preconditioner, exact, rtol=cfg.rtol, maxit=cfg.maxit
            )
            logger.info(
                "h=%.4g A_iface=%s B=%g H=%g: %d iterations"
                % (m.h, spec, b_iface, H, result.iterations)
            )
            row = {
                "level": level,
                "h": m.h,
                "n1": sys.n1,
                "A_iface": spec,
                "B": b_iface,
                "H": H,
                "iterations": result.iterations,
                "kappa": result.kappa,
                "converged": result.converged,
                "error_bound_holds": history.holds,
            }
            row.update(extra)
            rows.append(row)
        return rows

    def run_iterations(self):
        cfg = self.config
        meshes = self.hierarchy(cfg.levels)
        cells = []
        for spec in cfg.A_iface:
            for b_iface in cfg.B:
                coefficients = self.coefficients(meshes, spec, b_iface)
                for level, (m, c) in enumerate(zip(meshes, coefficients)):
                    cells.append((m, c, level, spec, b_iface))
        rows = [
            row
            for block in _parallel_map(
                lambda cell: self._iteration_cells(*cell), cells, cfg.threads
            )
            for row in block
        ]
        file_path = self.directory / "iterations.csv"
        _write_table(
            file_path,
            [
                "level", "h", "n1", "A_iface", "B", "H", "iterations", "kappa",
                "converged", "error_bound_holds", "schur_cg_iterations",
                "full_cg_iterations",
            ],
            rows,
            self._header(meshes[0]),
        )
        _gnuplot(
            self.directory / "iterations.gp",
            "iterations.csv",
            "PCG iterations",
            "B",
            "iterations",
            ["'iterations.csv' using 5:7 with points"],
            logscale="x",
        )
        return rows

    def run_diagnose(self):
        cfg = self.config
        m = self.base_mesh
        c = self.coefficients([m])[0]
        d = build_dofmap(m)
        f_bulk, f_iface, g = self._sources()
        sys = assemble(m, d, c, f_bulk=f_bulk, f_iface=f_iface, g=g)
        walk = coercivity_walk(self.domain)
        corners = corner_classification(self.domain)
        items = [
            ("walk_success", walk.success),
            ("walk_length_N", walk.N),
            ("unreachable_segments", list(walk.unreachable_segments)),
            ("corners", len(corners)),
            ("predicted_rate", predicted_rate(corners)),
        ]
        items += [
            (
                "corner_%d" % k,
                "region=%d omega=%r pieces=%s kind=%s tip=%s lambdas=%s"
                % (x.region, x.omega, x.pieces, x.kind, x.tip, x.exponents.lambdas),
            )
            for k, x in enumerate(corners)
        ]
        items += [("network_%s" % k, v) for k, v in network_statistics(m, cfg.H[0]).items()]
        if sys.n0 + sys.n1 <= _DENSE_EIGEN_CAP:
            items.append(("condition_number", condition_number(sys)))
        if sys.n1:
            graph = interface_graph(m, d)
            L, M = graph_laplacian(graph), mass_matrix(graph)
            poincare = poincare_constant(L, M)
            op = factor_bulk(sys, threads=cfg.threads)
            items.append(("poincare_D", poincare.D))
            if poincare.finite:
                bounds = spectral_equivalence(op, L, D=poincare.D)
                items += [
                    ("c1", bounds.c1),
                    ("c2", bounds.c2),
                    ("c2_bound", bounds.bound),
                    ("bound_holds", bounds.holds),
                ]
            preconditioner = build_preconditioner(op, d, m, cfg.H[0], threads=cfg.threads)
            result = pcg(op, preconditioner, rtol=cfg.rtol, maxit=cfg.maxit)
            items += [("pcg_iterations", result.iterations), ("pcg_kappa", result.kappa)]
        write_report(self.directory / "diagnostics.txt", items, self._header(m))
        return dict(items)

    def run(self, verb):
        method = getattr(self, "run_%s" % verb, None)
        if method is None:
            raise ConfigException("Unknown verb '%s'" % verb)
        with experiment_log(self.directory):
            logger.info("Running '%s' into %s" % (verb, self.directory))
            return method()


def run_convergence(cfg):
    return Experiment(cfg).run_convergence()


def run_iteration_study(cfg):
    return Experiment(cfg).run_iterations()
