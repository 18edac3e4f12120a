"""The Blaschke model of the Siegel quadratic: Julia sets, puzzle pieces, density."""

from .blaschke import (
    BlaschkeMap,
    DropRegion,
    drop,
    fixed_point_beta,
    pullback_polyline,
    solve_tau,
    verify_rotation,
)
from .density import DensityReport, critical_hits, density_probe, empty_fraction
from .green import equipotential, green, trace_ray, winding_number
from .puzzle import (
    BasePiece,
    PuzzlePiece,
    PuzzleSequence,
    backward_returns,
    base_piece,
    drop_in_piece,
    inscribed_disc_polygon,
    puzzle_pieces,
)
from .render import GridSpec, JuliaRaster, render_blaschke, render_quadratic, symmetry_audit

__all__ = [
    "BasePiece", "BlaschkeMap", "DensityReport", "DropRegion", "GridSpec", "JuliaRaster",
    "PuzzlePiece", "PuzzleSequence", "backward_returns", "base_piece", "critical_hits",
    "density_probe", "drop", "drop_in_piece", "empty_fraction", "equipotential",
    "fixed_point_beta", "green", "inscribed_disc_polygon", "pullback_polyline",
    "puzzle_pieces", "render_blaschke", "render_quadratic", "solve_tau",
    "symmetry_audit", "trace_ray", "verify_rotation", "winding_number",
]
