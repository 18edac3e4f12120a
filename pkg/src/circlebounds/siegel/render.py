"""Escape-time rasters for the Blaschke model and the Siegel quadratic.

Labels (one byte each):

    0  basin-of-infinity
    1  basin-of-0            (Blaschke model only)
    2  J-candidate           (J_theta-candidate for the Blaschke model)
    3  disc                  (unit disc / Siegel disc)
    4  drop                  (preimage of the disc)

For the Blaschke model the dynamical class (0, 1, or "neither") is decided
first; pixels with no verdict inside the budget are then marked disc (if
``|z| < 1``), drop (if the orbit entered the disc) or J_theta-candidate.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blaschke import BlaschkeMap

BASIN_INF, BASIN_ZERO, J_CAND, DISC, DROP = 0, 1, 2, 3, 4
LEGEND = {
    BASIN_INF: "basin-of-infinity",
    BASIN_ZERO: "basin-of-0",
    J_CAND: "J-candidate",
    DISC: "disc",
    DROP: "drop",
}
R_ESC = 100.0
R_IN = 1e-3
BUDGET = 2000


@dataclass(frozen=True)
class GridSpec:
    center: complex = 0.5 + 0j
    half: float = 3.0  # half-width of the square window
    res: int = 1024

    @property
    def step(self) -> float:
        return 2.0 * self.half / self.res

    def points(self) -> np.ndarray:
        c = (np.arange(self.res) + 0.5) * self.step - self.half
        return (self.center.real + c)[None, :] + 1j * (self.center.imag + c)[:, None]

    def index(self, z):
        z = np.asarray(z)
        col = np.floor((z.real - self.center.real + self.half) / self.step)
        row = np.floor((z.imag - self.center.imag + self.half) / self.step)
        ok = np.isfinite(col) & np.isfinite(row) & (col >= 0) & (col < self.res) & (row >= 0) & (row < self.res)
        return np.where(ok, row, 0).astype(int), np.where(ok, col, 0).astype(int), ok

    def doubled(self) -> "GridSpec":
        return GridSpec(self.center, self.half, 2 * self.res)

    def to_json(self) -> dict:
        return {"center": [self.center.real, self.center.imag], "half": self.half, "res": self.res}


@dataclass
class JuliaRaster:
    kind: str  # "blaschke" or "quadratic"
    param: float  # tau, or theta for the quadratic
    grid: GridSpec
    budget: int
    r_esc: float
    r_in: float
    label: np.ndarray = field(repr=False)
    dynamic: np.ndarray = field(repr=False)  # 0 inf, 1 zero, 2 undecided
    region: np.ndarray = field(repr=False)   # 0 none, 1 disc, 2 drop

    def j_theta(self) -> np.ndarray:
        return self.label == J_CAND

    def counts(self) -> dict[str, int]:
        return {LEGEND[k]: int(np.sum(self.label == k)) for k in LEGEND}

    def sidecar(self, extra: dict | None = None) -> dict:
        d = {
            "kind": self.kind,
            "param": self.param,
            "grid": self.grid.to_json(),
            "budget": self.budget,
            "r_esc": self.r_esc,
            "r_in": self.r_in,
            "legend": {str(k): v for k, v in LEGEND.items()},
            "channels": ["label", "dynamic", "region"],
            "counts": self.counts(),
        }
        if extra:
            d.update(extra)
        return d

    def write(self, stem: str | Path, extra: dict | None = None) -> tuple[Path, Path, Path]:
        """``stem.pgm`` (labels), ``stem.ppm`` (label/dynamic/region) and ``stem.json``."""
        stem = Path(stem)
        pgm, ppm, js = stem.with_suffix(".pgm"), stem.with_suffix(".ppm"), stem.with_suffix(".json")
        h, w = self.label.shape
        # image rows run top to bottom: flip so that Im z increases upwards
        lab = self.label[::-1].astype(np.uint8)
        pgm.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + lab.tobytes())
        rgb = np.stack([lab, self.dynamic[::-1].astype(np.uint8), self.region[::-1].astype(np.uint8)], axis=-1)
        ppm.write_bytes(b"P6\n%d %d\n255\n" % (w, h) + rgb.tobytes())
        js.write_text(json.dumps(self.sidecar(extra), indent=2, sort_keys=True) + "\n")
        return pgm, ppm, js


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)[::-1]


def classify_blaschke(
    f: BlaschkeMap,
    z: np.ndarray,
    budget: int = BUDGET,
    r_esc: float = R_ESC,
    r_in: float = R_IN,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(label, dynamic, region) for an array of starting points."""
    z0 = np.asarray(z, dtype=complex)
    shape = z0.shape
    z0 = z0.ravel()
    n = z0.size
    dynamic = np.full(n, 2, dtype=np.uint8)
    entered = np.zeros(n, dtype=bool)
    idx = np.arange(n)
    w = z0.copy()
    a = np.abs(w)
    done = a > r_esc
    dynamic[done] = BASIN_INF
    small = a < r_in
    dynamic[small] = BASIN_ZERO
    keep = ~(done | small)
    idx, w = idx[keep], w[keep]
    lam = f.lam
    for _ in range(budget):
        if idx.size == 0:
            break
        w = lam * w * w * (w - 3.0) / (1.0 - 3.0 * w)
        a = np.abs(w)
        entered[idx[a < 1.0]] = True
        esc = a > r_esc
        zero = a < r_in
        dynamic[idx[esc]] = BASIN_INF
        dynamic[idx[zero]] = BASIN_ZERO
        keep = ~(esc | zero)
        if not keep.all():
            idx, w = idx[keep], w[keep]
    inside = np.abs(z0) < 1.0
    region = np.zeros(n, dtype=np.uint8)
    region[inside] = 1
    region[~inside & entered] = 2
    label = dynamic.copy()
    und = dynamic == 2
    label[und & inside] = DISC
    label[und & ~inside & entered] = DROP
    return label.reshape(shape), dynamic.reshape(shape), region.reshape(shape)


def render_blaschke(f: BlaschkeMap, grid: GridSpec = GridSpec(), budget: int = BUDGET,
                    r_esc: float = R_ESC, r_in: float = R_IN, tile: int = 256) -> JuliaRaster:
    """Raster of the Blaschke model; rows are processed in independent tiles."""
    label = np.empty((grid.res, grid.res), dtype=np.uint8)
    dyn = np.empty_like(label)
    reg = np.empty_like(label)
    pts = grid.points()
    for r0 in range(0, grid.res, tile):
        sl = slice(r0, min(r0 + tile, grid.res))
        label[sl], dyn[sl], reg[sl] = classify_blaschke(f, pts[sl], budget, r_esc, r_in)
    return JuliaRaster("blaschke", f.tau, grid, budget, r_esc, r_in, label, dyn, reg)


def classify_quadratic(
    theta: float,
    z: np.ndarray,
    budget: int = BUDGET,
    r_esc: float = R_ESC,
    trap_diameter: float = 2.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``P(z) = e^{2 pi i theta} z + z^2``: escape, or trapped in the Siegel disc.

    A non-escaping orbit whose diameter over the last quarter of the budget
    stays below ``trap_diameter`` is trapped; it is in the disc itself when
    its first-quarter diameter is the same (an invariant curve), else in a
    preimage of the disc.
    """
    lam = cmath.exp(2j * math.pi * theta)
    z0 = np.asarray(z, dtype=complex)
    shape = z0.shape
    z0 = z0.ravel()
    n = z0.size
    esc = np.zeros(n, dtype=bool)
    w = z0.copy()
    q = max(budget // 4, 1)
    # track bounding boxes of the first and last quarters
    box_first = np.array([np.inf, -np.inf, np.inf, -np.inf])[:, None] * np.ones(n)
    box_last = box_first.copy()
    for k in range(budget):
        with np.errstate(over="ignore", invalid="ignore"):
            w = np.where(esc, w, lam * w + w * w)
        esc |= ~(np.abs(w) <= r_esc)
        if k < q:
            box = box_first
        elif k >= budget - q:
            box = box_last
        else:
            continue
        live = ~esc
        box[0, live] = np.minimum(box[0, live], w.real[live])
        box[1, live] = np.maximum(box[1, live], w.real[live])
        box[2, live] = np.minimum(box[2, live], w.imag[live])
        box[3, live] = np.maximum(box[3, live], w.imag[live])

    def diam(b):
        return np.hypot(b[1] - b[0], b[3] - b[2])

    d_last, d_first = diam(box_last), diam(box_first)
    dynamic = np.where(esc, BASIN_INF, 2).astype(np.uint8)
    trapped = ~esc & (d_last < trap_diameter)
    in_disc = trapped & (np.abs(d_first - d_last) <= 0.1 * d_last + 1e-12)
    region = np.zeros(n, dtype=np.uint8)
    region[in_disc] = 1
    region[trapped & ~in_disc] = 2
    label = dynamic.copy()
    label[in_disc] = DISC
    label[trapped & ~in_disc] = DROP
    return label.reshape(shape), dynamic.reshape(shape), region.reshape(shape)


def render_quadratic(theta: float, grid: GridSpec = GridSpec(0j, 2.0, 512), budget: int = BUDGET,
                     r_esc: float = R_ESC) -> JuliaRaster:
    pts = grid.points()
    label, dyn, reg = classify_quadratic(theta, pts, budget, r_esc)
    # J-candidates: trapped-or-undecided pixels with an escaping neighbour
    bounded = label != BASIN_INF
    esc = ~bounded
    nb = np.zeros_like(esc)
    nb[1:] |= esc[:-1]
    nb[:-1] |= esc[1:]
    nb[:, 1:] |= esc[:, :-1]
    nb[:, :-1] |= esc[:, 1:]
    edge = bounded & nb
    label = label.copy()
    label[edge] = J_CAND
    return JuliaRaster("quadratic", theta, grid, budget, r_esc, 0.0, label, dyn, reg)


@dataclass
class SymmetryAudit:
    compared: int
    disagreements: int

    @property
    def fraction(self) -> float:
        return self.disagreements / self.compared if self.compared else math.nan


def symmetry_audit(r: JuliaRaster, f: BlaschkeMap) -> SymmetryAudit:
    """Undecided (J-candidate) class at each pixel centre against its exact mirror.

    The mirror ``1/conj(z)`` is classified directly: comparing against the
    pixel that happens to contain it mixes in quantisation error, which the
    reflection magnifies by ``1/|z|^2``.
    """
    if r.kind != "blaschke":
        raise ValueError("the reflection symmetry belongs to the Blaschke model")
    pts = r.grid.points()
    with np.errstate(divide="ignore", invalid="ignore"):
        refl = 1.0 / np.conj(pts)
    ok = np.isfinite(refl)
    _, dyn, _ = classify_blaschke(f, np.where(ok, refl, 0.0), r.budget, r.r_esc, r.r_in)
    # the mirror of escape (|z| > r_esc) is |z| < 1/r_esc, which is stricter
    # than r_in only by one superattracting step; compare undecided sets
    diff = ok & ((r.dynamic == 2) != (dyn == 2))
    return SymmetryAudit(int(ok.sum()), int(diff.sum()))
