"""Command line: ``circlebounds cf|returns|bounds|siegel ...``.

Exit codes: 0 success, 2 usage or domain error, 3 numerical lock or failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds
from .circlemap import CriticalCircleMap, closest_returns, solve_parameter
from .errors import DomainError, LabError, NumericalFailure
from .numbertheory import continued_fraction, parse_rotation

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class CampaignConfig:
    family: str = "standard"
    theta: str = "golden"
    param: float | None = None
    levels: tuple[int, int] = (4, 8)
    grid: tuple[int, int] = bounds.GRID_DEFAULT
    eps: float = bounds.EPS_DEFAULT
    B: float = bounds.B_DEFAULT
    K_good: float = bounds.K_GOOD_DEFAULT
    tol: float = 1e-10
    res: int = 512
    budget: int = 2000
    seed: int = 0
    samples: int = 100
    max_n: int = 6
    trace_level: int = 6
    out: str = "out"

    def canonical(self) -> str:
        d = dataclasses.asdict(self)
        d.pop("out")  # where results go does not change them
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str | dict) -> "CampaignConfig":
        d = json.loads(text) if isinstance(text, str) else dict(text)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        for key in ("levels", "grid"):
            if key in d:
                d[key] = tuple(int(v) for v in d[key])
        return cls(**d)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path | None, header: list[str], rows, cfg_hash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={cfg_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    text = buf.getvalue()
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return text


def resolve_map(cfg: CampaignConfig) -> CriticalCircleMap:
    if cfg.param is not None:
        return CriticalCircleMap(cfg.family, float(cfg.param))
    rho = parse_rotation(cfg.theta)
    param, _ = solve_parameter(cfg.family, rho.value, cfg.tol)
    return CriticalCircleMap(cfg.family, param)


def _levels(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("levels look like a..b") from exc
    if not 1 <= lo <= hi:
        raise argparse.ArgumentTypeError("need 1 <= a <= b")
    return lo, hi


def _grid(text: str) -> tuple[int, int]:
    try:
        r, a = text.lower().split("x")
        return int(r), int(a)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("grid looks like RxA, e.g. 32x64") from exc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_cf(args, out) -> int:
    rho = continued_fraction(float(args.x), args.depth)
    out.write("quotients: " + " ".join(map(str, rho.quotients)) + "\n")
    for (p, q), r in zip(rho.convergents[1:], rho.quotients):
        out.write(f"{r}\t{p}/{q}\n")
    if rho.numerically_rational:
        out.write("numerically rational\n")
    return EXIT_OK


def cmd_returns(cfg: CampaignConfig, out) -> int:
    f = resolve_map(cfg)
    _, hi = cfg.levels
    orbit = closest_returns(f, hi + 1)
    L = orbit.lengths
    rows = []
    for m in range(1, min(hi, orbit.levels) + 1):
        q, p, x = orbit.level(m)
        ratio = L[m - 1] / L[m] if m < orbit.levels else math.nan
        rows.append((m, q, p, x, abs(x), ratio))
    text = write_csv(Path(cfg.out) / "returns.csv", ["m", "q", "p", "point", "length", "ratio"], rows, cfg.hash)
    out.write(text)
    return EXIT_OK


def cmd_bounds(cfg: CampaignConfig, out) -> int:
    f = resolve_map(cfg)
    lo, hi = cfg.levels
    orbit = closest_returns(f, max(hi, cfg.trace_level) + 3)
    rows = []
    for n in range(lo, hi + 1):
        psi = bounds.decompose(f, n, orbit)
        lin = bounds.fit_linear_growth(f, n, cfg.grid, psi=psi)
        cub = bounds.fit_cubic(f, n, cfg.grid, cfg.B, psi=psi)
        rows.append((n, lin.C1, lin.C2, lin.survival, cub.c, cub.retained, cub.total))
    outdir = Path(cfg.out)
    write_csv(outdir / "bounds.csv", ["n", "C1", "C2", "survival", "c", "retained", "total"], rows, cfg.hash)
    # orbit-tracker campaign at one level
    n = cfg.trace_level
    psi = bounds.decompose(f, n, orbit)
    D1 = psi.data.D(1)
    zs = bounds.random_points(D1, cfg.samples, cfg.seed)
    traces = bounds.trace_many(f, n, zs, cfg.eps, cfg.K_good, psi)
    events = []
    for s, tr in enumerate(traces):
        for e in tr.events:
            events.append({
                "sample": s, "z": [fmt(zs[s].real), fmt(zs[s].imag)], "index": e.index, "level": e.level,
                "label": e.label, "angle": fmt(e.angle), "distance": fmt(e.distance),
                "good": e.good, "K": fmt(e.K),
            })
    doc = {"config_hash": cfg.hash, "config": json.loads(cfg.canonical()), "level": n, "events": events}
    (outdir / "traces.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    out.write((outdir / "bounds.csv").read_text())
    unclassified = sum(not tr.classified for tr in traces)
    out.write(f"traces: {len(traces)}, unclassified: {unclassified}\n")
    return EXIT_OK


def _blaschke(cfg: CampaignConfig):
    from .siegel import solve_tau
    from .siegel.blaschke import BlaschkeMap

    if cfg.param is not None:
        return BlaschkeMap(float(cfg.param))
    return solve_tau(parse_rotation(cfg.theta), min(cfg.tol, 1e-8))


def cmd_siegel(sub: str, cfg: CampaignConfig, out) -> int:
    from .siegel import density_probe, puzzle_pieces, render_blaschke
    from .siegel.render import GridSpec

    outdir = Path(cfg.out)
    f = _blaschke(cfg)
    if sub == "tau":
        out.write(f"tau {fmt(f.tau)}\n")
        if f.bracket:
            out.write(f"bracket {fmt(f.bracket[0])} {fmt(f.bracket[1])}\n")
        return EXIT_OK
    if sub == "julia":
        r = render_blaschke(f, GridSpec(0.5 + 0j, 3.0, cfg.res), cfg.budget)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = r.write(outdir / "julia", {"config_hash": cfg.hash, "seed": cfg.seed})
        for p in paths:
            out.write(f"wrote {p}\n")
        return EXIT_OK
    if sub == "puzzle":
        seq = puzzle_pieces(f, cfg.max_n)
        rows = [(p.n, p.q, p.trace_x, p.trace_length, p.diameter, p.diameter / p.trace_length,
                 p.inscribed_radius, p.inscribed_radius / p.diameter) for p in seq.pieces]
        text = write_csv(outdir / "puzzle.csv",
                         ["n", "q", "trace_x", "trace_length", "diameter", "diam_over_trace",
                          "inscribed_radius", "inscribed_over_diam"], rows, cfg.hash)
        out.write(text)
        return EXIT_OK
    if sub == "density":
        seq = puzzle_pieces(f, cfg.max_n)
        r = render_blaschke(f, GridSpec(0.5 + 0j, 3.0, cfg.res), cfg.budget)
        rep = density_probe(r, f, seq, cfg.samples, cfg.seed)
        rows = [(i, s.z.real, s.z.imag, s.depth, s.entry, s.radius, s.pixels, s.fraction)
                for i, s in enumerate(rep.samples)]
        text = write_csv(outdir / "density.csv",
                         ["sample", "re", "im", "depth", "entry", "radius", "pixels", "empty_fraction"], rows, cfg.hash)
        out.write(text)
        out.write(f"delta {fmt(rep.delta)} skipped {rep.skipped}\n")
        return EXIT_OK
    raise DomainError(f"unknown siegel subcommand {sub!r}")


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _kind(exc: Exception) -> str:
    """RationalLock -> "rational lock"."""
    return re.sub(r"(?<!^)(?=[A-Z])", " ", type(exc).__name__).lower()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="circlebounds", description=__doc__.splitlines()[0])
    sp = ap.add_subparsers(dest="cmd", required=True)

    p = sp.add_parser("cf", help="continued fraction of x in (0, 1)")
    p.add_argument("x", type=float)
    p.add_argument("--depth", type=int, default=12)

    def campaign(p):
        p.add_argument("--family", choices=["standard", "blaschke-circle"])
        p.add_argument("--theta", help="golden, [2,1,1], periodic:1,2 or a decimal")
        p.add_argument("--param", type=float, help="family parameter (skips the solve)")
        p.add_argument("--levels", type=_levels)
        p.add_argument("--eps", type=float)
        p.add_argument("--cutoff-B", dest="B", type=float)
        p.add_argument("--K-good", dest="K_good", type=float)
        p.add_argument("--grid", type=_grid)
        p.add_argument("--res", type=int)
        p.add_argument("--budget", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--max-n", dest="max_n", type=int)
        p.add_argument("--out")
        p.add_argument("--config", help="JSON file; its values override flags")

    campaign(sp.add_parser("returns", help="closest returns table"))
    campaign(sp.add_parser("bounds", help="linear/cubic fits and the orbit tracker"))
    p = sp.add_parser("siegel", help="Blaschke model: tau, julia, puzzle, density")
    p.add_argument("sub", choices=["tau", "julia", "puzzle", "density"])
    campaign(p)
    return ap


def config_from_args(args) -> CampaignConfig:
    cfg = CampaignConfig()
    if args.cmd == "siegel":
        cfg.family = "blaschke-circle"
    for f in dataclasses.fields(CampaignConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    if getattr(args, "config", None):
        over = json.loads(Path(args.config).read_text())
        merged = dataclasses.asdict(cfg)
        merged.update(over)
        cfg = CampaignConfig.from_json(merged)
    return cfg


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.cmd == "cf":
            return cmd_cf(args, out)
        cfg = config_from_args(args)
        if args.cmd == "returns":
            return cmd_returns(cfg, out)
        if args.cmd == "bounds":
            return cmd_bounds(cfg, out)
        return cmd_siegel(args.sub, cfg, out)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, LabError) as exc:
        print(f"{_kind(exc)}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
