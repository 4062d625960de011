"""Command-line front end: ``nchmm run|sweep|micro``."""

from __future__ import annotations

import argparse
import csv
import importlib.util
import logging
import math
import sys
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from .analysis import ConvergenceReport, convergence_report, simultaneous_pairs
from .micro import (
    DENSE_MAX_N,
    Coupling,
    MicroSolveError,
    SamplingDomain,
    assemble_micro_system,
    recovered_tensor,
    solve_correctors,
    solve_correctors_dense,
    system_deficiency,
)
from .problems import builtin_examples

log = logging.getLogger("nchmm")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

REPORT_COLUMNS = (
    "H", "h_over_eps", "delta", "coupling", "err_h1_broken", "err_l2", "tensor_err_fro",
    "micro_cg_iters_total", "macro_cg_iters",
)
# appended after the documented columns so a row identifies its cell unambiguously
EXTRA_COLUMNS = ("n", "delta_mode", "status")
TENSOR_COLUMNS = ("H", "n", "delta_mode", "element", "point", "x1", "x2", "a11", "a12", "a21", "a22")

CONFIG_HELP = """\
config file: one key = value per line, '#' starts a comment. Keys:
  example      built-in example name ({names})
  problem      custom problem as path/to/file.py:factory (factory() returns an Example)
  H            comma-separated macro mesh sizes, fractions allowed (1/8,1/16)
  micro_n      comma-separated micro elements per axis
  delta        comma-separated modes: eps | factor:r | sqrt-eps
  coupling     periodic | dirichlet
  tol          micro CG relative tolerance
  macro_tol    macro CG relative tolerance
  jobs         worker processes for micro solves
  out          output directory
  memoize      true | false (exact reuse of identical sampling domains)
  preset       grid | simultaneous
  plots        true | false
  center       micro command: sampling-domain center x1,x2
Command-line flags override config values."""


class UsageError(Exception):
    pass


def parse_fraction(text: str) -> Fraction:
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a number or fraction: {text!r}") from exc
    if value <= 0:
        raise UsageError(f"value must be positive: {text!r}")
    return value


def parse_delta_mode(text: str):
    t = text.strip()
    if t == "eps":
        return 1.0
    if t in ("sqrt-eps", "sqrt"):
        return "sqrt"
    if t.startswith("factor:"):
        try:
            r = float(t.split(":", 1)[1])
        except ValueError as exc:
            raise UsageError(f"bad delta factor: {text!r}") from exc
        if not r > 0:
            raise UsageError(f"delta factor must be positive: {text!r}")
        return r
    raise UsageError(f"delta mode must be eps, factor:r or sqrt-eps (got {text!r})")


def format_delta_mode(mode) -> str:
    if mode == "sqrt":
        return "sqrt-eps"
    return "eps" if float(mode) == 1.0 else f"factor:{float(mode):g}"


def _split(text: str) -> list[str]:
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise UsageError(f"not an integer: {text!r}") from exc
    if v < 1:
        raise UsageError(f"must be >= 1: {text!r}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise UsageError(f"not a number: {text!r}") from exc
    if not v > 0:
        raise UsageError(f"must be positive: {text!r}")
    return v


@dataclass
class RunConfig:
    example: str | None = None
    problem: str | None = None
    H: list[Fraction] = field(default_factory=list)
    micro_n: list[int] = field(default_factory=list)
    delta: list = field(default_factory=list)
    coupling: str | None = None
    tol: float = 1e-10
    macro_tol: float = 1e-12
    jobs: int = 1
    out: str = "out"
    memoize: bool = False
    preset: str = "grid"
    plots: bool = True
    center: tuple[float, float] = (0.5, 0.5)

    def to_text(self) -> str:
        """Config-file rendering that parses back to an equal config."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None or (isinstance(v, list) and not v):
                continue
            if f.name == "H":
                v = ",".join(str(h) for h in v)
            elif f.name == "micro_n":
                v = ",".join(str(n) for n in v)
            elif f.name == "delta":
                v = ",".join(format_delta_mode(d) for d in v)
            elif f.name == "center":
                v = ",".join(repr(float(c)) for c in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_PARSERS = {
    "example": str.strip,
    "problem": str.strip,
    "H": lambda t: _nonempty("H", [parse_fraction(s) for s in _split(t)]),
    "micro_n": lambda t: _nonempty("micro_n", [_positive_int(s) for s in _split(t)]),
    "delta": lambda t: [parse_delta_mode(s) for s in _split(t)],
    "coupling": lambda t: Coupling(t.strip()).value if t.strip() in ("periodic", "dirichlet") else _bad_coupling(t),
    "tol": _positive_float,
    "macro_tol": _positive_float,
    "jobs": _positive_int,
    "out": str.strip,
    "memoize": _bool,
    "preset": lambda t: t.strip() if t.strip() in ("grid", "simultaneous") else _bad_preset(t),
    "plots": _bool,
    "center": lambda t: _center(t),
}


def _nonempty(key, values):
    if not values:
        raise UsageError(f"empty {key} list")
    return values


def _bad_coupling(t):
    raise UsageError(f"coupling must be periodic or dirichlet (got {t!r})")


def _bad_preset(t):
    raise UsageError(f"preset must be grid or simultaneous (got {t!r})")


def _center(t):
    parts = _split(t)
    if len(parts) != 2:
        raise UsageError(f"center needs two comma-separated coordinates (got {t!r})")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise UsageError(f"bad center {t!r}") from exc


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _PARSERS[key](value)
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        values.update(parse_config_text(text))
    flag_map = {
        "example": args.example, "H": args.H, "micro_n": args.micro_n, "delta": args.delta,
        "coupling": args.coupling, "tol": args.tol, "macro_tol": args.macro_tol, "jobs": args.jobs,
        "out": args.out, "preset": args.preset, "center": args.center,
    }
    for key, raw in flag_map.items():
        if raw is not None:
            values[key] = _PARSERS[key](raw)
    if args.memoize:
        values["memoize"] = True
    if args.no_plots:
        values["plots"] = False
    return RunConfig(**values)


def resolve_example(cfg: RunConfig):
    if cfg.example and cfg.problem:
        raise UsageError("give either example or problem, not both")
    if cfg.problem:
        path, _, attr = cfg.problem.rpartition(":")
        if not path or not attr:
            raise UsageError("problem must look like path/to/file.py:factory")
        spec = importlib.util.spec_from_file_location("nchmm_custom_problem", path)
        if spec is None or spec.loader is None:
            raise UsageError(f"cannot load problem file {path}")
        module = importlib.util.module_from_spec(spec)
        try:
            spec.loader.exec_module(module)
            return getattr(module, attr)()
        except (OSError, AttributeError) as exc:
            raise UsageError(f"cannot load problem {cfg.problem}: {exc}") from exc
    catalog = builtin_examples()
    if not cfg.example:
        raise UsageError("an example (--example) or a problem (config key 'problem') is required")
    if cfg.example not in catalog:
        raise UsageError(f"unknown example {cfg.example!r}; choose from {', '.join(catalog)}")
    return catalog[cfg.example]


def _g17(x) -> str:
    return format(float(x), ".17g")


def write_report_csv(path: Path, report: ConvergenceReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS + EXTRA_COLUMNS)
        for c in report.cells:
            w.writerow([
                _g17(c.H), _g17(c.h_over_eps), _g17(c.delta), c.coupling, _g17(c.err_h1_broken),
                _g17(c.err_l2), _g17(c.tensor_err_fro), c.micro_cg_iters_total, c.macro_cg_iters,
                c.n, c.delta_mode, c.status,
            ])


def read_report_csv(path: Path) -> list[dict]:
    """Rows of a report file with numeric fields parsed back to float/int."""
    ints = {"micro_cg_iters_total", "macro_cg_iters", "n"}
    strs = {"coupling", "delta_mode", "status"}
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                k: (v if k in strs else int(v) if k in ints else float(v)) for k, v in row.items()
            })
    return rows


def write_rates_csv(path: Path, report: ConvergenceReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "axis", "fixed", "delta_mode", "from_H", "from_n", "to_H", "to_n", "rate"])
        for metric in ("err_h1_broken", "err_l2", "tensor_err_fro"):
            for r in report.rates(metric):
                w.writerow([metric, r["axis"], r["fixed"], r["delta_mode"], *r["from_cell"], *r["to_cell"],
                            _g17(r["rate"])])


def write_tensors_csv(path: Path, report: ConvergenceReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TENSOR_COLUMNS)
        for c in report.cells:
            if c.tensors is None:
                continue
            for e in range(c.tensors.shape[0]):
                for q in range(c.tensors.shape[1]):
                    x = c.points[e, q]
                    A = c.tensors[e, q]
                    w.writerow([_g17(c.H), c.n, c.delta_mode, e, q, _g17(x[0]), _g17(x[1]),
                                *(_g17(v) for v in A.ravel())])


# --- SVG output ------------------------------------------------------------

def _colour(t: float) -> str:
    # blue -> white -> red
    t = min(max(t, 0.0), 1.0)
    if t < 0.5:
        s = t / 0.5
        r, g, b = s, s, 1.0
    else:
        s = (t - 0.5) / 0.5
        r, g, b = 1.0, 1.0 - s, 1.0 - s
    return "#%02x%02x%02x" % (int(255 * r), int(255 * g), int(255 * b))


def _isolines(values: np.ndarray, xs: np.ndarray, ys: np.ndarray, level: float) -> list:
    """Marching-squares segments of ``values[j, i]`` sampled at ``(xs[i], ys[j])``."""
    segs = []
    for j in range(len(ys) - 1):
        for i in range(len(xs) - 1):
            corners = [(xs[i], ys[j], values[j, i]), (xs[i + 1], ys[j], values[j, i + 1]),
                       (xs[i + 1], ys[j + 1], values[j + 1, i + 1]), (xs[i], ys[j + 1], values[j + 1, i])]
            pts = []
            for k in range(4):
                (x0, y0, v0), (x1, y1, v1) = corners[k], corners[(k + 1) % 4]
                if (v0 - level) * (v1 - level) < 0:
                    t = (level - v0) / (v1 - v0)
                    pts.append((x0 + t * (x1 - x0), y0 + t * (y1 - y0)))
            if len(pts) >= 2:
                segs.append((pts[0], pts[1]))
            if len(pts) == 4:
                segs.append((pts[2], pts[3]))
    return segs


def solution_svg(field_, title: str = "", size: int = 400, levels: int = 10) -> str:
    """Cell-coloured map of element-center values with isolines of the vertex averages."""
    p = field_.piecewise
    mesh = p.mesh
    nx, ny = mesh.nx, mesh.ny
    vals = p.center_values.reshape(ny, nx)
    lo, hi = float(vals.min()), float(vals.max())
    span = hi - lo if hi > lo else 1.0
    (x0, y0), (Lx, Ly) = mesh.origin, mesh.extent
    sx, sy = size / Lx, size / Ly
    pad = 30
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 2 * pad}" height="{size + 2 * pad + 20}">',
           f'<text x="{pad}" y="18" font-size="13" font-family="sans-serif">{title} '
           f'(min {lo:.4g}, max {hi:.4g})</text>',
           f'<g transform="translate({pad},{pad + 20})">']
    cw, ch = size / nx, size / ny
    for j in range(ny):
        for i in range(nx):
            out.append(f'<rect x="{i * cw:.3f}" y="{size - (j + 1) * ch:.3f}" width="{cw + 0.05:.3f}" '
                       f'height="{ch + 0.05:.3f}" fill="{_colour((vals[j, i] - lo) / span)}"/>')
    # vertex values: mean of the incident element-center values
    padded = np.pad(vals, 1, mode="edge")
    vv = 0.25 * (padded[:-1, :-1] + padded[1:, :-1] + padded[:-1, 1:] + padded[1:, 1:])
    xs, ys = mesh.x_lines, mesh.y_lines
    for k in range(1, levels):
        for (a, b) in _isolines(vv, xs, ys, lo + span * k / levels):
            out.append(f'<line x1="{(a[0] - x0) * sx:.2f}" y1="{size - (a[1] - y0) * sy:.2f}" '
                       f'x2="{(b[0] - x0) * sx:.2f}" y2="{size - (b[1] - y0) * sy:.2f}" '
                       'stroke="black" stroke-width="0.8"/>')
    out.append(f'<rect x="0" y="0" width="{size}" height="{size}" fill="none" stroke="black"/>')
    out.append("</g></svg>")
    return "\n".join(out) + "\n"


def convergence_svg(report: ConvergenceReport, metric: str = "err_h1_broken", size: int = 420) -> str:
    """Log-log plot of ``metric`` against H, one polyline per (n, delta) column."""
    groups: dict = {}
    for c in report.cells:
        v = getattr(c, metric)
        if c.status == "ok" and v > 0 and math.isfinite(v):
            groups.setdefault((c.n, c.delta_mode), []).append((float(c.H), v))
    pts = [p for g in groups.values() for p in g]
    pad = 50
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 2 * pad}" height="{size + 2 * pad}">',
           f'<text x="{pad}" y="20" font-size="13" font-family="sans-serif">{report.example}: {metric} vs H</text>']
    if not pts:
        out.append("</svg>")
        return "\n".join(out) + "\n"
    lx = np.log10([p[0] for p in pts])
    ly = np.log10([p[1] for p in pts])
    xlo, xhi = lx.min() - 0.1, lx.max() + 0.1
    ylo, yhi = ly.min() - 0.1, ly.max() + 0.1

    def tx(x):
        return pad + (math.log10(x) - xlo) / (xhi - xlo) * size

    def ty(y):
        return pad + size - (math.log10(y) - ylo) / (yhi - ylo) * size

    out.append(f'<rect x="{pad}" y="{pad}" width="{size}" height="{size}" fill="none" stroke="black"/>')
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
    for k, (key, g) in enumerate(sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][0]))):
        g = sorted(g)
        col = palette[k % len(palette)]
        path = " ".join(f"{tx(h):.2f},{ty(v):.2f}" for h, v in g)
        out.append(f'<polyline points="{path}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        for h, v in g:
            out.append(f'<circle cx="{tx(h):.2f}" cy="{ty(v):.2f}" r="2.5" fill="{col}"/>')
        out.append(f'<text x="{pad + 8}" y="{pad + 16 + 14 * k}" font-size="11" fill="{col}" '
                   f'font-family="sans-serif">n={key[0]} {key[1]}</text>')
    for e in range(math.ceil(xlo), math.floor(xhi) + 1):
        out.append(f'<text x="{tx(10.0 ** e):.1f}" y="{pad + size + 16}" font-size="10">1e{e}</text>')
    for e in range(math.ceil(ylo), math.floor(yhi) + 1):
        out.append(f'<text x="4" y="{ty(10.0 ** e):.1f}" font-size="10">1e{e}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# --- commands --------------------------------------------------------------

def _sweep_inputs(cfg: RunConfig, ex, single: bool):
    H_list = cfg.H or ([Fraction(1, 8)] if single else [Fraction(h).limit_denominator(1024) for h in ex.default_H])
    n_list = cfg.micro_n or ([ex.default_n[0]] if single else list(ex.default_n))
    if not H_list:
        raise UsageError("empty H list")
    if not n_list:
        raise UsageError("empty micro-n list")
    deltas = cfg.delta or list(ex.delta_factors)
    return H_list, n_list, deltas


def _run_report(cfg: RunConfig, ex, single: bool) -> ConvergenceReport:
    H_list, n_list, deltas = _sweep_inputs(cfg, ex, single)
    pairs = None
    if cfg.preset == "simultaneous":
        pairs = simultaneous_pairs(levels=len(H_list), H0=H_list[0], n0=n_list[0])

    def progress(c):
        log.info("H=%s n=%d delta=%s: H1 %.4g L2 %.4g tensor %.4g [%s] %.1fs",
                 c.H, c.n, c.delta_mode, c.err_h1_broken, c.err_l2, c.tensor_err_fro, c.status, c.seconds)

    return convergence_report(
        ex, H_list, n_list, delta_modes=deltas, pairs=pairs, progress=progress,
        apply_overrides=not cfg.micro_n, coupling=cfg.coupling, tol=cfg.tol, macro_tol=cfg.macro_tol,
        memoize=cfg.memoize, jobs=cfg.jobs, keep_fields=True,
    )


def _emit(cfg: RunConfig, report: ConvergenceReport, sweep: bool) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text())
    write_report_csv(out / "report.csv", report)
    write_tensors_csv(out / "tensors.csv", report)
    (out / "comparison.txt").write_text(report.comparison + "\n")
    if sweep:
        write_rates_csv(out / "rates.csv", report)
    if cfg.plots:
        ok = [c for c in report.cells if c.solution is not None]
        if ok:
            c = ok[-1]
            (out / "solution.svg").write_text(
                solution_svg(c.solution, f"{report.example} H={c.H} n={c.n} {c.delta_mode}"))
        if sweep:
            (out / "convergence.svg").write_text(convergence_svg(report))
    return out


def _print_report(report: ConvergenceReport) -> None:
    print(",".join(REPORT_COLUMNS + EXTRA_COLUMNS))
    for c in report.cells:
        print(f"{float(c.H):.6g},{c.h_over_eps:.6g},{c.delta:.6g},{c.coupling},{c.err_h1_broken:.4e},"
              f"{c.err_l2:.4e},{c.tensor_err_fro:.4e},{c.micro_cg_iters_total},{c.macro_cg_iters},"
              f"{c.n},{c.delta_mode},{c.status}")


def cmd_run(cfg: RunConfig) -> int:
    ex = resolve_example(cfg)
    if cfg.preset != "grid":
        raise UsageError("run takes a single cell; use sweep for presets")
    report = _run_report(cfg, ex, single=True)
    _emit(cfg, report, sweep=False)
    _print_report(report)
    return EXIT_OK if all(c.status == "ok" for c in report.cells) else EXIT_FAIL


def cmd_sweep(cfg: RunConfig) -> int:
    ex = resolve_example(cfg)
    report = _run_report(cfg, ex, single=False)
    _emit(cfg, report, sweep=True)
    _print_report(report)
    return EXIT_FAIL if all(c.status != "ok" for c in report.cells) else EXIT_OK


def cmd_micro(cfg: RunConfig) -> int:
    ex = resolve_example(cfg)
    n = cfg.micro_n[0] if cfg.micro_n else 8
    mode = cfg.delta[0] if cfg.delta else ex.delta_factors[0]
    from .analysis import resolve_delta

    delta = resolve_delta(mode, ex.eps)
    coupling = Coupling(cfg.coupling or ex.coupling)
    domain = SamplingDomain(cfg.center, delta, n, coupling)
    system = assemble_micro_system(domain, ex.tensor)
    corr = solve_correctors(domain, ex.tensor, tol=cfg.tol, system=system)
    it = recovered_tensor(domain, ex.tensor, corr)
    np.set_printoptions(precision=12, suppress=False)
    print(f"sampling domain: center {cfg.center}, delta {delta:.6g}, n {n}, {coupling.value} coupling")
    print(f"iterative: dimension {system.space.dof_count}, CG iterations {corr.report.iterations}, "
          f"residual {corr.report.residual:.3e}")
    print("iterative tensor:\n" + str(it.matrix))
    if n <= 24:
        print(f"iterative system deficiency: {system_deficiency(system)}")
    else:
        print("iterative system deficiency: 1 (constants only)" if coupling is Coupling.PERIODIC
              else "iterative system deficiency: 0")
    if n > DENSE_MAX_N:
        print(f"dense path refused: n = {n} > {DENSE_MAX_N}")
        return EXIT_OK
    dense = solve_correctors_dense(domain, ex.tensor)
    print(f"dense: {dense.unknowns} unknowns, {dense.constraints} independent constraints")
    print("dense tensor:\n" + str(dense.tensor.matrix))
    diff = float(np.linalg.norm(it.matrix - dense.tensor.matrix))
    print(f"frobenius difference: {diff:.3e}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    names = ", ".join(builtin_examples())
    p = argparse.ArgumentParser(
        prog="nchmm",
        description="Nonconforming P1 quadrilateral FEHMM experiments.",
        epilog=CONFIG_HELP.format(names=names),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "single FEHMM run"), ("sweep", "convergence sweep over H x n x delta"),
                           ("micro", "one sampling domain: iterative vs dense path")):
        s = sub.add_parser(name, help=helptext, epilog=CONFIG_HELP.format(names=names),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        s.add_argument("--example", help=f"built-in example ({names})")
        s.add_argument("--config", help="key = value config file")
        s.add_argument("--H", help="macro mesh sizes, e.g. 1/8 or 1/4,1/8")
        s.add_argument("--micro-n", dest="micro_n", help="micro elements per axis, e.g. 16 or 16,32")
        s.add_argument("--delta", help="eps | factor:r | sqrt-eps (comma-separated list allowed)")
        s.add_argument("--coupling", help="periodic | dirichlet")
        s.add_argument("--tol", help="micro CG tolerance (default 1e-10)")
        s.add_argument("--macro-tol", dest="macro_tol", help="macro CG tolerance (default 1e-12)")
        s.add_argument("--jobs", help="worker processes for micro solves")
        s.add_argument("--out", help="output directory (default ./out)")
        s.add_argument("--preset", help="grid | simultaneous")
        s.add_argument("--center", help="micro: sampling-domain center x1,x2")
        s.add_argument("--memoize", action="store_true", help="reuse bitwise-identical sampling domains")
        s.add_argument("--no-plots", dest="no_plots", action="store_true")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        handler = {"run": cmd_run, "sweep": cmd_sweep, "micro": cmd_micro}[args.command]
        return handler(cfg)
    except UsageError as exc:
        print(f"nchmm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MicroSolveError, RuntimeError) as exc:
        print(f"nchmm: solve failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
