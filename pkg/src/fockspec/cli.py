"""Command-line interface: ``fockspec {bands,channel,det,faddeev}``.

Exit status is 0 on success and 1 for invalid input: a model file or model
validation failure, or a bad window or grid. Status 2 means a numerical
failure, such as a singular solve or an exceeded dimension cap.

Each command prints a short human-readable summary followed by a data
table (CSV or JSON). The table goes to ``--out`` when given, else to
stdout; with ``--format json`` on stdout the summary moves to stderr so
that stdout is a single JSON document.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import friedrichs as fr
from .faddeev import SingularSystemError
from .model import ModelSpec, validate
from .modelfile import ModelFileError, load_model
from .oracle import DimensionCapError
from .torus import make_grid, wrap

DEFAULT_GRID = {1: 64, 2: 24, 3: 12}
DEFAULT_SWEEP = {1: 32, 2: 12, 3: 8}
FADDEEV_GRID = 16


class UsageError(Exception):
    """Invalid configuration (exit status 1)."""


class NumericalFailure(Exception):
    """Numerical failure (exit status 2)."""


@dataclass
class RunConfig:
    command: str
    model: str
    grid: int | None
    sweep: int | None
    window: tuple | None
    format: str
    out: str | None
    verify: bool
    allow_large: bool
    p: tuple | None
    points: int

    def check(self):
        for label in ("grid", "sweep"):
            v = getattr(self, label)
            if v is not None and v < 2:
                raise UsageError(f"--{label} must be >= 2, got {v}")
        if self.window is not None and not self.window[0] < self.window[1]:
            raise UsageError(f"--window must satisfy lo < hi, got {self.window}")
        if self.format not in ("csv", "json"):
            raise UsageError(f"unsupported format {self.format!r}")


# -- output ----------------------------------------------------------------------

def fmt_float(x) -> str:
    return format(float(x), ".17g")


def to_json(obj, indent: int = 0, step: int = 2) -> str:
    """JSON text with every float at 17 significant digits (non-finite -> null)."""
    pad = " " * (indent + step)
    end = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent + step, step)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [pad + to_json(v, indent + step, step) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent, step)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            return "null"
        text = fmt_float(obj)
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if row.get(c) is None else
                         fmt_float(row[c]) if isinstance(row[c], (float, np.floating)) else row[c]
                         for c in columns])
    return buf.getvalue()


def emit(cfg: RunConfig, report: dict, columns, rows, stdout) -> None:
    text = to_json(report) + "\n" if cfg.format == "json" else to_csv(columns, rows)
    if cfg.out:
        try:
            with open(cfg.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write {cfg.out}: {exc.strerror}") from None
    else:
        stdout.write(text)


def edge(x: float) -> str:
    """Band edge for the human-readable summary (rounded to 1e-9)."""
    return format(round(float(x), 9) + 0.0, ".12g")


def interval(lo, hi) -> str:
    return f"[{edge(lo)}, {edge(hi)}]"


# -- helpers -------------------------------------------------------------------------

def load_checked(path) -> ModelSpec:
    spec = load_model(path)
    report = validate(spec)
    if not report.ok:
        failures = report.failures()
        section = "w2" if failures[0].startswith("w2") else "v2"
        raise ModelFileError(section, None, "validation failed: " + "; ".join(failures))
    return spec


def p_point(spec: ModelSpec, cfg: RunConfig, stderr) -> np.ndarray:
    if cfg.p is None:
        return np.zeros(spec.nu)
    p = np.array(cfg.p, dtype=float)
    if p.shape != (spec.nu,):
        raise UsageError(f"--p needs {spec.nu} components, got {len(cfg.p)}")
    q = wrap(p)
    if not np.array_equal(q, p):
        stderr.write(f"notice: p wrapped into (-pi, pi]^{spec.nu}: {q.tolist()}\n")
    return q


def p_columns(nu):
    return [f"p_{i + 1}" for i in range(nu)]


# -- commands ------------------------------------------------------------------------

def cmd_bands(cfg: RunConfig, out, info, stderr) -> int:
    from .spectrum import default_window, essential_spectrum, three_particle_branch

    spec = load_checked(cfg.model)
    sweep = make_grid(spec.nu, cfg.sweep or DEFAULT_SWEEP.get(spec.nu, 4))
    grid = make_grid(spec.nu, cfg.grid) if cfg.grid else sweep
    three = three_particle_branch(spec)
    window = cfg.window or default_window(spec, three)
    bands = essential_spectrum(spec, sweep, window, grid=grid)
    info.write(f"three-particle: {interval(*bands.three_particle)}\n")
    info.write("merged: " + " U ".join(interval(a, b) for a, b in bands.merged) + "\n")
    info.write(f"sweep: {sweep.n} per axis, quadrature: {grid.n} per axis, "
                 f"gap threshold: {fmt_float(bands.gap_threshold)}\n")
    for flag in bands.flags:
        stderr.write(f"notice: {flag}\n")
    nu = spec.nu
    rows = [{"record": "three-particle", "lo": bands.three_particle[0], "hi": bands.three_particle[1]}]
    rows += [{"record": "merged", "index": i, "lo": a, "hi": b} for i, (a, b) in enumerate(bands.merged)]
    curves = []
    for s in bands.two_particle:
        pc = dict(zip(p_columns(nu), s.p.tolist()))
        for e, m in zip(s.eigenvalues, s.multiplicities):
            rows.append({"record": "two-particle", "index": s.index, **pc, "value": e,
                         "multiplicity": m})
        curves.append({"index": s.index, "p": s.p.tolist(), "band": [s.edges.m_p, s.edges.M_p],
                       "eigenvalues": s.eigenvalues, "multiplicities": s.multiplicities})
    report = {
        "command": "bands", "model": spec.name, "nu": nu,
        "three_particle": list(bands.three_particle),
        "merged": [list(iv) for iv in bands.merged],
        "resolution": {"sweep_n": sweep.n, "quadrature_n": grid.n,
                       "gap_threshold": bands.gap_threshold, "window": list(window)},
        "two_particle": curves, "flags": bands.flags,
    }
    cols = ["record", "index"] + p_columns(nu) + ["lo", "hi", "value", "multiplicity"]
    emit(cfg, report, cols, rows, out)
    return 0


def _mesh(lo, hi, k):
    return np.linspace(lo, hi, k)


def cmd_channel(cfg: RunConfig, out, info, stderr) -> int:
    from .oracle import compare_channel

    spec = load_checked(cfg.model)
    p = p_point(spec, cfg, stderr)
    grid = make_grid(spec.nu, cfg.grid or DEFAULT_GRID.get(spec.nu, 8))
    edges = fr.band_edges(spec, p)
    sysm = fr.FiberSystem(spec, p, grid, edges=edges)
    R = fr.operator_bound(spec) + (edges.M_p - edges.m_p)
    window = cfg.window or (edges.m_p - R, edges.M_p + R)
    pieces = [(a, b) for a, b in [(window[0], min(window[1], edges.m_p - fr.CLIP)),
                                  (max(window[0], edges.M_p + fr.CLIP), window[1])] if a < b]
    if not pieces:
        raise UsageError(f"window {tuple(window)} lies inside the band {interval(edges.m_p, edges.M_p)}")
    roots = fr.FiberRoots(p, tuple(window))
    for piece in pieces:
        r = fr.fiber_roots(spec, p, grid, piece, system=sysm)
        roots.roots += r.roots
        roots.multiplicities += r.multiplicities
        roots.detectors += r.detectors
    info.write(f"p: [{', '.join(fmt_float(x) for x in p)}]\n")
    info.write(f"edges: ({edge(edges.m_p)}, {edge(edges.M_p)})\n")
    info.write("eigenvalues: " + (", ".join(
        f"{fmt_float(z)}" + (f" (x{m})" if m > 1 else "")
        for z, m in zip(roots.roots, roots.multiplicities)) or "none") + "\n")
    report = {"command": "channel", "model": spec.name, "p": p.tolist(), "grid_n": grid.n,
              "edges": [edges.m_p, edges.M_p], "window": list(window),
              "roots": [{"z": z, "multiplicity": m, "detectors": list(t)}
                        for z, m, t in zip(roots.roots, roots.multiplicities, roots.detectors)]}
    rows = [{"record": "edges", "lo": edges.m_p, "hi": edges.M_p}]
    rows += [{"record": "root", "z": z, "multiplicity": m}
             for z, m in zip(roots.roots, roots.multiplicities)]
    nd = spec.nu + 1
    delta_cols = [f"delta_{i + 1}" for i in range(nd)]
    if fr.cosine_coupling(spec) is not None and pieces[0][1] < edges.m_p:
        zs = _mesh(pieces[0][0], pieces[0][1], cfg.points)
        dm = fr.delta_moments(spec, p, zs, grid, system=sysm)
        D = dm.deltas()
        dets = sysm.det(zs)
        report["deltas"] = [{"z": z, "det": d, "deltas": list(row), "product": float(np.prod(row))}
                            for z, d, row in zip(zs, dets, D)]
        for z, d, row in zip(zs, dets, D):
            rows.append({"record": "delta", "z": z, "det": d, "product": float(np.prod(row)),
                         **dict(zip(delta_cols, row))})
    if cfg.verify:
        rep = compare_channel(spec, p, grid, window)
        info.write(f"verify: {len(rep.pairs)} pairs, max distance {fmt_float(rep.max_distance)}, "
                     f"count mismatch {rep.count_mismatch}\n")
        report["verify"] = {"max_distance": rep.max_distance, "count_mismatch": rep.count_mismatch,
                            "pairs": rep.as_records(),
                            "unmatched_oracle": rep.unmatched_reference,
                            "unmatched_roots": rep.unmatched_candidate}
        rows += [{"record": "pair", "z": r["candidate"], "oracle": r["reference"],
                  "distance": r["distance"]} for r in rep.as_records()]
    cols = ["record", "z", "multiplicity", "lo", "hi", "det", "product"] + delta_cols + \
        ["oracle", "distance"]
    emit(cfg, report, cols, rows, out)
    return 0


def cmd_det(cfg: RunConfig, out, info, stderr) -> int:
    spec = load_checked(cfg.model)
    p = p_point(spec, cfg, stderr)
    grid = make_grid(spec.nu, cfg.grid or DEFAULT_GRID.get(spec.nu, 8))
    edges = fr.band_edges(spec, p)
    sysm = fr.FiberSystem(spec, p, grid, edges=edges)
    if cfg.window is None:
        R = fr.operator_bound(spec) + (edges.M_p - edges.m_p)
        window = (edges.m_p - R, edges.m_p - fr.CLIP)
    else:
        window = cfg.window
        if window[1] >= edges.m_p and window[0] <= edges.M_p:
            raise UsageError(f"window {tuple(window)} meets the band {interval(edges.m_p, edges.M_p)}")
    zs = _mesh(window[0], window[1], cfg.points)
    dets = sysm.det(zs)
    separable = fr.cosine_coupling(spec) is not None and window[1] < edges.m_p
    nd = spec.nu + 1
    delta_cols = [f"delta_{i + 1}" for i in range(nd)]
    rows = []
    D = fr.delta_moments(spec, p, zs, grid, system=sysm).deltas() if separable else None
    for i, z in enumerate(zs):
        row = {"z": z, "det": dets[i]}
        if separable:
            row.update(dict(zip(delta_cols, D[i])))
            row["product"] = float(np.prod(D[i]))
        rows.append(row)

    def changes(v):
        s = np.sign(v)
        return [i for i in range(len(v) - 1) if s[i] != s[i + 1]]

    sc_det = changes(dets)
    info.write(f"p: [{', '.join(fmt_float(x) for x in p)}], edges: ({edge(edges.m_p)}, {edge(edges.M_p)})\n")
    info.write(f"det sign changes: {len(sc_det)}\n")
    report = {"command": "det", "model": spec.name, "p": p.tolist(), "grid_n": grid.n,
              "edges": [edges.m_p, edges.M_p], "window": list(window), "rows": rows,
              "det_sign_change_cells": sc_det}
    if separable:
        sc_prod = changes(np.prod(D, axis=1))
        info.write(f"product sign changes: {len(sc_prod)}; locations agree: {sc_det == sc_prod}\n")
        report["product_sign_change_cells"] = sc_prod
    cols = ["z", "det"] + (delta_cols + ["product"] if separable else [])
    emit(cfg, report, cols, rows, out)
    return 0


def cmd_faddeev(cfg: RunConfig, out, info, stderr) -> int:
    from .faddeev import scan_mu
    from .oracle import DIM_CAP, compare_faddeev
    from .spectrum import default_window, essential_spectrum

    spec = load_checked(cfg.model)
    n = cfg.grid or FADDEEV_GRID
    dim = 1 + n**spec.nu + n ** (2 * spec.nu)
    if spec.nu != 1 and not cfg.allow_large:
        raise NumericalFailure(
            f"Faddeev assembly for nu={spec.nu} has dimension {dim}; "
            "it runs at nu=1 unless --allow-large is given"
        )
    if dim > DIM_CAP and not cfg.allow_large:
        raise NumericalFailure(f"dimension {dim} exceeds the cap {DIM_CAP}; use --allow-large")
    grid = make_grid(spec.nu, n)
    bands = essential_spectrum(spec, grid, grid=grid)
    window = cfg.window or default_window(spec, bands.three_particle)
    scan = scan_mu(spec, grid, window, bands)
    info.write("merged bands: " + " U ".join(interval(a, b) for a, b in bands.merged) + "\n")
    info.write("roots: " + (", ".join(fmt_float(r) for r in scan.roots) or "none") + "\n")
    report = {"command": "faddeev", "model": spec.name, "grid_n": n, "window": list(window),
              "merged": [list(iv) for iv in bands.merged],
              "roots": [{"z": r, "multiplicity": m} for r, m in zip(scan.roots, scan.multiplicities)],
              "scan": [{"z": z, "mu_re": m.real, "mu_im": m.imag} for z, m in zip(scan.z, scan.mu)]}
    rows = [{"record": "root", "z": r, "multiplicity": m}
            for r, m in zip(scan.roots, scan.multiplicities)]
    rows += [{"record": "scan", "z": z, "mu_re": m.real, "mu_im": m.imag}
             for z, m in zip(scan.z, scan.mu)]
    if cfg.verify:
        cap = max(DIM_CAP, dim) if cfg.allow_large else DIM_CAP
        rep = compare_faddeev(spec, grid, window, bands=bands, cap=cap)
        info.write(f"verify: {len(rep.pairs)} pairs, max distance {fmt_float(rep.max_distance)}, "
                     f"count mismatch {rep.count_mismatch}\n")
        report["verify"] = {"max_distance": rep.max_distance, "count_mismatch": rep.count_mismatch,
                            "pairs": rep.as_records(),
                            "unmatched_oracle": rep.unmatched_reference,
                            "unmatched_roots": rep.unmatched_candidate}
        rows += [{"record": "pair", "z": r["candidate"], "oracle": r["reference"],
                  "distance": r["distance"]} for r in rep.as_records()]
    cols = ["record", "z", "multiplicity", "mu_re", "mu_im", "oracle", "distance"]
    emit(cfg, report, cols, rows, out)
    return 0


COMMANDS = {"bands": cmd_bands, "channel": cmd_channel, "det": cmd_det, "faddeev": cmd_faddeev}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fockspec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "bands": "essential spectrum: three-particle interval and two-particle branch",
        "channel": "band edges, discrete eigenvalues and Delta values of one fiber",
        "det": "tabulate the fiber determinant (and Delta functions) over a window",
        "faddeev": "eigenvalues of H from the lambda = 1 condition",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text, description=text)
        sp.add_argument("--model", required=True, help="model file path")
        sp.add_argument("--grid", type=int, help="quadrature points per axis")
        sp.add_argument("--sweep", type=int, help="p-sweep points per axis (bands)")
        sp.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", help="output file (default: standard output)")
        sp.add_argument("--verify", action="store_true", help="compare against the oracle")
        sp.add_argument("--allow-large", action="store_true",
                        help="permit Faddeev assembly beyond nu=1 / the dimension cap")
        sp.add_argument("--p", type=float, nargs="+", help="fiber quasi-momentum")
        sp.add_argument("--points", type=int, default=201, help="z-mesh size for tables")
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig(args.command, args.model, args.grid, args.sweep,
                        tuple(args.window) if args.window else None, args.format, args.out,
                        args.verify, args.allow_large, tuple(args.p) if args.p else None,
                        args.points)
        cfg.check()
        start = time.perf_counter()
        # a JSON document owns stdout; the human-readable summary then goes to stderr
        info = stderr if cfg.format == "json" and not cfg.out else stdout
        status = COMMANDS[cfg.command](cfg, stdout, info, stderr)
        stderr.write(f"done in {time.perf_counter() - start:.2f} s\n")
        return status
    except (UsageError, ModelFileError, fr.BandOverlapError, fr.NotSeparableFamily) as exc:
        stderr.write(f"error: {exc}\n")
        return 1
    except (NumericalFailure, np.linalg.LinAlgError, fr.SpuriousRootError,
            SingularSystemError, DimensionCapError) as exc:
        stderr.write(f"numerical failure: {exc}\n")
        return 2
    except BrokenPipeError:
        # the reader went away (e.g. piped into head); the output is not needed
        try:
            sys.stdout = open(os.devnull, "w")
        except OSError:
            pass
        return 0

if __name__ == "__main__":
    sys.exit(main())
