"""Batch front end: ``ferrichain <study> --config run.json [--set k=v ...] [--out dir]``.

A run reads one JSON document with ``lattice``, ``model``, ``solver``,
``study`` and ``output`` blocks, executes a single study and writes its
artifacts into one directory.  Every written file starts with the tool
version and the SHA-256 of the resolved configuration, and the resolved
configuration itself is copied next to them as ``config.json``.

Exit status: 0 on success, 2 for configuration problems (diagnostics are
printed as ``file:line: key: message``), 3 when the eigensolver fails (the
solver report is printed and written to ``solve_report.json``).
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import logging
import os
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .eigensolver import (SolveFailure, ground_state, load_ground_state, relative_amplitude,
                          save_ground_state, sector_scan, top_amplitudes)
from .entanglement import (distortion_fidelity, fidelity, negativity_report, negativity_scan,
                           reduced_density_matrix, truncation_infidelity_scan)
from .mumagnon import StructureDictionary, approximate_ground_state, build_dictionary, overlap
from .spinbasis import LatticeSpec, as_half_integer, format_rational

log = logging.getLogger("ferrichain")

STUDIES = ("solve", "amplitudes", "dictionary", "approx-gs", "negativity-scan",
           "fidelity-truncation", "fidelity-distort", "sector-scan")
THREADS_ENV = "FERRICHAIN_THREADS"

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

DEFAULTS = {
    "lattice": {"n_sites": None, "pattern": ["1/2", "3/2"], "boundary": "ring"},
    "model": {"J": 1.0, "B": 0.0},
    "solver": {"tolerance": None, "max_restarts": 50, "krylov_dim": 100, "seed": 0,
               "method": "auto", "sector": "neel", "threads": None},
    "study": {},
    "output": {"directory": "ferrichain-out", "formats": ["csv"]},
}

STUDY_DEFAULTS = {
    "solve": {},
    "amplitudes": {"K": 70, "group_orbits": False},
    "dictionary": {"max_structure_len": 7, "max_pair_gap": 4},
    "approx-gs": {"threshold": 1e-3, "compare_exact": False, "sites": [0, 1, 2, 3]},
    "negativity-scan": {"first": 0},
    "fidelity-truncation": {"sites": [0, 1, 2, 3],
                            "fractions": [0.01, 0.02, 0.05, 0.10, 0.25, 1.0]},
    "fidelity-distort": {"sites": [0, 1, 2, 3], "sigmas": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
                         "trials": 40},
    "sector-scan": {"tie_tol": 1e-8},
}


@dataclass(frozen=True)
class Diagnostic:
    key: str
    message: str
    line: int | None = None
    source: str = "<config>"

    def __str__(self):
        where = self.source if self.line is None else f"{self.source}:{self.line}"
        return f"{where}: {self.key}: {self.message}"


# ---------------------------------------------------------------- config text

def _key_line(text: str, path: list[str]) -> int | None:
    """Line of the innermost key of ``path`` found in ``text`` (or of its nearest parent)."""
    pos, line = 0, None
    for key in path:
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if m is None:
            break
        pos = m.start()
        line = text.count("\n", 0, pos) + 1
    return line


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(doc: dict, overrides: list[str]) -> tuple[dict, list[Diagnostic]]:
    doc = copy.deepcopy(doc)
    diags = []
    for item in overrides:
        key, eq, raw = item.partition("=")
        if not eq or not key:
            diags.append(Diagnostic(item, "expected key=value", source="--set"))
            continue
        parts = key.split(".")
        node = doc
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                diags.append(Diagnostic(key, f"{p} is not a block", source="--set"))
                break
            node = nxt
        else:
            if isinstance(node.get(parts[-1]), dict):
                diags.append(Diagnostic(key, "only scalar or list fields can be overridden",
                                        source="--set"))
                continue
            node[parts[-1]] = _parse_value(raw)
    return doc, diags


def parse_config_text(text: str, source: str = "<config>") -> tuple[dict | None, list[Diagnostic]]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        return None, [Diagnostic("<document>", e.msg, e.lineno, source)]
    if not isinstance(doc, dict):
        return None, [Diagnostic("<document>", "top level must be a JSON object", 1, source)]
    return doc, []


# ---------------------------------------------------------------- validation

def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def validate(config, study: str | None = None, *, text: str | None = None,
             source: str = "<config>") -> list[Diagnostic]:
    """Schema and cross-field checks, without running anything.

    ``config`` may be the raw JSON text or an already parsed document.  When
    the text is available the diagnostics carry the line of the offending key.
    """
    if isinstance(config, str):
        text = config
        doc, diags = parse_config_text(config, source)
        if doc is None:
            return diags
    else:
        doc = config
    diags: list[Diagnostic] = []

    def bad(path: str, msg: str):
        line = _key_line(text, path.split(".")) if text else None
        diags.append(Diagnostic(path, msg, line, source))

    for k in doc:
        if k not in DEFAULTS:
            bad(k, "unknown block")
    for k in DEFAULTS:
        if k in doc and not isinstance(doc[k], dict):
            bad(k, "must be an object")
    if diags:
        return diags

    kind = study or doc.get("study", {}).get("kind")
    if kind is None:
        bad("study.kind", "no study given")
    elif kind not in STUDIES:
        bad("study.kind", f"unknown study {kind!r}; choose from {', '.join(STUDIES)}")
    elif study and doc.get("study", {}).get("kind", study) != study:
        bad("study.kind", f"config is for {doc['study']['kind']!r} but {study!r} was requested")

    cfg = _merge(DEFAULTS, doc)
    if kind in STUDY_DEFAULTS:
        cfg["study"] = _merge(STUDY_DEFAULTS[kind], cfg["study"])
    lat, model, solver, st, out = (cfg[k] for k in ("lattice", "model", "solver", "study", "output"))

    # lattice
    N = lat.get("n_sites")
    if not _is_int(N) or N < 2:
        bad("lattice.n_sites", "must be an integer >= 2")
        N = None
    spins = lat.get("spins")
    pattern = lat.get("pattern")
    if spins is not None:
        try:
            vals = [as_half_integer(s) for s in spins]
            if N is not None and len(vals) != N:
                bad("lattice.spins", f"lists {len(vals)} spins for {N} sites")
        except (TypeError, ValueError) as e:
            bad("lattice.spins", str(e))
    else:
        try:
            if not isinstance(pattern, list) or len(pattern) != 2:
                raise ValueError("must list two spin magnitudes [s1, s2]")
            s1, s2 = (as_half_integer(s) for s in pattern)
            if s1 <= 0 or s2 <= 0:
                raise ValueError("spin magnitudes must be positive")
            if N is not None and N % 2:
                bad("lattice.n_sites", f"an alternating pattern needs an even number of sites, got {N}")
        except (TypeError, ValueError) as e:
            bad("lattice.pattern", str(e))
    if lat.get("boundary") not in ("ring", "open"):
        bad("lattice.boundary", "must be 'ring' or 'open'")
    elif lat["boundary"] == "ring" and N is not None and N < 3:
        bad("lattice.n_sites", "a ring needs at least 3 sites")

    # model
    if not _is_num(model.get("J")):
        bad("model.J", "must be a number")
    if not _is_num(model.get("B")):
        bad("model.B", "must be a number")
    grid = model.get("B_grid")
    if kind == "sector-scan":
        if not isinstance(grid, list) or not grid or not all(_is_num(b) and b >= 0 for b in grid):
            bad("model.B_grid", "sector-scan needs a non-empty list of non-negative fields")
    elif grid is not None and not isinstance(grid, list):
        bad("model.B_grid", "must be a list of numbers")

    # solver
    tol = solver.get("tolerance")
    if tol is not None and (not _is_num(tol) or tol <= 0):
        bad("solver.tolerance", "must be a positive number or null")
    for key in ("max_restarts", "krylov_dim", "seed"):
        if not _is_int(solver.get(key)) or solver[key] < 0:
            bad(f"solver.{key}", "must be a non-negative integer")
    if _is_int(solver.get("krylov_dim")) and solver["krylov_dim"] < 2:
        bad("solver.krylov_dim", "must be at least 2")
    if solver.get("method") not in ("auto", "lanczos", "dense"):
        bad("solver.method", "must be 'auto', 'lanczos' or 'dense'")
    sector = solver.get("sector")
    if sector != "neel":
        try:
            as_half_integer(sector)
        except (TypeError, ValueError):
            bad("solver.sector", "must be 'neel' or a half-integer magnetization")
    threads = solver.get("threads")
    if threads is not None and (not _is_int(threads) or threads < 1):
        bad("solver.threads", "must be a positive integer or null")

    # study
    gs_path = st.get("ground_state")
    if gs_path is not None and not isinstance(gs_path, str):
        bad("study.ground_state", "must be a file path")
    if kind == "amplitudes" and (not _is_int(st.get("K")) or st["K"] < 1):
        bad("study.K", "must be a positive integer")
    if kind == "dictionary":
        for key in ("max_structure_len", "max_pair_gap"):
            if not _is_int(st.get(key)) or st[key] < 1:
                bad(f"study.{key}", "must be a positive integer")
        if lat.get("boundary") == "open":
            bad("lattice.boundary", "the dictionary reference must be a ring")
    if kind == "approx-gs":
        if not isinstance(st.get("dictionary"), str):
            bad("study.dictionary", "approx-gs needs the path of a dictionary JSON file")
        if not _is_num(st.get("threshold")) or st["threshold"] < 0:
            bad("study.threshold", "must be a non-negative number")
    if kind == "negativity-scan":
        seps = st.get("separations")
        if not isinstance(seps, list) or not seps or not all(_is_int(d) and d >= 0 for d in seps):
            bad("study.separations", "negativity-scan needs a non-empty list of separations D >= 0")
        elif N is not None and lat.get("boundary") == "open" \
                and st.get("first", 0) + 3 + max(seps) >= N:
            bad("study.separations", f"largest separation does not fit on {N} open sites")
    if kind in ("fidelity-truncation", "fidelity-distort", "approx-gs"):
        sites = st.get("sites")
        if not isinstance(sites, list) or not sites or not all(_is_int(k) for k in sites):
            bad("study.sites", "must be a non-empty list of site indices")
        elif len(set(sites)) != len(sites) or (N is not None and any(not 0 <= k < N for k in sites)):
            bad("study.sites", "sites must be distinct and inside the lattice")
    if kind == "fidelity-truncation":
        fr = st.get("fractions")
        if not isinstance(fr, list) or not fr or not all(_is_num(f) and 0 < f <= 1 for f in fr):
            bad("study.fractions", "must be a non-empty list of fractions in (0, 1]")
    if kind == "fidelity-distort":
        sg = st.get("sigmas")
        if not isinstance(sg, list) or not sg or not all(_is_num(s) and s >= 0 for s in sg):
            bad("study.sigmas", "must be a non-empty list of non-negative widths")
        if not _is_int(st.get("trials")) or st["trials"] < 1:
            bad("study.trials", "must be a positive integer")

    # output
    if not isinstance(out.get("directory"), str):
        bad("output.directory", "must be a path")
    fmts = out.get("formats")
    if not isinstance(fmts, list) or not set(fmts) <= {"csv", "svg"}:
        bad("output.formats", "must be a list drawn from 'csv', 'svg'")
    return diags


def resolve(doc: dict, study: str) -> dict:
    cfg = _merge(DEFAULTS, doc)
    cfg["study"] = _merge(STUDY_DEFAULTS[study], cfg["study"])
    cfg["study"]["kind"] = study
    return cfg


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical config; the output directory is left out, so a
    rerun elsewhere carries the same hash."""
    cfg = copy.deepcopy(cfg)
    cfg.get("output", {}).pop("directory", None)
    return hashlib.sha256(_canonical(cfg).encode()).hexdigest()


def _canonical(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, indent=1) + "\n"


# ---------------------------------------------------------------- building blocks

def lattice_from_config(cfg: dict) -> LatticeSpec:
    lat, model = cfg["lattice"], cfg["model"]
    J, B = float(model["J"]), float(model["B"])
    if lat.get("spins") is not None:
        return LatticeSpec(lat["n_sites"], tuple(lat["spins"]), lat["boundary"], J, B)
    s1, s2 = lat["pattern"]
    return LatticeSpec.alternating(lat["n_sites"], s1, s2, lat["boundary"], J, B)


def _sector(cfg: dict, lattice: LatticeSpec) -> Fraction:
    sector = cfg["solver"]["sector"]
    return lattice.neel_sz if sector == "neel" else as_half_integer(sector)


class Run:
    """State shared by the study functions of one invocation."""

    def __init__(self, cfg: dict, out_dir: Path):
        self.cfg = cfg
        self.out = out_dir
        self.hash = config_hash(cfg)
        self.written: list[Path] = []

    @property
    def provenance(self) -> dict:
        return {"tool": f"ferrichain {__version__}", "config_sha256": self.hash,
                "seed": self.cfg["solver"]["seed"]}

    def header_lines(self) -> str:
        return "".join(f"# {k}: {v}\n" for k, v in self.provenance.items())

    def write_csv(self, name: str, columns: list[str], rows) -> Path:
        buf = io.StringIO()
        buf.write(self.header_lines())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
        return self._write(name, buf.getvalue())

    def write_json(self, name: str, doc: dict) -> Path:
        doc = {"provenance": self.provenance, **doc}
        return self._write(name, json.dumps(doc, indent=1, sort_keys=True, default=_jsonable) + "\n")

    def _write(self, name: str, text: str) -> Path:
        path = self.out / name
        path.write_text(text)
        self.written.append(path)
        return path

    def plot(self, name: str, x, ys: dict, xlabel: str, ylabel: str, logy: bool = False):
        if "svg" not in self.cfg["output"]["formats"]:
            return
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        plt.rcParams["svg.hashsalt"] = self.hash
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for label, y in ys.items():
            ax.plot(x, y, "o-", label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if logy:
            ax.set_yscale("log")
        if len(ys) > 1:
            ax.legend()
        fig.tight_layout()
        path = self.out / name
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        self.written.append(path)

    def state(self):
        """Ground state from ``study.ground_state`` if given, else solved here."""
        path = self.cfg["study"].get("ground_state")
        if path:
            log.info("loading ground state from %s", path)
            return load_ground_state(path)
        lattice = lattice_from_config(self.cfg)
        return self.solve(lattice, _sector(self.cfg, lattice))

    def solve(self, lattice: LatticeSpec, M):
        s = self.cfg["solver"]
        log.info("solving %s, M=%s", lattice.pattern if lattice.is_alternating else lattice.spins,
                 format_rational(as_half_integer(M)))
        gs, report = ground_state(lattice, M, s["tolerance"], method=s["method"], seed=s["seed"],
                                  krylov_dim=s["krylov_dim"], max_restarts=s["max_restarts"])
        log.info("E0=%.12f after %d iterations, residual %.2e (%.2fs)", gs.energy,
                 report.iterations, report.residual, report.wall_time)
        if report.degenerate:
            log.warning("ground state is (near-)degenerate: gap %.3e", report.gap)
        self.report = report
        return gs


def _jsonable(x):
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _report_doc(report) -> dict:
    d = report.as_dict()
    d.pop("wall_time", None)  # keeps reruns byte-identical
    return d


# ---------------------------------------------------------------- studies

def study_solve(run: Run) -> None:
    gs = run.state()
    save_ground_state(gs, run.out / "ground_state.csv",
                      extra={**run.provenance, "neel_amplitude": gs.neel_amplitude})
    run.written.append(run.out / "ground_state.csv")
    if hasattr(run, "report"):
        run.write_json("solve_report.json", {"report": _report_doc(run.report),
                                             "energy": gs.energy,
                                             "neel_amplitude": gs.neel_amplitude,
                                             "dimension": len(gs.basis)})
    print(f"E0 = {gs.energy:.12f}   |alpha(Neel)| = {abs(gs.neel_amplitude):.6f}   "
          f"dim = {len(gs.basis)}")


def study_amplitudes(run: Run) -> None:
    gs = run.state()
    st = run.cfg["study"]
    entries = top_amplitudes(gs, st["K"], group_orbits=st["group_orbits"])
    n = gs.lattice.n_sites
    rows = []
    for rank, e in enumerate(entries, 1):
        rows.append([rank, f"{e.config.packed:#x}", *[format_rational(m) for m in e.config.m],
                     e.amplitude, relative_amplitude(gs, e.config), e.orbit_size])
    run.write_csv("amplitudes.csv", ["rank", "packed_hex", *[f"m{k}" for k in range(n)],
                                     "amplitude", "alpha_r", "orbit_size"], rows)


def study_dictionary(run: Run) -> None:
    gs = run.state()
    st = run.cfg["study"]
    d = build_dictionary(gs, st["max_structure_len"], st["max_pair_gap"])
    d.provenance.update(run.provenance)
    path = run.out / "dictionary.json"
    d.save(path)
    run.written.append(path)
    print(f"{len(d.singles)} structures, {len(d.pairs)} pair factors")


def study_approx_gs(run: Run) -> None:
    st = run.cfg["study"]
    lattice = lattice_from_config(run.cfg)
    d = StructureDictionary.load(st["dictionary"])
    approx = approximate_ground_state(lattice, d, st["threshold"])
    n = lattice.n_sites
    rows = [[f"{c.packed:#x}", *[format_rational(m) for m in c.m], a, amp]
            for c, a, amp in zip(approx.configs, approx.alpha_r, approx.amps)]
    run.write_csv("approx_gs.csv", ["packed_hex", *[f"m{k}" for k in range(n)], "alpha_r", "amplitude"],
                  rows)
    summary = {"configurations": len(approx), "normalization": approx.normalization,
               "threshold": approx.threshold}
    if st["compare_exact"]:
        exact = run.solve(lattice, _sector(run.cfg, lattice))
        sites = st["sites"]
        summary["overlap"] = abs(overlap(approx, exact))
        summary["rdm_fidelity"] = fidelity(reduced_density_matrix(exact, sites),
                                           reduced_density_matrix(approx, sites))
        summary["exact_dimension"] = len(exact.basis)
    run.write_json("approx_gs_summary.json", summary)
    print(", ".join(f"{k} = {v}" for k, v in summary.items()))


def study_negativity_scan(run: Run) -> None:
    gs = run.state()
    st = run.cfg["study"]
    rows = []
    N = gs.lattice.n_sites
    for D, n4 in negativity_scan(gs, st["separations"], first=st["first"]):
        sites = [st["first"], st["first"] + 1, st["first"] + 2 + D, st["first"] + 3 + D]
        bip = negativity_report(reduced_density_matrix(gs, [k % N for k in sites])).bipartitions
        rows.append([D, n4, *bip.values()])
    labels = ["a", "b", "c", "d", "ab", "ac", "ad"]
    run.write_csv("negativity_scan.csv", ["D", "N4", *[f"LN_{x}" for x in labels]], rows)
    run.plot("negativity_scan.svg", [r[0] for r in rows], {"N4": [r[1] for r in rows]},
             "D", "four-partite negativity")


def study_fidelity_truncation(run: Run) -> None:
    gs = run.state()
    st = run.cfg["study"]
    rows = truncation_infidelity_scan(gs, st["sites"], st["fractions"])
    run.write_csv("fidelity_truncation.csv", ["fraction", "infidelity"], rows)
    run.plot("fidelity_truncation.svg", [r[0] for r in rows],
             {"1-F": [max(r[1], 1e-16) for r in rows]}, "retained fraction", "infidelity", logy=True)


def study_fidelity_distort(run: Run) -> None:
    gs = run.state()
    st = run.cfg["study"]
    seed = run.cfg["solver"]["seed"]
    rows = []
    for s in st["sigmas"]:
        r = distortion_fidelity(gs, st["sites"], s, st["trials"], seed=seed)
        rows.append([r.sigma, r.mean_fidelity, r.stderr])
    run.write_csv("fidelity_distort.csv", ["sigma", "mean_fidelity", "stderr"], rows)
    run.plot("fidelity_distort.svg", [r[0] for r in rows], {"F": [r[1] for r in rows]},
             "sigma", "mean fidelity")


def study_sector_scan(run: Run) -> None:
    lattice = lattice_from_config(run.cfg)
    pts = sector_scan(lattice, run.cfg["model"]["B_grid"], tie_tol=run.cfg["study"]["tie_tol"],
                      seed=run.cfg["solver"]["seed"])
    rows = [[p.field, format_rational(p.best_M), p.energy, " ".join(format_rational(m) for m in p.ties)]
            for p in pts]
    run.write_csv("sector_scan.csv", ["B", "best_M", "energy", "tied_sectors"], rows)
    run.plot("sector_scan.svg", [p.field for p in pts], {"M": [float(p.best_M) for p in pts]},
             "B", "ground-state magnetization")


RUNNERS = {
    "solve": study_solve,
    "amplitudes": study_amplitudes,
    "dictionary": study_dictionary,
    "approx-gs": study_approx_gs,
    "negativity-scan": study_negativity_scan,
    "fidelity-truncation": study_fidelity_truncation,
    "fidelity-distort": study_fidelity_distort,
    "sector-scan": study_sector_scan,
}


def _thread_limit(cfg: dict) -> int | None:
    threads = cfg["solver"].get("threads")
    if threads is None and os.environ.get(THREADS_ENV):
        threads = int(os.environ[THREADS_ENV])
    return threads


def run(cfg: dict, study: str, out_dir: Path | None = None) -> Run:
    """Execute ``study`` on a resolved configuration; returns the finished :class:`Run`."""
    out_dir = Path(out_dir or cfg["output"]["directory"])
    out_dir.mkdir(parents=True, exist_ok=True)
    r = Run(cfg, out_dir)
    r._write("config.json", _canonical(cfg))
    threads = _thread_limit(cfg)
    if threads:
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=threads):
            RUNNERS[study](r)
    else:
        RUNNERS[study](r)
    return r


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ferrichain", description=__doc__.splitlines()[0])
    p.add_argument("study", choices=STUDIES)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a field, e.g. --set model.B=0.2 (repeatable)")
    p.add_argument("--out", help="output directory (overrides output.directory)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"ferrichain {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = Path(args.config).read_text()
    except OSError as e:
        print(f"{args.config}: cannot read config: {e.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    doc, diags = parse_config_text(text, args.config)
    if doc is not None:
        doc, diags = apply_overrides(doc, args.overrides)
        if args.out:
            doc.setdefault("output", {})["directory"] = args.out
        diags += validate(doc, args.study, text=text, source=args.config)
    if diags:
        for d in diags:
            print(d, file=sys.stderr)
        return EXIT_CONFIG

    cfg = resolve(doc, args.study)
    try:
        r = run(cfg, args.study)
    except SolveFailure as e:
        out = Path(cfg["output"]["directory"])
        dump = {"error": str(e), "report": _report_doc(e.report)}
        (out / "solve_report.json").write_text(json.dumps(dump, indent=1, sort_keys=True) + "\n")
        print(f"solver failure: {e}", file=sys.stderr)
        print(json.dumps(e.report.as_dict(), indent=1, sort_keys=True), file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, ValueError) as e:
        # inputs that only show up as invalid at run time (unreadable ground-state or
        # dictionary files, empty sectors, dictionary pattern mismatch)
        print(f"{args.config}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    for path in r.written:
        log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
