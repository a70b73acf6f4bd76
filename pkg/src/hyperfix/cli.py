"""Command-line front end: scenario runner plus a few one-shot tools.

    hyperfix run <file> [--out DIR] [--seed N] [--jobs J] [--timings]
    hyperfix psi check (--p P | --table FILE) [--grid M]
    hyperfix modulus --p P --eps E [--grid N]
    hyperfix ggld --input FILE [--window W]
    hyperfix symbolic --A JSON --b JSON --u JSON [--order K]

Exit codes: 0 success, 1 invalid config or arguments, 2 numerical failure,
3 precondition violation.
"""

from __future__ import annotations

import argparse
import importlib
import json
import logging
import os
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ._io import atomic_write, csv_text, fmt_float
from .diagnostics import (
    SequenceSample,
    ggld_check,
    lemma4_check,
    read_sample_csv,
)
from .errors import HyperfixError, PreconditionError
from .fixedpoint import (
    IterationTrace,
    MapDescriptor,
    RegularizationSchedule,
    affine_map,
    custom_map,
    fixed_point_via_projection,
    halpern_iterate,
    harmonic,
    mann_iterate,
    nonstandard_picard,
    picard_contraction,
    projection_composition,
    random_nonexpansive_affine,
    rotation_map,
    symbolic_fixed_point,
)
from .infinitesimal import format_hyperreal
from .spaces import (
    INF,
    Ball,
    Box,
    LpPsi,
    MaxPsi,
    Polytope,
    is_strictly_monotone,
    load_psi_table,
    norm_from_psi,
    psi_from_norm,
    psi_from_spec,
    uniform_monotonicity_modulus,
)

log = logging.getLogger("hyperfix")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PRECONDITION = 0, 1, 2, 3
DEFAULT_BUDGET = 10_000
# matplotlib rc state and its text parser are process-global
_PLOT_LOCK = threading.Lock()
SUMMARY_HEADER = ["scenario", "kind", "status", "final_residual", "iterations", "wall_time"]


class ConfigError(Exception):
    """Scenario file is unreadable or does not match the schema."""


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, PreconditionError):
        return EXIT_PRECONDITION
    if isinstance(exc, HyperfixError):
        return EXIT_NUMERICAL
    return EXIT_CONFIG


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------

def load_schema() -> dict:
    text = resources.files("hyperfix").joinpath("scenarios/schema.json").read_text()
    return json.loads(text)


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("hyperfix").joinpath("scenarios", name)))


def _validator(schema: dict, name: str):
    import jsonschema

    sub = {"$ref": f"#/$defs/{name}", "$defs": schema["$defs"]}
    return jsonschema.Draft202012Validator(sub)


def _error_text(err, prefix: str) -> str:
    path = prefix
    for p in err.absolute_path:
        path += f"[{p}]" if isinstance(p, int) else f".{p}"
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        if missing:
            path += f".{missing[0]}"
    return f"{path.lstrip('.') or '<root>'}: {err.message}"


def _validate(doc, validator, prefix: str) -> None:
    from jsonschema.exceptions import best_match

    err = best_match(validator.iter_errors(doc))
    if err is not None:
        raise ConfigError(_error_text(err, prefix))


def load_scenarios(path, _seen=None) -> list[dict]:
    """Parse a scenario or pack file, following ``include`` entries.

    Every scenario is validated before anything runs.  Relative ``file``
    references inside a scenario are resolved against the file that
    declared it.
    """
    path = Path(path)
    seen = set() if _seen is None else _seen
    key = path.resolve()
    if key in seen:
        raise ConfigError(f"{path}: include cycle")
    seen.add(key)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    schema = load_schema()
    scen_v = _validator(schema, "scenario")
    if isinstance(doc, dict) and "kind" in doc:
        _validate(doc, scen_v, doc.get("id", path.name))
        return [dict(doc, _base=str(path.parent))]
    _validate(doc, _validator(schema, "pack"), path.name)
    out = []
    for inc in doc.get("include", []):
        out.extend(load_scenarios(path.parent / inc, seen))
    for i, sc in enumerate(doc.get("scenarios", [])):
        label = f"scenarios[{i}]" if not isinstance(sc.get("id"), str) else f"scenarios[{i}]({sc['id']})"
        _validate(sc, scen_v, label)
        out.append(dict(sc, _base=str(path.parent)))
    ids = [s["id"] for s in out]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if _seen is None and dup:
        raise ConfigError(f"{path}: duplicate scenario ids {dup}")
    return out


# ---------------------------------------------------------------------------
# building objects from config
# ---------------------------------------------------------------------------

def _p(value, default=2.0) -> float:
    if value is None:
        return default
    return INF if value == "inf" else float(value)


def build_domain(spec: dict):
    t = spec["type"]
    if t == "ball":
        return Ball(np.array(spec["center"], dtype=float), float(spec["radius"]), _p(spec.get("p")))
    if t == "box":
        return Box(np.array(spec["lo"], dtype=float), np.array(spec["hi"], dtype=float))
    return Polytope(np.array(spec["vertices"], dtype=float))


def _load_callable(ref: str):
    mod, _, attr = ref.partition(":")
    try:
        return getattr(importlib.import_module(mod), attr)
    except (ImportError, AttributeError) as exc:
        raise ConfigError(f"cannot import custom map {ref!r}: {exc}") from None


def build_map(spec: dict, p: float, rng: np.random.Generator) -> MapDescriptor:
    t = spec["type"]
    check = spec.get("check", True)
    if t == "random_affine":
        T = random_nonexpansive_affine(rng, int(spec["dim"]), fixed_dim=int(spec.get("fixed_dim", 1)),
                                       radius=float(spec.get("radius", 1.0)))
        return T
    dom = build_domain(spec["domain"])
    if t == "affine":
        return affine_map(np.array(spec["A"], dtype=float), np.array(spec["b"], dtype=float), dom, p, check)
    if t == "rotation":
        return rotation_map(float(spec["theta"]), np.array(spec["center"], dtype=float), dom, p, check)
    if t == "projections":
        return projection_composition([build_domain(s) for s in spec["sets"]], dom, p, check)
    return custom_map(_load_callable(spec["callable"]), float(spec["lipschitz"]), dom, p, check)


def _point(value, T: MapDescriptor, rng: np.random.Generator, name: str) -> np.ndarray:
    if value == "random":
        return T.domain.sample(rng, 1)[0]
    x = np.array(value, dtype=float)
    if x.size != T.dim:
        raise ConfigError(f"{name} has dimension {x.size}, map has {T.dim}")
    return x


def build_sample(spec: dict, base: str, window: int | None) -> SequenceSample:
    if "file" in spec:
        path = Path(spec["file"])
        if not path.is_absolute():
            path = Path(base) / path
        if not path.exists():
            raise ConfigError(f"sample file {path} not found")
        return read_sample_csv(path, window)
    n = int(spec.get("n", 200))
    W = window if window is not None else n // 2
    E = np.eye(n)
    if spec["generator"] == "basis":
        return SequenceSample.lp(E, W, _p(spec.get("p")))
    psi = psi_from_spec(spec.get("psi", "lp:2"))
    decay = (np.arange(1, n + 1) ** -float(spec.get("y_decay", 0.0)))[:, None]
    return SequenceSample.direct_sum(float(spec.get("x_coef", 1.0)) * E,
                                     float(spec.get("y_coef", 0.0)) * decay * E, psi, W)


def build_schedule(spec: dict | None) -> RegularizationSchedule:
    return RegularizationSchedule(**(spec or {}))


def _alphas(value):
    return harmonic if value == "harmonic" else float(value)


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

def write_plot(path: Path, series, title: str) -> None:
    """Residual-vs-iteration SVG on a log scale, byte-stable across runs."""
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib.backends.backend_svg import FigureCanvasSVG
    from matplotlib.figure import Figure

    with _PLOT_LOCK, matplotlib.rc_context({"svg.hashsalt": "hyperfix", "svg.fonttype": "none"}):
        fig = Figure(figsize=(6, 4))
        FigureCanvasSVG(fig)
        ax = fig.add_subplot()
        for label, it, res in series:
            it = np.asarray(it, dtype=float)
            res = np.asarray(res, dtype=float)
            keep = res > 0
            ax.plot(np.maximum(it[keep], 0) + 1, res[keep], label=label, lw=1.2)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("iteration + 1")
        ax.set_ylabel("||Tx - x||")
        ax.set_title(title)
        if len(series) > 1:
            ax.legend()
        fig.tight_layout()
        tmp = path.with_name(f".tmp-{path.name}")
        fig.savefig(tmp, format="svg", metadata={"Date": None})
        os.replace(tmp, path)


@dataclass
class Outcome:
    final_residual: float | None = None
    iterations: int | None = None
    files: list = field(default_factory=list)


def _emit_trace(out: Path, tr: IterationTrace, title: str, name: str = "trace") -> None:
    tr.write_csv(out / f"{name}.csv")
    write_plot(out / "plot.svg", [(name, tr.iters, tr.residuals)], title)


# ---------------------------------------------------------------------------
# scenario kinds
# ---------------------------------------------------------------------------

def _map_and_points(sc, rng, need_u=True):
    p = _p(sc.get("space", {}).get("p"))
    T = build_map(sc["map"], p, rng)
    dim = sc.get("space", {}).get("dim")
    if dim is not None and dim != T.dim:
        raise ConfigError(f"{sc['id']}: space.dim {dim} does not match map dimension {T.dim}")
    x0 = _point(sc["x0"], T, rng, "x0") if "x0" in sc else None
    u = _point(sc["u"], T, rng, "u") if need_u and "u" in sc else None
    return T, x0, u


def run_contraction(sc, rng, out: Path) -> Outcome:
    T, x0, _ = _map_and_points(sc, rng, need_u=False)
    x, tr = picard_contraction(T, x0, sc.get("tol", 1e-10), sc.get("cap", 1_000_000))
    _emit_trace(out, tr, f"{sc['id']}: Picard")
    return Outcome(tr.final_residual, int(tr.iters[-1]))


def run_nonstandard(sc, rng, out: Path) -> Outcome:
    T, x0, u = _map_and_points(sc, rng)
    sched = build_schedule(sc.get("schedule"))
    kw = {"cap": sc["cap"]} if "cap" in sc else {}
    if sc.get("project"):
        pf = fixed_point_via_projection(T, u, x0, sched, **kw)
        run = pf.ladder
        rows = [[fmt_float(pf.residual), fmt_float(pf.dist_to_set)] + [fmt_float(v) for v in pf.point]]
        header = ["residual", "dist_to_set"] + [f"coord_{i}" for i in range(T.dim)]
        atomic_write(out / "projection.csv", csv_text(header, rows))
        final = pf.residual
    else:
        run = nonstandard_picard(T, u, x0, sched, **kw)
        final = run.stages[-1].residual
    rows = [[str(s.j), fmt_float(s.eps), fmt_float(s.residual), fmt_float(s.bound), str(s.iterations),
             str(s.ok).lower()] for s in run.stages]
    atomic_write(out / "stages.csv", csv_text(["stage", "eps", "residual", "bound", "iterations", "ok"], rows))
    _emit_trace(out, run.trace, f"{sc['id']}: regularized ladder")
    return Outcome(final, run.trace.map_evals)


def run_mann(sc, rng, out: Path) -> Outcome:
    T, x0, _ = _map_and_points(sc, rng, need_u=False)
    tr = mann_iterate(T, x0, _alphas(sc.get("alphas", 0.5)), sc.get("n", 1000))
    _emit_trace(out, tr, f"{sc['id']}: Mann")
    return Outcome(tr.final_residual, tr.map_evals)


def run_halpern(sc, rng, out: Path) -> Outcome:
    T, x0, u = _map_and_points(sc, rng)
    tr = halpern_iterate(T, u, x0, _alphas(sc.get("alphas", "harmonic")), sc.get("n", 1000))
    _emit_trace(out, tr, f"{sc['id']}: Halpern")
    return Outcome(tr.final_residual, tr.map_evals)


def compare_all(T: MapDescriptor, x0, u, budget: int = DEFAULT_BUDGET, sched=None,
                mann_alpha=0.5, halpern_alphas=harmonic):
    """Run the three iterations on one map with the same evaluation budget.

    Returns ``(rows, traces, reference)``; each row is ``(method, map_evals,
    final_residual, dist_to_reference)``.  The reference point is the
    shadow of the symbolic fixed point for affine maps, otherwise the
    final point with the smallest residual.
    """
    ladder = nonstandard_picard(T, u, x0, sched, max_evals=budget)
    traces = {
        "nonstandard_picard": ladder.trace,
        "mann": mann_iterate(T, x0, mann_alpha, budget),
        "halpern": halpern_iterate(T, u, x0, halpern_alphas, budget),
    }
    finals = {m: tr.final_point for m, tr in traces.items()}
    finals["nonstandard_picard"] = ladder.point
    res = {m: T.norm(T(x) - x) for m, x in finals.items()}
    if T.is_affine:
        ref = symbolic_fixed_point(T, u).shadow
    else:
        ref = finals[min(res, key=res.get)]
    rows = [(m, traces[m].map_evals, res[m], T.norm(finals[m] - ref)) for m in traces]
    return rows, traces, ref


def run_compare(sc, rng, out: Path) -> Outcome:
    T, x0, u = _map_and_points(sc, rng)
    alpha = sc.get("alphas", 0.5)
    rows, traces, _ = compare_all(T, x0, u, sc.get("budget", DEFAULT_BUDGET),
                                  build_schedule(sc.get("schedule")), _alphas(alpha))
    text = csv_text(["method", "map_evals", "final_residual", "dist_to_reference"],
                    [[m, str(n), fmt_float(r), fmt_float(d)] for m, n, r, d in rows])
    atomic_write(out / "compare.csv", text)
    for m, tr in traces.items():
        tr.write_csv(out / f"trace_{m}.csv")
    write_plot(out / "plot.svg", [(m, tr.iters, tr.residuals) for m, tr in traces.items()],
               f"{sc['id']}: matched budget")
    best = min(r for _, _, r, _ in rows)
    return Outcome(best, max(n for _, n, _, _ in rows))


def psi_roundtrip_error(psi, M: int = 1000) -> float:
    """Sup-norm gap between ``psi`` and the table rebuilt from its norm."""
    table = psi_from_norm(lambda a, b: norm_from_psi(psi, a, b), M)
    t = np.linspace(0.0, 1.0, M + 1)
    return float(np.max(np.abs(table(t) - psi(t))))


def run_psi_scan(sc, rng, out: Path) -> Outcome:
    grid = sc.get("grid", 200)
    eps_list = sc.get("eps", [0.1])
    rows = []
    for spec in sc["psis"]:
        psi = _psi_from_config(spec, sc["_base"])
        strict = is_strictly_monotone(psi)
        err = psi_roundtrip_error(psi)
        for e in eps_list:
            d = uniform_monotonicity_modulus(psi, e, grid) if strict else None
            rows.append([psi.spec(), str(strict).lower(), fmt_float(err), fmt_float(e), fmt_float(d)])
    header = ["psi", "strictly_monotone", "roundtrip_error", "eps", "modulus"]
    atomic_write(out / "psi_scan.csv", csv_text(header, rows))
    return Outcome()


def _psi_from_config(spec: str, base: str):
    if spec.startswith("table:"):
        path = Path(spec[len("table:"):])
        return load_psi_table(path if path.is_absolute() else Path(base) / path)
    return psi_from_spec(spec)


def run_modulus(sc, rng, out: Path) -> Outcome:
    psi = _psi_from_config(sc["psi"], sc["_base"])
    grid = sc.get("grid", 200)
    rows = [[psi.spec(), fmt_float(e), fmt_float(uniform_monotonicity_modulus(psi, e, grid))]
            for e in sc["eps"]]
    atomic_write(out / "modulus.csv", csv_text(["psi", "eps", "modulus"], rows))
    return Outcome()


def run_ggld(sc, rng, out: Path) -> Outcome:
    s = build_sample(sc["sample"], sc["_base"], sc.get("tail_window"))
    r = ggld_check(s)
    row = [r.verdict.value, fmt_float(r.estimate), str(r.weak_null).lower(), fmt_float(r.norm_limit), r.reason]
    atomic_write(out / "ggld.csv", csv_text(["verdict", "double_limsup", "weakly_null", "norm_limit", "reason"],
                                            [row]))
    return Outcome()


def run_lemma4(sc, rng, out: Path) -> Outcome:
    s = build_sample(sc["sample"], sc["_base"], sc.get("tail_window"))
    r = lemma4_check(s)
    names = list(r.hypotheses)
    row = [r.verdict.value] + [str(r.hypotheses[k]).lower() for k in names] + [
        fmt_float(r.double_limit), fmt_float(r.norm_limit), fmt_float(r.y_norm_tail[-1])]
    header = ["verdict"] + names + ["double_limit", "norm_limit", "y_norm_last"]
    atomic_write(out / "lemma4.csv", csv_text(header, [row]))
    return Outcome()


def run_symbolic(sc, rng, out: Path) -> Outcome:
    T, _, u = _map_and_points(sc, rng)
    res = symbolic_fixed_point(T, u, sc.get("window", 8))
    rows = [[str(i), fmt_float(s), format_hyperreal(z)] for i, (s, z) in enumerate(zip(res.shadow, res.z))]
    atomic_write(out / "symbolic.csv", csv_text(["component", "shadow", "series"], rows))
    return Outcome(T.norm(T(res.shadow) - res.shadow), None)


RUNNERS = {
    "contraction": run_contraction,
    "nonstandard_picard": run_nonstandard,
    "mann": run_mann,
    "halpern": run_halpern,
    "compare_all": run_compare,
    "psi_scan": run_psi_scan,
    "modulus": run_modulus,
    "ggld": run_ggld,
    "lemma4": run_lemma4,
    "symbolic": run_symbolic,
}


def run_scenario(sc: dict, out_root: Path, seed: int | None = None):
    """Run one validated scenario; returns ``(summary row, exit code)``."""
    sid, kind = sc["id"], sc["kind"]
    out = out_root / sid
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(sc.get("seed", 0) if seed is None else seed)
    t0 = time.perf_counter()
    code, status = EXIT_OK, "ok"
    outcome = Outcome()
    try:
        outcome = RUNNERS[kind](sc, rng, out)
    except (HyperfixError, ConfigError, ValueError) as exc:
        code = exit_code_for(exc)
        status = {EXIT_CONFIG: "config_error", EXIT_NUMERICAL: "numerical_failure",
                  EXIT_PRECONDITION: "precondition_violation"}[code]
        log.error("%s: %s: %s", sid, type(exc).__name__, exc)
    wall = time.perf_counter() - t0
    it = "" if outcome.iterations is None else str(outcome.iterations)
    row = [sid, kind, status, fmt_float(outcome.final_residual), it, wall]
    return row, code


def run(config_path, out_dir=None, seed: int | None = None, jobs: int = 1, timings: bool = False) -> int:
    """Validate every scenario in ``config_path`` and run them.

    Writes ``<out>/<id>/...`` per scenario and ``<out>/summary.csv``.  The
    wall-time column is left empty unless ``timings`` is set, so repeated
    runs produce byte-identical files.  Returns the exit code of the first
    failing scenario, or 0.
    """
    try:
        scenarios = load_scenarios(config_path)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    out_root = Path(out_dir or os.environ.get("HYPERFIX_OUT") or "hyperfix_out")
    out_root.mkdir(parents=True, exist_ok=True)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(lambda s: run_scenario(s, out_root, seed), scenarios))
    else:
        results = [run_scenario(s, out_root, seed) for s in scenarios]
    rows = []
    for row, _ in results:
        row[-1] = fmt_float(row[-1]) if timings else ""
        rows.append(row)
    atomic_write(out_root / "summary.csv", csv_text(SUMMARY_HEADER, rows))
    return next((c for _, c in results if c != EXIT_OK), EXIT_OK)


# ---------------------------------------------------------------------------
# one-shot subcommands
# ---------------------------------------------------------------------------

def _psi_from_p(p: str):
    return MaxPsi() if p in ("inf", "max") else LpPsi(float(p))


def cmd_psi_check(args) -> int:
    psi = load_psi_table(args.table) if args.table else _psi_from_p(args.p)
    strict = is_strictly_monotone(psi, args.grid)
    print(f"psi: {psi.spec()}")
    print("valid: true")
    print(f"strictly_monotone: {str(strict).lower()}")
    print(f"roundtrip_error: {psi_roundtrip_error(psi, args.grid):.3e}")
    return EXIT_OK


def cmd_modulus(args) -> int:
    psi = _psi_from_p(args.p)
    d = uniform_monotonicity_modulus(psi, args.eps, args.grid)
    print(f"psi: {psi.spec()}")
    print(f"eps: {args.eps:g}")
    print(f"modulus: {d!r}")
    return EXIT_OK


def cmd_ggld(args) -> int:
    s = read_sample_csv(args.input, args.window)
    r = ggld_check(s)
    print(f"verdict: {r.verdict.value}")
    print(f"double_limsup: {r.estimate!r}")
    print(f"weakly_null: {str(r.weak_null).lower()}")
    print(f"norm_limit: {r.norm_limit!r}")
    if r.reason:
        print(f"reason: {r.reason}")
    return EXIT_OK


def _json_array(text: str, name: str) -> np.ndarray:
    try:
        return np.array(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError):
        raise ConfigError(f"--{name} must be a JSON array of numbers, got {text!r}") from None


def cmd_symbolic(args) -> int:
    A = np.atleast_2d(_json_array(args.A, "A"))
    b = _json_array(args.b, "b").ravel()
    u = _json_array(args.u, "u").ravel()
    if A.shape != (b.size, b.size) or u.size != b.size:
        raise ConfigError(f"shape mismatch: A {A.shape}, b {b.shape}, u {u.shape}")
    # the symbolic solve never consults the domain; any ball holding u will do
    dom = Ball(np.zeros(b.size), max(1.0, 2 * float(np.linalg.norm(u))))
    T = affine_map(A, b, dom, check=False)
    res = symbolic_fixed_point(T, u, args.order)
    for i, (s, z) in enumerate(zip(res.shadow, res.z)):
        print(f"z[{i}] = {format_hyperreal(z)}")
    print("shadow: " + " ".join(repr(float(v)) for v in res.shadow))
    print(f"residual: {T.norm(T(res.shadow) - res.shadow):.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hyperfix", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario or scenario pack")
    r.add_argument("config", help="scenario JSON file, or 'bundled' for the bundled pack")
    r.add_argument("--out", help="output directory (default: $HYPERFIX_OUT or ./hyperfix_out)")
    r.add_argument("--seed", type=int, help="override every scenario's seed")
    r.add_argument("--jobs", type=int, default=1, help="scenarios to run in parallel")
    r.add_argument("--timings", action="store_true", help="fill the wall_time column of summary.csv")

    ps = sub.add_parser("psi", help="psi utilities")
    ps_sub = ps.add_subparsers(dest="psi_command", required=True)
    pc = ps_sub.add_parser("check", help="validate a psi and report strict monotonicity")
    g = pc.add_mutually_exclusive_group(required=True)
    g.add_argument("--p", help="lp exponent (or 'inf' for the max norm)")
    g.add_argument("--table", help="tabulated psi CSV with header t,psi")
    pc.add_argument("--grid", type=int, default=1000)

    m = sub.add_parser("modulus", help="brute-force uniform-monotonicity modulus")
    m.add_argument("--p", required=True)
    m.add_argument("--eps", type=float, required=True)
    m.add_argument("--grid", type=int, default=200)

    gg = sub.add_parser("ggld", help="GGLD verdict for a sample file")
    gg.add_argument("--input", required=True)
    gg.add_argument("--window", type=int)

    s = sub.add_parser("symbolic", help="hyperreal fixed point of x -> A x + b anchored at u")
    s.add_argument("--A", required=True, help="JSON matrix")
    s.add_argument("--b", required=True, help="JSON vector")
    s.add_argument("--u", required=True, help="JSON vector")
    s.add_argument("--order", type=int, default=8, help="series window K")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = bundled_path("pack.json") if args.config == "bundled" else args.config
            return run(cfg, args.out, args.seed, args.jobs, args.timings)
        if args.command == "psi":
            return cmd_psi_check(args)
        if args.command == "modulus":
            return cmd_modulus(args)
        if args.command == "ggld":
            return cmd_ggld(args)
        return cmd_symbolic(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HyperfixError, ValueError, OSError) as exc:
        code = exit_code_for(exc) if isinstance(exc, HyperfixError) else EXIT_CONFIG
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
