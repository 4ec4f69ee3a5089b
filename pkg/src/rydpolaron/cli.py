"""Command-line front end.

    rydpolaron bound-states --config run.ini --out results/
    rydpolaron spectrum --mode fda --config run.ini
    rydpolaron sweep --config run.ini --threads 3

Workers compute per-n results and hand back CSV text; the parent process is
the only writer. Exit codes: 0 success, 1 other failure, 2 config error,
3 convergence error.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np

from . import pipeline
from .bound_states import ConvergenceError, write_levels
from .config import ConfigError, RunConfig, load_config
from .fda import power_law_exponent
from .spectra import SpectrumError, occupation_label, spectrum_to_csv
from .trap import write_shells

THREADS_ENV = "RYDPOLARON_THREADS"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3


class StageError(RuntimeError):
    def __init__(self, stage: str, n: int | None, exc: BaseException):
        where = f"{stage}" + (f" (n={n})" if n is not None else "")
        super().__init__(f"{where}: {type(exc).__name__}: {exc}")
        self.code = EXIT_CONVERGENCE if isinstance(exc, ConvergenceError) else EXIT_FAIL


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _levels_csv(prep: pipeline.Prepared, density: float) -> str:
    buf = io.BytesIO()
    write_levels(prep.states, density, buf)
    return buf.getvalue().decode()


def _lines_csv(lines, floor: float) -> str:
    keep = lines.weights >= floor
    labels = [occupation_label(o) for o in lines.occupations[keep]]
    out = ["detuning_hz,weight,label"]
    out += [f"{p:.17g},{w:.17g},{lab}" for p, w, lab in
            zip(lines.positions[keep], lines.weights[keep], labels)]
    return "\n".join(out) + "\n"


def _overlap_csv(S) -> str:
    rows = ["t_s,re,im"]
    rows += [f"{t:.17g},{v.real:.17g},{v.imag:.17g}" for t, v in zip(S.times, S.values)]
    return "\n".join(rows) + "\n"


def _shells_csv(shells) -> str:
    buf = io.BytesIO()
    write_shells(shells, buf)
    return buf.getvalue().decode()


def _task(kind: str, n: int, cfg: RunConfig, mode: str | None, workers: int) -> dict:
    """Run one n; returns files (name -> text), diagnostics and timings."""
    stage = "prepare"
    try:
        prep = pipeline.prepare(n, cfg)
        timings = dict(prep.timings)
        diag = dict(prep.diagnostics)
        density = pipeline.fixed_density(cfg)
        diag["orbital_atoms"] = pipeline.orbital_atoms(prep, density)
        files = {}
        t0 = time.perf_counter()
        if kind == "bound-states":
            stage = "levels"
            files[f"levels_n{n}.csv"] = _levels_csv(prep, density)
        elif kind == "spectrum":
            stage = mode
            fn = pipeline.MODES[mode]
            res = fn(prep, cfg, workers=workers) if mode == "trap" else fn(prep, cfg)
            spec = res.spectrum.normalized(cfg["output"]["normalization"])
            files[f"spectrum_{mode}_n{n}.csv"] = spectrum_to_csv(spec)
            diag.update(res.diagnostics)
            if res.lines is not None:
                files[f"lines_{mode}_n{n}.csv"] = _lines_csv(res.lines, cfg["fewbody"]["line_floor"])
            if "overlap" in res.extra and cfg["fda"]["dump_overlap"]:
                files[f"overlap_n{n}.csv"] = _overlap_csv(res.extra["overlap"])
            if "shells" in res.extra:
                files[f"shells_n{n}.csv"] = _shells_csv(res.extra["shells"])
        elif kind == "sweep":
            stage = "width"
            row = pipeline.width_row(prep, cfg)
            timings[stage] = time.perf_counter() - t0
            return {"n": n, "row": row, "diagnostics": diag, "timings": timings, "files": {}}
        timings[stage] = time.perf_counter() - t0
        return {"n": n, "files": files, "diagnostics": diag, "timings": timings}
    except (ConvergenceError, SpectrumError, ValueError, RuntimeError, ArithmeticError) as exc:
        err = StageError(stage, n, exc)
        return {"n": n, "error": str(err), "code": err.code,
                "traceback": traceback.format_exc(limit=3)}


def _map(tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [_task(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
        futures = [pool.submit(_task, *t) for t in tasks]
        return [f.result() for f in futures]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    return 1


def run(kind: str, cfg: RunConfig, out: Path, threads: int, mode: str | None = None) -> int:
    out.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    n_list = cfg["rydberg"]["n_list"]
    # trap shells get the worker budget when there is a single n
    inner = threads if len(n_list) == 1 else 1
    results = _map([(kind, n, cfg, mode, inner) for n in n_list], threads)

    manifest = {"command": kind, "mode": mode, "version": _version(),
                "config": cfg.echo(), "threads": threads, "runs": [], "outputs": []}
    code = EXIT_OK
    written = []
    for res in results:
        entry = {"n": res["n"]}
        if "error" in res:
            entry["error"] = res["error"]
            print(f"error: {res['error']}", file=sys.stderr)
            if kind != "sweep":
                code = max(code, res["code"])
        else:
            entry["diagnostics"] = res["diagnostics"]
            entry["wall_time_s"] = res["timings"]
            for name, text in res["files"].items():
                path = out / name
                path.write_text(text)
                written.append(path)
        manifest["runs"].append(entry)

    if kind == "sweep":
        rows = [r["row"] for r in results if "row" in r]
        lines = ["n,effective_n,delta_hz,sigma_hz"]
        lines += [f"{r.n},{r.effective_n:.17g},{r.delta_hz:.17g},{r.sigma_hz:.17g}" for r in rows]
        path = out / "widths.csv"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
        if len(rows) >= 2:
            manifest["width_exponent"] = power_law_exponent(
                [r.effective_n for r in rows], [r.sigma_hz for r in rows])
        if not rows:
            code = EXIT_FAIL

    manifest["outputs"] = [{"file": p.name, "sha256": _sha256(p)} for p in written]
    manifest["wall_time_s"] = time.perf_counter() - t_start
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_jsonable) + "\n")
    return code


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rydpolaron",
                                 description="Rydberg impurity spectra in a Bose gas")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="sectioned key = value run file (defaults if omitted)")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--threads", type=int, help=f"worker count (else ${THREADS_ENV}, else 1)")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("bound-states", parents=[common], help="molecular levels and overlaps")
    sp = sub.add_parser("spectrum", parents=[common], help="one spectrum per n")
    sp.add_argument("--mode", choices=sorted(pipeline.MODES), default="fda")
    sub.add_parser("sweep", parents=[common], help="fixed-density widths across n_list")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        threads = _threads(args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg["output"]["directory"])
    return run(args.command, cfg, out, threads, getattr(args, "mode", None))


if __name__ == "__main__":
    sys.exit(main())
