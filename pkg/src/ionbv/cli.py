"""Command-line entry point: ``ionbv compile | run | report``.

A run is described by one YAML config file::

    device: 3                  # 2 or 3 (packaged chain) or a device file path
    noise: calibrated          # preset name, or a mapping of overrides
    experiment:
      kind: bv                 # bv | rb | phase-sweep | ms-motional | thermal-scan | parity
      n: 2
    shots: 10000
    seed: 7
    out: results/bv2

Results are comma-separated tables whose last column is the config hash,
plus ``manifest.yaml`` echoing the resolved config.

Exit codes: 0 success, 2 config error, 3 simulation or compile failure,
4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import Histogram, classical_baseline, data_distribution, mutual_information, \
    success_probability
from .compiler import CompileError, compile_bv, duration
from .decompose import DecompositionError
from .device import default_device, load_device
from .experiments import (RbConfig, _preset_data, bell_experiment, bv_suite, ms_motional_study,
                          noise_from_dict, phase_sweep, preset, preset_names, run_bv, run_rb,
                          thermal_scan, thermal_thresholds)
from .program import dumps, dumps_transport
from .simulator import SimulationError
from .yamlio import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_SIM, EXIT_IO = 0, 2, 3, 4

EXPERIMENTS = {
    "bv": {"n", "secrets"},
    "rb": {"sequence_count", "cliffords_per_ion"},
    "phase-sweep": {"freqs_khz", "depth", "sequence_count", "cliffords_per_ion"},
    "ms-motional": {"fock_dim", "lamb_dicke_order"},
    "thermal-scan": {"ion_counts", "nbar", "target"},
    "parity": {"pair", "ion_count"},
}
TOP_KEYS = {"device", "noise", "experiment", "shots", "seed", "out"}


class ReportError(Exception):
    pass


# ----------------------------------------------------------------------------
# config
# ----------------------------------------------------------------------------

def load_config(path, overrides=None) -> dict:
    """Read and validate a run config; ``overrides`` come from CLI flags."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cfg = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", source=str(path)) from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping", source=str(path))
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = v
    return validate_config(cfg, source=str(path))


def validate_config(cfg: dict, source=None) -> dict:
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", source=source)
    exp = cfg.get("experiment")
    if not isinstance(exp, dict) or "kind" not in exp:
        raise ConfigError("experiment block with a 'kind' is required", source=source)
    kind = exp["kind"]
    if kind not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {kind!r}; choose from {sorted(EXPERIMENTS)}",
                          source=source)
    bad = set(exp) - EXPERIMENTS[kind] - {"kind"}
    if bad:
        raise ConfigError(f"unknown keys for {kind}: {sorted(bad)}", source=source)
    out = dict(cfg)
    out["seed"] = _as_int(cfg.get("seed", 0), "seed", source)
    out["shots"] = _as_int(cfg.get("shots", 0), "shots", source)
    if out["shots"] < 0:
        raise ConfigError("shots must be non-negative", source=source)
    out.setdefault("noise", "noiseless")
    out.setdefault("out", "results")
    resolve_noise(out["noise"])            # fail early on bad presets
    if kind == "bv":
        n = exp.get("n")
        if n not in (1, 2):
            raise ConfigError("bv needs n = 1 or 2", source=source)
        secrets = exp.get("secrets", "all")
        if secrets != "all":
            if not isinstance(secrets, list) or not all(
                    isinstance(s, str) and len(s) == n and set(s) <= {"0", "1"} for s in secrets):
                raise ConfigError(f"secrets must be 'all' or a list of {n}-bit strings",
                                  source=source)
    return out


def _as_int(v, name, source):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name} must be an integer", source=source)
    return v


def resolve_noise(spec):
    """Preset name, or a mapping with an optional ``preset`` base plus overrides."""
    if spec is None:
        spec = "noiseless"
    if isinstance(spec, str):
        try:
            return preset(spec)
        except KeyError as exc:
            raise ConfigError(str(exc).strip('"')) from None
    if not isinstance(spec, dict):
        raise ConfigError("noise must be a preset name or a mapping")
    spec = dict(spec)
    base = spec.pop("preset", None)
    merged = {}
    if base is not None:
        if base not in _preset_data():
            raise ConfigError(f"unknown noise preset {base!r}; choose from {preset_names()}")
        merged.update(_preset_data()[base] or {})
    merged.update(spec)
    try:
        return noise_from_dict(merged)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"noise: {exc}") from None


def resolve_device(spec, ion_count):
    if spec is None or spec == ion_count:
        return default_device(ion_count)
    if isinstance(spec, int):
        raise ConfigError(f"experiment needs a {ion_count}-ion device, config says {spec}")
    dev = load_device(spec)
    if dev.ion_count != ion_count:
        raise ConfigError(f"device {spec} has {dev.ion_count} ions, experiment needs {ion_count}")
    return dev


def config_hash(cfg: dict) -> str:
    """Hash of the resolved config; the output directory is not part of it."""
    body = {k: v for k, v in cfg.items() if k != "out"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ----------------------------------------------------------------------------
# output helpers
# ----------------------------------------------------------------------------

def _num(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def table(header, rows, chash) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header) + ["config_hash"])
    for r in rows:
        w.writerow([_num(x) for x in r] + [chash])
    return buf.getvalue()


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(out: Path, cfg, chash, files, elapsed):
    manifest = {
        "config": cfg,
        "config_hash": chash,
        "seed": cfg["seed"],
        "versions": {"ionbv": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "files": sorted(files),
        "timing": {"wall_seconds": round(elapsed, 3)},
    }
    write_atomic(out / "manifest.yaml", yaml.safe_dump(manifest, sort_keys=True))


# ----------------------------------------------------------------------------
# compile
# ----------------------------------------------------------------------------

def _secrets(cfg):
    exp = cfg["experiment"]
    n = exp["n"]
    s = exp.get("secrets", "all")
    return [format(k, f"0{n}b") for k in range(2 ** n)] if s == "all" else list(s)


def cmd_compile(cfg) -> dict:
    if cfg["experiment"]["kind"] != "bv":
        raise ConfigError("compile needs a bv experiment block")
    n = cfg["experiment"]["n"]
    device = resolve_device(cfg.get("device"), n + 1)
    noise = resolve_noise(cfg["noise"])
    chash = config_hash(cfg)
    out = Path(cfg["out"])
    files, rows = {}, []
    for s in _secrets(cfg):
        try:
            prog = compile_bv(s, device, account_light_shifts=noise.light_shifts_enabled)
        except (CompileError, DecompositionError) as exc:
            raise CompileError(f"s={s}: {exc}") from exc
        files[f"program_s{s}.txt"] = dumps(prog)
        files[f"transport_s{s}.txt"] = dumps_transport(prog)
        d = duration(prog, device.timing)
        rows.append([s, prog.pb1_count, prog.ms_count, prog.transport_count, d.pulses, d.ms,
                     d.transport, d.overhead, d.total])
    files["counts.csv"] = table(["s", "pb1", "ms", "transports", "pulse_us", "ms_us",
                                 "transport_us", "overhead_us", "total_us"], rows, chash)
    for name, text in files.items():
        write_atomic(out / name, text)
    return {"files": list(files), "hash": chash, "rows": rows}


# ----------------------------------------------------------------------------
# run
# ----------------------------------------------------------------------------

def _run_bv(cfg, noise, chash, jobs):
    n = cfg["experiment"]["n"]
    device = resolve_device(cfg.get("device"), n + 1)
    secrets = _secrets(cfg)
    if len(secrets) == 2 ** n:
        results, _ = bv_suite(n, noise, cfg["shots"], cfg["seed"], device, jobs)
    else:
        results = {s: run_bv(n, s, noise, cfg["shots"], cfg["seed"] + i, device)
                   for i, s in enumerate(secrets)}
    anc = device.chain.ancilla_index
    rows = []
    for s in secrets:
        h = results[s].histogram
        probs = h.probabilities()
        for b in sorted(probs):
            rows.append([s, b, h.counts.get(b, 0) if cfg["shots"] else "", probs[b], n, anc])
    return {"bv_histograms.csv": table(["s", "outcome", "count", "probability", "n",
                                        "ancilla"], rows, chash)}


def _rb_config(exp, seed):
    return RbConfig(int(exp.get("sequence_count", 50)), int(exp.get("cliffords_per_ion", 15)),
                    seed)


def _run_rb(cfg, noise, chash, jobs):
    exp = cfg["experiment"]
    device = resolve_device(cfg.get("device"), 2)
    r = run_rb(_rb_config(exp, cfg["seed"]), noise, device)
    rows = [[i, r["survival"][i], r["fidelity"][i]] for i in range(len(r["fidelity"]))]
    return {"rb.csv": table(["ion", "survival", "fidelity"], rows, chash)}


def _run_sweep(cfg, noise, chash, jobs):
    exp = cfg["experiment"]
    freqs = exp.get("freqs_khz", [1, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100])
    rows = phase_sweep([1e3 * float(f) for f in freqs], _rb_config(exp, cfg["seed"]),
                       float(exp.get("depth", 0.02)), jobs)
    return {"phase_sweep.csv": table(["freq_hz", "fidelity_ion0", "fidelity_ion1"],
                                     [[r["freq_hz"], r["fidelity_ion0"], r["fidelity_ion1"]]
                                      for r in rows], chash)}


def _run_motional(cfg, noise, chash, jobs):
    exp = cfg["experiment"]
    r = ms_motional_study(int(exp.get("fock_dim", 12)), int(exp.get("lamb_dicke_order", 3)))
    return {"ms_motional.csv": table(["quantity", "value"], sorted(r.items()), chash)}


def _run_thermal(cfg, noise, chash, jobs):
    exp = cfg["experiment"]
    nb = exp.get("nbar", {"start": 0.0, "stop": 12.0, "num": 25})
    grid = np.linspace(nb["start"], nb["stop"], int(nb["num"])) if isinstance(nb, dict) else nb
    rows = []
    for n in exp.get("ion_counts", [2, 3]):
        rows += [[n, r["nbar"], r["infidelity"]] for r in thermal_scan(int(n), grid)]
    th = thermal_thresholds(float(exp.get("target", 1e-4)))
    return {"thermal_scan.csv": table(["ion_count", "nbar", "infidelity"], rows, chash),
            "thermal_thresholds.csv": table(["ion_count", "nbar_threshold"],
                                            sorted(th.items()), chash)}


def _run_parity(cfg, noise, chash, jobs):
    exp = cfg["experiment"]
    pair = tuple(int(i) for i in exp.get("pair", [0, 1]))
    ions = int(exp.get("ion_count", 2))
    r = bell_experiment(pair, ions, noise, cfg["seed"])
    rows = [[f"P{k}", v] for k, v in sorted(r["populations"].items())]
    rows += [["parity_contrast", r["parity_contrast"]], ["bell_fidelity", r["bell_fidelity"]]]
    if "p1" in r:
        rows.append(["p1", r["p1"]])
    return {"parity.csv": table(["quantity", "value"], rows, chash)}


RUNNERS = {"bv": _run_bv, "rb": _run_rb, "phase-sweep": _run_sweep,
           "ms-motional": _run_motional, "thermal-scan": _run_thermal, "parity": _run_parity}


def cmd_run(cfg, jobs=1) -> dict:
    t0 = time.perf_counter()
    noise = resolve_noise(cfg["noise"])
    chash = config_hash(cfg)
    out = Path(cfg["out"])
    files = RUNNERS[cfg["experiment"]["kind"]](cfg, noise, chash, jobs)
    for name in sorted(files):
        write_atomic(out / name, files[name])
    write_manifest(out, cfg, chash, files, time.perf_counter() - t0)
    return {"files": sorted(files), "hash": chash}


# ----------------------------------------------------------------------------
# report
# ----------------------------------------------------------------------------

def _read_tables(folder: Path):
    if not folder.is_dir():
        raise ReportError(f"no results: {folder} is not a directory")
    tables = {}
    for p in sorted(folder.glob("*.csv")):
        try:
            with p.open(newline="") as fh:
                rows = list(csv.DictReader(fh))
        except (OSError, csv.Error, UnicodeDecodeError) as exc:
            raise ReportError(f"corrupt results file {p.name}: {exc}") from exc
        if rows and "config_hash" not in rows[0]:
            raise ReportError(f"corrupt results file {p.name}: no config_hash column")
        tables[p.name] = rows
    if not any(tables.values()):
        raise ReportError(f"no results in {folder}")
    return tables


def bv_report(rows) -> dict:
    """Metrics from ``bv_histograms.csv`` rows."""
    by_s = {}
    for r in rows:
        by_s.setdefault(r["s"], []).append(r)
    if not by_s:
        raise ReportError("bv_histograms.csv has no rows")
    n = int(rows[0]["n"])
    anc = int(rows[0]["ancilla"])
    hist, success = {}, {}
    for s, rs in sorted(by_s.items()):
        probs = {r["outcome"]: float(r["probability"]) for r in rs}
        h = Histogram.from_probabilities(probs, n, anc)
        hist[s] = h
        success[s] = success_probability(h, s)
    mean = float(np.mean(list(success.values())))
    mi = mutual_information({s: data_distribution(h) for s, h in hist.items()})
    return {"n": n, "success": success, "mean_success": mean, "mutual_information": mi,
            "classical_baseline": classical_baseline(n)}


def cmd_report(folder, allow_mixed=False) -> tuple:
    tables = _read_tables(Path(folder))
    hashes = sorted({r["config_hash"] for rows in tables.values() for r in rows})
    if len(hashes) > 1 and not allow_mixed:
        raise ReportError(f"results mix config hashes {hashes}; pass --allow-mixed to combine")
    text, rows = [], []
    if "bv_histograms.csv" in tables:
        m = bv_report(tables["bv_histograms.csv"])
        text.append(f"Bernstein-Vazirani, n = {m['n']}")
        for s, p in m["success"].items():
            text.append(f"  success s={s}: {p:.4f}")
            rows.append(["success", s, f"{p:.4f}"])
        text.append(f"  mean success: {m['mean_success']:.4f}")
        text.append(f"  classical baseline: {m['classical_baseline']:.4f}")
        text.append(f"  mutual information: {m['mutual_information']:.3f} bits")
        rows += [["mean_success", "", f"{m['mean_success']:.4f}"],
                 ["classical_baseline", "", f"{m['classical_baseline']:.4f}"],
                 ["mutual_information_bits", "", f"{m['mutual_information']:.3f}"]]
    for name, trs in tables.items():
        if name == "bv_histograms.csv" or not trs:
            continue
        text.append(name)
        cols = [c for c in trs[0] if c != "config_hash"]
        text.append("  " + "  ".join(cols))
        for r in trs:
            text.append("  " + "  ".join(r[c] for c in cols))
            rows.append([name] + [r[c] for c in cols])
    text.append(f"config hash: {', '.join(hashes)}")
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows([["metric", "key", "value"]] + rows)
    return "\n".join(text) + "\n", buf.getvalue()


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="ionbv", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("compile", "compile BV programs and summarise counts"),
                        ("run", "run the configured experiment")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="run config (YAML)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--preset", help="override the noise preset")
        p.add_argument("--jobs", type=int, default=1, help="parallel tasks for sweeps")
    p = sub.add_parser("report", help="summarise a results directory")
    p.add_argument("results", help="results directory")
    p.add_argument("--allow-mixed", action="store_true",
                   help="aggregate files written under different configs")
    p.add_argument("--csv", action="store_true", help="print the delimited table instead")
    return ap


def _fail(kind, msg, code):
    print(f"ionbv: error[{kind}]: {msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            text, delimited = cmd_report(args.results, args.allow_mixed)
            sys.stdout.write(delimited if args.csv else text)
            return EXIT_OK
        cfg = load_config(args.config, {"seed": args.seed, "out": args.out,
                                        "noise": args.preset})
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        if args.command == "compile":
            res = cmd_compile(cfg)
            for s, pb1, ms, tr, *_, total in res["rows"]:
                print(f"s={s}: {pb1} PB1, {ms} MS, {tr} transports, {total / 1000:.3f} ms")
        else:
            res = cmd_run(cfg, args.jobs)
            print(f"wrote {', '.join(res['files'])} to {cfg['out']} (config {res['hash']})")
        return EXIT_OK
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except ReportError as exc:
        return _fail("results", exc, EXIT_IO)
    except (SimulationError, CompileError, DecompositionError, AssertionError) as exc:
        return _fail("simulation", exc, EXIT_SIM)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
