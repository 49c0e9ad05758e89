"""Command-line front end.

    qchopper envelope -c run.yaml --set scatter.beta=5
    qchopper g2-map -c fig3.yaml --output out/fig3 --force

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 comparison failure. ``QCHOPPER_OUTPUT_DIR`` overrides ``output.directory``.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import __version__
from . import io
from .circuit import CircuitParams, PumpWaveform, model_params, validity_report
from .coherence import coherence_map, default_tau_d_max
from .config import COMMANDS, ConfigError, RunConfig, load_config
from .envelope import ScatterParams, envelope_grid, find_nodes
from .errors import ChopperError, CircuitError, ProtocolError, ZeroCouplingError
from .floquet_matrix import (MAX_DENSE_CUTOFF, dressed_green, single_photon_sidebands,
                             sideband_unitarity)
from .oracle import default_lattice, run_single_photon, single_photon_envelope
from .protocol import (make_constant, make_custom, make_on_off, make_sign_change,
                       rate_spectrum)

log = logging.getLogger("qchopper")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_COMPARE = 0, 2, 3, 4
OUTPUT_ENV = "QCHOPPER_OUTPUT_DIR"


class NumericalFailure(RuntimeError):
    pass


# -- resolution ---------------------------------------------------------------

def build_protocol(cfg: RunConfig, omega: float):
    kind, g0 = cfg["protocol.kind"], cfg["protocol.g0"]
    if kind == "on_off":
        return make_on_off(g0, omega)
    if kind == "sign_change":
        return make_sign_change(g0, omega)
    if kind == "constant":
        return make_constant(g0, omega)
    return make_custom(cfg["protocol.harmonics"], omega)


def resolve_scatter(cfg: RunConfig) -> ScatterParams:
    """ScatterParams in absolute rates from the protocol and scatter blocks."""
    gamma0 = rate_spectrum(build_protocol(cfg, 1.0)).gamma0
    absolute = cfg["scatter.units"] == "absolute"
    unit = 1.0 if absolute or gamma0 == 0 else gamma0
    omega = cfg["scatter.omega"]
    omega = omega * unit if omega is not None else cfg["scatter.beta"] * gamma0
    if not omega > 0:
        raise ConfigError("drive frequency resolves to a non-positive value (zero coupling?)")
    return ScatterParams(build_protocol(cfg, omega), cfg["scatter.delta"] * unit,
                         cfg["scatter.kerr"] * unit)


def _time_unit(cfg: RunConfig, sp: ScatterParams) -> float:
    return 1.0 if cfg["scatter.units"] == "absolute" else 1.0 / sp.gamma0


def resolve_circuit(cfg: RunConfig) -> CircuitParams:
    c = cfg["circuit"]
    pump = c["pump"]
    maker = PumpWaveform.on_off if pump["kind"] == "on_off" else PumpWaveform.cosine
    wave = maker(pump["amplitude"], pump["omega"])
    omega0 = c["omega0"]
    if omega0 is None:
        # resonant carrier by default
        omega0 = math.sqrt(8 * c["EJ"] * c["EC"]) / c["hbar"]
    return CircuitParams(EJp=c["EJp"], La=c["La"], Lb=c["Lb"], EJ=c["EJ"], EC=c["EC"],
                         f_k0=c["f_k0"], Ip=wave, omega0=omega0, Phi=c["Phi"],
                         hbar=c["hbar"], phi0=c["phi0"], v=c["v"])


# -- commands: each returns {filename: (format, payload)} ----------------------

def _finite(name: str, *arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalFailure(f"{name}: non-finite values in the result")


def _meta(cfg: RunConfig, extra: dict) -> dict:
    return {"tool": "qchopper", "version": __version__, "command": cfg.command,
            "config": cfg.to_dict(), "result": extra}


def cmd_envelope(cfg: RunConfig, suffix: str) -> dict:
    sp = resolve_scatter(cfg)
    grid = envelope_grid(sp, cfg["grid.n_samples"], tol=cfg["numeric.tol"])
    _finite("envelope", grid.A)
    nodes = find_nodes(grid) if sp.protocol.kind != "constant" else []
    extra = {**grid.metadata(), "nodes": nodes, "omega_nodes_over_pi": [sp.omega * x / math.pi for x in nodes]}
    return {f"envelope{suffix}.csv": ("csv", io.envelope_table(grid)),
            f"envelope{suffix}.json": ("json", _meta(cfg, extra))}


def cmd_g2_map(cfg: RunConfig, suffix: str) -> dict:
    sp = resolve_scatter(cfg)
    td_max = cfg["grid.tau_d_max"]
    td_max = default_tau_d_max(sp) if td_max is None else td_max * _time_unit(cfg, sp)
    cmap = coherence_map(sp, cfg["grid.n_tau_c"], cfg["grid.n_tau_d"], td_max,
                         floor=cfg["numeric.node_floor"], tol=cfg["numeric.tol"])
    _finite("g2-map", cmap.B, cmap.g2_ll[~cmap.node_mask_ll], cmap.g2_rr[~cmap.node_mask_rr])
    extra = {**cmap.metadata(), "flagged_ll": int(cmap.node_mask_ll.sum()),
             "flagged_rr": int(cmap.node_mask_rr.sum())}
    return {f"coherence{suffix}.csv": ("csv", io.coherence_table(cmap)),
            f"coherence{suffix}.json": ("json", _meta(cfg, extra))}


def cmd_sidebands(cfg: RunConfig, suffix: str) -> dict:
    sp = resolve_scatter(cfg)
    M = cfg["numeric.cutoff"]
    sb = single_photon_sidebands(sp, M, solver=cfg["numeric.solver"])
    _finite("sidebands", sb.r)
    extra = {**sp.to_dict(), "cutoff": M, "solver": cfg["numeric.solver"],
             "unitarity_defect": sideband_unitarity(sb)}
    out = {f"sidebands{suffix}.csv": ("csv", io.sideband_table(sb)),
           f"sidebands{suffix}.json": ("json", _meta(cfg, extra))}
    if "bin" in cfg["output.formats"]:
        if M > MAX_DENSE_CUTOFF:
            raise ConfigError(f"binary Green's block dump needs cutoff <= {MAX_DENSE_CUTOFF}")
        block = dressed_green(sp, M)
        out[f"green{suffix}.bin"] = ("bin", (block.entries, {
            "cutoff": M, "omega": sp.omega, "delta": sp.delta, "row_index": "m + cutoff"}))
    return out


def _dev(a, b) -> tuple[float, float]:
    d = np.abs(np.asarray(a) - np.asarray(b))
    return float(np.max(d)), float(np.sqrt(np.mean(d**2)))


def cmd_compare(cfg: RunConfig, suffix: str) -> dict:
    """Envelope, sideband and lattice paths against each other (or the closed form)."""
    sp = resolve_scatter(cfg)
    ctl = cfg["numeric.compare"]
    tol_a, tol_o = ctl["analytic_tol"], ctl["oracle_tol"]
    grid = envelope_grid(sp, ctl["n_samples"], tol=cfg["numeric.tol"])
    M = cfg["numeric.cutoff"]
    sb = single_photon_sidebands(sp, M, solver=cfg["numeric.solver"])
    sb2 = single_photon_sidebands(sp, 2 * M, solver=cfg["numeric.solver"])
    recon = sb.reconstruct(grid.tau_c, sp.omega)
    cutoff_change = float(np.max(np.abs(sb2.reconstruct(grid.tau_c, sp.omega) - recon)))
    rows = []

    def add(paths, ref, val, tol, note=""):
        sup, l2 = _dev(ref, val)
        rows.append({"paths": paths, "sup": sup, "l2": l2, "tol": tol,
                     "pass": bool(sup <= tol), "note": note})

    constant = sp.protocol.kind == "constant"
    exact = -1j * sp.gamma0 / (sp.delta + 1j * sp.gamma0) if constant else None
    if constant:
        add("envelope-analytic", exact, grid.A, tol_a)
        add("sideband-analytic", exact, recon, tol_a)
    add("envelope-sideband", grid.A, recon, tol_a,
        note=f"cutoff M={M}; doubling M changes the reconstruction by {cutoff_change:.3e}")
    files = {}
    if ctl["oracle"]:
        lat = cfg["numeric.lattice"]
        lc = default_lattice(sp, n_sites=lat["n_sites"], refine=lat["refine"],
                             steps_per_site=lat["steps_per_site"])
        run = run_single_photon(sp, lc)
        m = run.window_mask()
        te, Ao = run.emission_time[m], run.reflected[m]
        ref = exact if constant else grid.evaluate(te)
        add("oracle-" + ("analytic" if constant else "envelope"), np.abs(ref) * np.ones(te.size),
            np.abs(Ao), tol_o, note=f"norm drift {run.norm_drift:.3e}, {lc.n_sites} sites")
        add("oracle-sideband", np.abs(sb.reconstruct(te, sp.omega)), np.abs(Ao), tol_o)
        fe = single_photon_envelope(run, lat["n_bins"])
        files[f"oracle_series{suffix}.csv"] = ("csv", io.series_table(run))
        files[f"oracle_folded{suffix}.csv"] = ("csv", io.folded_table(fe))
    report = {"comparisons": rows, "pass": all(r["pass"] for r in rows),
              "cutoff_change": cutoff_change, "params": sp.to_dict()}
    files[f"compare{suffix}.json"] = ("json", _meta(cfg, report))
    return files


def cmd_circuit(cfg: RunConfig, suffix: str) -> dict:
    cp = resolve_circuit(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        mp = model_params(cp)
    sp = mp.scatter_params()
    gamma0 = rate_spectrum(sp.protocol).gamma0
    ratios = {"Gamma0": gamma0}
    if gamma0 > 0:
        ratios.update(beta=sp.omega / gamma0, delta_over_gamma0=sp.delta / gamma0,
                      U_over_gamma0=sp.kerr / gamma0, g0_over_sqrt_gamma0=mp.g0 / math.sqrt(gamma0))
    checks = [vars(c) for c in validity_report(cp, mp, sp)]
    extra = {"model": mp.to_dict(), "ratios": ratios, "validity": checks,
             "warnings": [str(w.message) for w in caught]}
    return {f"model{suffix}.json": ("json", _meta(cfg, extra))}


HANDLERS = {
    "envelope": cmd_envelope,
    "g2-map": cmd_g2_map,
    "sidebands": cmd_sidebands,
    "oracle-compare": cmd_compare,
    "circuit-map": cmd_circuit,
}


# -- orchestration ------------------------------------------------------------

def _suffix(key: Optional[str], value) -> str:
    if key is None:
        return ""
    leaf = key.rsplit(".", 1)[-1]
    text = f"{value:g}" if isinstance(value, (int, float)) else str(value)
    return f"_{leaf}{text}"


def _points(cfg: RunConfig) -> list[tuple[RunConfig, str]]:
    key = cfg["scan.key"]
    if key is None:
        return [(cfg, "")]
    return [(cfg.with_value(key, v), _suffix(key, v)) for v in cfg["scan.values"]]


def _compute(args):
    cfg, suffix = args
    return HANDLERS[cfg.command](cfg, suffix)


def output_dir(cfg: RunConfig, cli_dir: Optional[str]) -> Path:
    if cli_dir:
        return Path(cli_dir)
    return Path(os.environ.get(OUTPUT_ENV) or cfg["output.directory"])


def _write(directory: Path, name: str, fmt: str, payload) -> None:
    path = directory / name
    if fmt == "csv":
        io.write_csv(path, payload)
    elif fmt == "json":
        io.write_json(path, payload)
    else:
        arr, meta = payload
        io.write_block(path, arr, **meta)


def execute(cfg: RunConfig, directory: Path, force: bool = False) -> int:
    """Run the configured command; returns the process exit code."""
    points = _points(cfg)
    for name in ("config.yaml", "run.json"):
        if (directory / name).exists() and not force:
            raise ConfigError(f"{directory / name} exists; pass --force to overwrite")
    workers = min(cfg["scan.workers"], len(points))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_compute, points))
    else:
        results = [_compute(p) for p in points]
    formats = set(cfg["output.formats"])
    planned = [(n, f, p) for res in results for n, (f, p) in res.items()
               if f in formats or n.startswith("compare")]
    clash = [n for n, _, _ in planned if (directory / n).exists()]
    if clash and not force:
        raise ConfigError(f"{directory} already holds {clash[0]}; pass --force to overwrite")
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "config.yaml").write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))
    io.write_json(directory / "run.json", {"tool": "qchopper", "version": __version__,
                                           "command": cfg.command,
                                           "files": [n for n, _, _ in planned]})
    for name, fmt, payload in planned:
        _write(directory, name, fmt, payload)
        log.info("wrote %s", directory / name)
    if cfg.command == "oracle-compare":
        failed = [row for res in results for n, (_, p) in res.items() if n.startswith("compare")
                  for row in p["result"]["comparisons"] if not row["pass"]]
        for row in failed:
            print(f"FAIL {row['paths']}: sup {row['sup']:.3e} > {row['tol']:.1e}. {row['note']}",
                  file=sys.stderr)
        if failed:
            return EXIT_COMPARE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qchopper", description=__doc__.split("\n\n")[0])
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="what to compute (default: the config's 'command' field)")
    p.add_argument("-c", "--config", help="YAML run configuration")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field by dotted path, e.g. scatter.beta=5")
    p.add_argument("-o", "--output", help=f"output directory (beats ${OUTPUT_ENV} and the config)")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.add_argument("--workers", type=int, help="worker processes for scans")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = list(args.overrides)
    if args.workers is not None:
        overrides.append(f"scan.workers={args.workers}")
    try:
        cfg = load_config(args.config, tuple(overrides), args.command)
        force = args.force or cfg["output.force"]
        return execute(cfg, output_dir(cfg, args.output), force=force)
    except (ConfigError, ProtocolError, CircuitError, ZeroCouplingError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ChopperError, ArithmeticError, NumericalFailure) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
