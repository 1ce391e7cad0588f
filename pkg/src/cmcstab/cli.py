"""Command line front end: ``cmcstab {spectrum,verify,sweep}``.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 verification failure (bound violation or insufficient convergence order),
5 sweep job failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import itertools
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds as bnd
from . import families as fam
from .config import CONVENTION, load_config, parse_config
from .errors import (
    CmcStabError,
    ConfigError,
    IndefiniteFirstEigenfunction,
    InvalidSpace,
    SolverNoConvergence,
    UnsupportedSpace,
)
from .spectrum import is_strongly_stable, lambda1_identity_residual, solve
from .surface import build_mesh, write_off, write_sidecar

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY, EXIT_SWEEP = 0, 2, 3, 4, 5
OUT_ENV = "CMCSTAB_OUT"


def _header(cfg_hash):
    return [f"config_hash={cfg_hash}", f"convention={CONVENTION}"]


def _write_csv(path, header, fieldnames, rows):
    with open(path, "w", newline="") as fh:
        fh.writelines(f"# {h}\n" for h in header)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fieldnames)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _out_dir(args, cfg):
    d = args.out or os.environ.get(OUT_ENV) or cfg.output_dir
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load(args):
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = parse_config({})
    cfg.raw = dict(cfg.raw, _seed=args.seed)
    return cfg


def _err(stage, exc):
    print(f"error [{stage}]: {exc}", file=sys.stderr)


# -- spectrum ----------------------------------------------------------------


def cmd_spectrum(args):
    try:
        cfg = _load(args)
        if cfg.space is None or cfg.surface is None:
            raise ConfigError("spectrum needs [space] and [surface] blocks", "<root>")
        res = cfg.surface.get("resolution")
        if res is None:
            raise ConfigError("spectrum needs a single resolution", "surface.resolution")
        imm = fam.make_immersion(cfg.space, cfg.surface["constructor"], cfg.surface["params"])
        mesh = build_mesh(imm, res)
    except (ConfigError, InvalidSpace, UnsupportedSpace, ValueError, TypeError) as exc:
        _err("config", exc)
        return EXIT_CONFIG
    except CmcStabError as exc:
        _err("mesh", exc)
        return EXIT_CONFIG
    s = cfg.solver
    try:
        _, result = solve(mesh, k=s.k, tol=s.tol, max_iter=s.max_iter, shift_policy=s.shift_policy, seed=args.seed)
    except (SolverNoConvergence, IndefiniteFirstEigenfunction) as exc:
        _err("solver", exc)
        return EXIT_SOLVER
    out = _out_dir(args, cfg)
    summary = {
        "lambda1": result.lambda1,
        "lambda": [float(x) for x in result.eigenvalues],
        "alpha": float(result.alpha),
        "H": mesh.H_mean,
        "area": mesh.area,
        "genus": int(mesh.genus),
        "strongly_stable": is_strongly_stable(result, tol=1e-6),
        "convention": CONVENTION,
    }
    cfg_hash = cfg.hash
    doc = dict(result.to_dict(), summary=summary, config_hash=cfg_hash, surface=imm.name, nv=mesh.nv)
    if mesh.is_cmc:
        doc["identity_residual"] = lambda1_identity_residual(mesh, result)
    (out / "spectrum.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    header = _header(cfg_hash)
    if "off" in cfg.formats:
        write_off(mesh, out / "mesh.off", header=header)
        write_sidecar(mesh, out / "mesh_vertices.csv", extra={"rho": result.rho}, header=header)
    if "csv" in cfg.formats and mesh.is_cmc:
        reports = bnd.verify(mesh, result, cfg.verify.tol_eq, cfg.verify.tol_verify)
        _write_csv(out / "bounds.csv", header, bnd.CSV_FIELDS, bnd.report_rows(reports))
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# -- verify ------------------------------------------------------------------


def _verify_surface(label, imm, ladder, cfg, seed):
    """Solve on every rung of the ladder; returns (bound rows, convergence rows, ok, messages)."""
    vcfg = cfg.verify
    s = cfg.solver
    expected = fam.expected_lambda1(imm)
    hs, lam1, lam2, brows, crows, msgs = [], [], [], [], [], []
    ok = True
    for res in ladder:
        mesh = build_mesh(imm, res)
        _, result = solve(
            mesh,
            k=max(2, s.k),
            tol=s.tol,
            max_iter=s.max_iter,
            shift_policy=s.shift_policy,
            seed=seed,
            potential_offset=vcfg.corrupt_potential,
        )
        reports = bnd.verify(mesh, result, vcfg.tol_eq, vcfg.tol_verify)
        rtag = "x".join(str(r) for r in res)
        for r in reports:
            brows.append((label, rtag) + tuple(bnd.report_rows([r])[0]) + (r.passed,))
            if not r.passed:
                ok = False
                msgs.append(f"{label} {rtag}: {r.theorem_id} violated, margin {r.margin:.6g}")
        for chk in bnd.stability_corollaries(mesh.space, mesh.H_mean, mesh.genus, mesh.area, result.lambda1):
            if chk["applicable"] and not chk["consistent"]:
                ok = False
                msgs.append(f"{label} {rtag}: corollary {chk['corollary']} contradicted")
        hs.append(fam.mesh_size(mesh))
        lam1.append(result.lambda1)
        lam2.append(float(result.eigenvalues[1]))
        crows.append((label, rtag, hs[-1], result.lambda1, expected, float(result.eigenvalues[1])))
    order_ok = True
    orders = {}
    if expected is not None and len(ladder) >= 3:
        o1, exact1 = fam.convergence_order(hs, lam1, exact=expected)
        o2, _ = fam.convergence_order(hs, lam2)
        orders = {"lambda1": o1, "lambda1_exact_to_rounding": exact1, "lambda2_self": o2}
        order_ok = (o1 >= vcfg.min_order) and (o2 >= vcfg.min_order)
        if not order_ok:
            msgs.append(f"{label}: convergence order lambda1={o1:.3g}, lambda2={o2:.3g} below {vcfg.min_order}")
    return brows, crows, orders, ok, order_ok, msgs


def cmd_verify(args):
    try:
        cfg = _load(args)
        jobs = []
        if cfg.surface is not None:
            if cfg.space is None:
                raise ConfigError("a custom surface needs a [space] block", "space")
            imm = fam.make_immersion(cfg.space, cfg.surface["constructor"], cfg.surface["params"])
            ladder = cfg.surface.get("resolutions") or [cfg.surface.get("resolution")]
            if ladder == [None]:
                raise ConfigError("verify needs resolutions", "surface.resolutions")
            jobs.append((cfg.surface["constructor"], imm, ladder))
        names = cfg.verify.families or ([] if jobs else list(fam.DEFAULT_SUITE))
        for name in names:
            if name not in fam.FAMILIES:
                raise ConfigError(f"unknown family {name!r}", "verify.families")
            f = fam.FAMILIES[name]
            jobs.append((name, f.build(), cfg.verify.ladder or f.ladder))
    except (ConfigError, InvalidSpace, UnsupportedSpace, ValueError) as exc:
        _err("config", exc)
        return EXIT_CONFIG
    out = _out_dir(args, cfg)
    all_b, all_c, summary, messages = [], [], {}, []
    bounds_ok = order_ok = True
    for label, imm, ladder in jobs:
        try:
            brows, crows, orders, ok, ook, msgs = _verify_surface(label, imm, ladder, cfg, args.seed)
        except (SolverNoConvergence, IndefiniteFirstEigenfunction) as exc:
            _err(f"solver:{label}", exc)
            return EXIT_SOLVER
        except (ValueError, CmcStabError) as exc:
            _err(f"mesh:{label}", exc)
            return EXIT_CONFIG
        all_b += brows
        all_c += crows
        bounds_ok &= ok
        order_ok &= ook
        messages += msgs
        summary[label] = {"bounds_ok": ok, "order_ok": ook, "orders": orders}
        print(f"{label}: bounds {'PASS' if ok else 'FAIL'}, convergence {'PASS' if ook else 'FAIL'} {orders}")
    header = _header(cfg.hash)
    _write_csv(out / "verify_bounds.csv", header, ("surface", "resolution") + bnd.CSV_FIELDS + ("passed",), all_b)
    _write_csv(
        out / "convergence.csv", header, ("surface", "resolution", "h", "lambda1", "expected", "lambda2"), all_c
    )
    passed = bounds_ok and order_ok
    doc = {"passed": passed, "surfaces": summary, "messages": messages, "config_hash": cfg.hash, "convention": CONVENTION}
    (out / "verify.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    for m in messages:
        print(m)
    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_VERIFY


# -- sweep -------------------------------------------------------------------

SWEEP_FIELDS = (
    "job", "family", "params", "lambda1", "expected", "rel_error", "alpha",
    "T1_1_i", "T1_1_ii", "id_i", "bound_i", "margin_i", "id_ii", "bound_ii", "margin_ii", "min_margin",
)


def _sweep_job(job):
    idx, family, overrides, resolution, solver, seed = job
    try:
        f = fam.FAMILIES[family]
        imm = f.build(**overrides)
        mesh = build_mesh(imm, resolution or f.ladder[-1])
        _, result = solve(mesh, k=solver["k"], tol=solver["tol"], max_iter=solver["max_iter"], seed=seed)
        reports = {r.theorem_id: r for r in bnd.verify(mesh, result)}
        specific = [r for r in reports.values() if not r.theorem_id.startswith(("T1_1", "C1_2"))]
        if not specific:
            specific = [reports.get("C1_2_i") or reports.get("C1_2_ii")] * 2
        exp = fam.expected_lambda1(imm)
        lam = result.lambda1
        rel = abs(lam - exp) / max(1.0, abs(exp)) if exp is not None else float("nan")
        row = (
            idx, family, json.dumps(overrides, sort_keys=True), lam, exp, rel, result.alpha,
            reports["T1_1_i"].margin, reports["T1_1_ii"].margin,
            specific[0].theorem_id, specific[0].bound_value, specific[0].margin,
            specific[-1].theorem_id, specific[-1].bound_value, specific[-1].margin,
            min(r.margin for r in reports.values() if not r.prediction),
        )
        return idx, row, None
    except Exception as exc:  # job failures are collected, not raised
        return idx, None, f"{type(exc).__name__}: {exc}"


def sweep_jobs(cfg, seed):
    sw = cfg.sweep
    family = sw["family"]
    if family not in fam.FAMILIES:
        raise ConfigError(f"unknown family {family!r}", "sweep.family")
    keys = sorted(sw["ranges"])
    fam.FAMILIES[family].check_overrides(keys)
    grids = [np.linspace(*sw["ranges"][k][:2], sw["ranges"][k][2]) for k in keys]
    combos = list(itertools.product(*grids))
    if len(combos) > sw["max_jobs"]:
        raise ConfigError(f"{len(combos)} jobs exceed max_jobs={sw['max_jobs']}", "sweep.max_jobs")
    solver = {"k": cfg.solver.k, "tol": cfg.solver.tol, "max_iter": cfg.solver.max_iter}
    return [
        (i, family, {k: float(v) for k, v in zip(keys, combo)}, sw["resolution"], solver, seed)
        for i, combo in enumerate(combos)
    ]


def cmd_sweep(args):
    try:
        cfg = _load(args)
        if cfg.sweep is None:
            raise ConfigError("sweep needs a [sweep] block", "sweep")
        jobs = sweep_jobs(cfg, args.seed)
    except (ConfigError, InvalidSpace, ValueError) as exc:
        _err("config", exc)
        return EXIT_CONFIG
    out = _out_dir(args, cfg)
    if args.jobs > 1:
        with cf.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    rows = [r[1] for r in results if r[1] is not None]
    failures = [{"job": r[0], "error": r[2]} for r in results if r[2] is not None]
    header = _header(cfg.hash)
    _write_csv(out / "sweep.csv", header, SWEEP_FIELDS, rows)
    print(f"{len(rows)} jobs ok, {len(failures)} failed -> {out / 'sweep.csv'}")
    if failures:
        (out / "sweep_failures.json").write_text(
            json.dumps({"config_hash": cfg.hash, "failures": failures}, indent=2) + "\n"
        )
        return EXIT_SWEEP
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and the config)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, default=0, help="seed of the eigensolver start block")
    p = argparse.ArgumentParser(prog="cmcstab", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="first eigenvalues of one surface")
    sub.add_parser("verify", parents=[common], help="bound verification over CMC families")
    sub.add_parser("sweep", parents=[common], help="parameter sweep to CSV")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.seed < 0 or args.seed >= 2**64:
        _err("config", "seed must be an unsigned 64-bit integer")
        return EXIT_CONFIG
    if args.jobs < 1:
        _err("config", "--jobs must be >= 1")
        return EXIT_CONFIG
    handler = {"spectrum": cmd_spectrum, "verify": cmd_verify, "sweep": cmd_sweep}[args.command]
    return handler(args)


if __name__ == "__main__":
    raise SystemExit(main())
