"""Command-line front end: wellspec <command> --config file [options].

Commands
--------
threshold     band-edge threshold of the periodic array plus the truncated
              chain's Neumann/Dirichlet bracket
bands         CSV of band energies over the quasimomentum grid
bind          binding energy of the configured perturbation (bs, direct, or both)
map           CSV binding map over a displacement grid of one well
verify        run the convexity / mollifier / shift-identity suites
kernel-table  CSV table of the resolvent kernel, its derivative, and the
              convexity ratio

Exit codes: 0 success, 1 invalid configuration, 2 solver failure,
3 verification failure.  CSV cells carry 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed

import numpy as np

from . import checks
from .bs_solver import BracketError, ConvergenceError, build_grid, solve_ground_state
from .config import ConfigError, RunConfig
from .direct_solver import (DirectNumerics, binding_energy_direct, default_box,
                            ground_energy)
from .floquet import ConfigurationError, ThresholdError, count_gaps, essential_threshold, lowest_band
from .geometry import GeometryError, build_array, shift_well

_EXIT_CONFIG = 1
_EXIT_SOLVER = 2
_EXIT_VERIFY = 3


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return "nan"
    return f"{x:.12g}"


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(c) for c in row) + "\n")


def _emit(out_dir, name, lines):
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out_dir:
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            fh.write(text)


def _bs_threshold_kappa(cfg, profile, grid):
    """Root of the unperturbed chain extended by spare wells: the bs-side threshold."""
    extra = int(cfg["bs.threshold_extra_wells"])
    count = cfg["array.count"] + extra
    if count % 2 == 0:
        count += 1
    chain = build_array(profile, cfg["array.spacing"], count)
    res = solve_ground_state(chain, grid, cfg["bs.kappa_lo"], cfg["bs.kappa_hi"],
                             kappa0=cfg["bs.kappa_lo"], mu_tol=cfg["bs.mu_tol"])
    if res is None:
        raise BracketError("no root for the unperturbed chain inside the kappa bracket")
    return res.kappa_star


def cmd_threshold(cfg: RunConfig, out_dir: str, args) -> int:
    profile = cfg.profile()
    grid = build_grid(profile, cfg["bs.nodes"])
    kappa0, _psi0 = essential_threshold(profile, cfg["array.spacing"], grid,
                                        cfg["floquet.l"], cfg["floquet.h"])
    geo = cfg.geometry(profile).unperturbed()
    num = cfg.direct_numerics()
    e_n = ground_energy(geo, num, "neumann")
    e_d = ground_energy(geo, num, "dirichlet")
    e_f = -kappa0 ** 2
    lines = [
        "threshold report",
        f"  floquet band minimum  E0 = {_fmt(e_f)}   kappa0 = {_fmt(kappa0)}",
        f"  chain neumann ends    E  = {_fmt(e_n)}   kappa  = {_fmt(np.sqrt(-e_n))}",
        f"  chain dirichlet ends  E  = {_fmt(e_d)}   kappa  = {_fmt(np.sqrt(-e_d))}",
        f"  D/N spread (energy)   {_fmt(e_d - e_n)}",
        f"  floquet within bracket: {e_n - 1e-9 <= e_f <= e_d + 1e-9}",
    ]
    _emit(out_dir, "threshold.txt", lines)
    return 0


def cmd_bands(cfg: RunConfig, out_dir: str, args) -> int:
    profile = cfg.profile()
    band = lowest_band(profile, cfg["array.spacing"], cfg.theta_grid(),
                       cfg["floquet.n_bands"], cfg["floquet.l"], cfg["floquet.h"])
    rows = []
    for i, theta in enumerate(band.thetas):
        for b in range(band.n_bands):
            rows.append((theta, b, band.energies[i, b]))
    path = os.path.join(out_dir, "bands.csv")
    _write_csv(path, ["theta", "band_index", "energy"], rows)
    gaps = count_gaps(band)
    _emit(out_dir, "bands.txt", [
        f"bands written to {path}",
        f"  negative-energy gap count: {gaps}",
    ])
    return 0


def cmd_bind(cfg: RunConfig, out_dir: str, args) -> int:
    profile = cfg.profile()
    geo = cfg.geometry(profile)
    if not geo.is_perturbed():
        raise ConfigError("bind needs at least one array.shift entry")
    method = args.method
    lines = [f"bind report ({geo.shift_kind} perturbation)"]
    results = {}
    if method in ("direct", "both"):
        res = binding_energy_direct(geo, cfg.direct_numerics())
        results["direct"] = res
        lines += [
            "  direct grid solver:",
            f"    threshold (neumann ends) = {_fmt(res.threshold_energy)}",
            f"    ground energy            = {_fmt(res.energy)}",
            f"    binding                  = {_fmt(res.binding_energy)}",
            f"    D/N spread               = {_fmt(res.dn_spread)}",
        ]
    if method in ("bs", "both"):
        grid = build_grid(profile, cfg["bs.nodes"])
        kappa0 = _bs_threshold_kappa(cfg, profile, grid)
        res = solve_ground_state(geo, grid, kappa0 * (1.0 + 1e-7), cfg["bs.kappa_hi"],
                                 kappa0=kappa0, mu_tol=cfg["bs.mu_tol"])
        if res is None:
            lines += [
                "  birman-schwinger solver:",
                f"    threshold kappa0 (chain) = {_fmt(kappa0)}",
                "    no bound state in bracket (binding 0)",
            ]
        else:
            results["bs"] = res
            lines += [
                "  birman-schwinger solver:",
                f"    threshold kappa0 (chain) = {_fmt(kappa0)}",
                f"    kappa*                   = {_fmt(res.kappa_star)}",
                f"    ground energy            = {_fmt(res.energy)}",
                f"    binding                  = {_fmt(res.binding_energy)}",
            ]
    if len(results) == 2:
        b_bs = results["bs"].binding_energy
        b_dr = results["direct"].binding_energy
        if b_dr > 0:
            lines.append(f"  method agreement: |bs-direct|/direct = "
                         f"{_fmt(abs(b_bs - b_dr) / b_dr)}")
    _emit(out_dir, "bind.txt", lines)
    return 0


def _map_point(payload):
    """Worker: binding of one displacement; returns a CSV row tuple."""
    (cfg_values, shifts_base, dx, dperp, thr_n, thr_d) = payload
    cfg = RunConfig(values=cfg_values, shifts=list(shifts_base))
    profile = cfg.profile()
    base = cfg.geometry(profile)
    num = DirectNumerics(step=cfg["map.h"], transverse_halfwidth=cfg["map.l"],
                         box=default_box(base), n_eigenvalues=1)
    try:
        geo = shift_well(base, cfg["map.index"], dx, dperp)
    except GeometryError:
        return (dx, dperp, float("nan"), 0, float("nan"))
    e_n = ground_energy(geo, num, "neumann")
    e_d = ground_energy(geo, num, "dirichlet")
    binding = max(0.0, thr_n - e_n)
    spread = abs(thr_d - thr_n) + abs(e_d - e_n)
    # resolved only when the whole Dirichlet/Neumann bracket sits below threshold
    flag = 1 if thr_n - e_d > 0 else 0
    return (dx, dperp, binding, flag, spread)


def cmd_map(cfg: RunConfig, out_dir: str, args) -> int:
    profile = cfg.profile()
    base = cfg.geometry(profile)
    num = DirectNumerics(step=cfg["map.h"], transverse_halfwidth=cfg["map.l"],
                         box=default_box(base), n_eigenvalues=1)
    unpert = base.unperturbed()
    thr_n = ground_energy(unpert, num, "neumann")
    thr_d = ground_energy(unpert, num, "dirichlet")
    dxs = np.linspace(cfg["map.dx_min"], cfg["map.dx_max"], cfg["map.dx_count"])
    dps = np.linspace(cfg["map.dperp_min"], cfg["map.dperp_max"], cfg["map.dperp_count"])
    path = os.path.join(out_dir, "map.csv")
    header = ["dx", "dperp", "binding", "bound_flag", "dn_spread"]
    done = set()
    rows = []
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            next(fh, None)
            for line in fh:
                cells = line.strip().split(",")
                if len(cells) == len(header):
                    rows.append(tuple(float(c) if i != 3 else int(float(c))
                                      for i, c in enumerate(cells)))
                    done.add((cells[0], cells[1]))
    todo = [(dx, dp) for dx in dxs for dp in dps
            if (_fmt(dx), _fmt(dp)) not in done]
    payloads = [(cfg.values, cfg.shifts, dx, dp, thr_n, thr_d) for dx, dp in todo]
    jobs = args.jobs
    with open(path, "a" if rows else "w", encoding="utf-8", newline="") as fh:
        if not rows:
            fh.write(",".join(header) + "\n")
        if jobs > 1 and payloads:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_map_point, p) for p in payloads]
                for fut in as_completed(futures):
                    row = fut.result()
                    rows.append(row)
                    fh.write(",".join(_fmt(c) for c in row) + "\n")
                    fh.flush()
        else:
            for p in payloads:
                row = _map_point(p)
                rows.append(row)
                fh.write(",".join(_fmt(c) for c in row) + "\n")
                fh.flush()
    rows.sort(key=lambda r: (r[0], r[1]))
    _write_csv(path, header, rows)
    _emit(out_dir, "map.txt", [
        f"map written to {path} ({len(rows)} points)",
        f"  bound states found at {sum(1 for r in rows if r[3] == 1)} points",
    ])
    return 0


def cmd_verify(cfg: RunConfig, out_dir: str, args) -> int:
    only = set(args.only.split(",")) if args.only else {"convexity", "mollifier", "shifts"}
    rng = np.random.default_rng(cfg["run.seed"])
    summary = {}
    lines = ["verification report"]
    if "convexity" in only:
        failures = 0
        cases = 0
        for _ in range(200):
            nu = int(rng.choice([2, 3, 4, 5]))
            kappa = float(rng.choice([0.3, 1.0, 3.0]))
            b = float(rng.uniform(0.5, 3.0))
            c = float(rng.uniform(0.0, 1.0)) * b * np.sqrt(nu - 1.0)
            rep = checks.verify_convexity(nu, kappa, b, c)
            cases += 1
            if not rep.passed:
                failures += 1
        summary["convexity"] = bool(failures == 0)
        lines.append(f"  convexity: {cases - failures}/{cases} randomized cases pass")
    if "mollifier" in only:
        defects = {n: checks.mollifier_defect(n, kappa=0.5, a=cfg["array.spacing"])
                   for n in (20, 40, 80)}
        # the raw double sum decays like 1/n; the norm-normalized defect like 1/n^2
        scaled = {n: n * abs(d) for n, d in defects.items()}
        negative = all(d < 0 for d in defects.values())
        smax, smin = max(scaled.values()), min(scaled.values())
        bounded = (smax - smin) / smax <= 0.15
        anti = checks.mollifier_defect(20, kappa=0.5, a=cfg["array.spacing"],
                                       antisymmetrized=True)
        identity_ok = abs(anti - defects[20]) <= 1e-13 * abs(defects[20])
        summary["mollifier"] = bool(negative and bounded and identity_ok)
        lines.append(f"  mollifier: defects negative={negative}, "
                     f"n-scaled variation={(smax - smin) / smax:.3%}, "
                     f"antisymmetrized identity={identity_ok}")
    if "shifts" in only:
        profile = cfg.profile()
        failures = 0
        for _ in range(100):
            count = int(rng.choice([3, 5, 7, 9, 11]))
            half = (count - 1) // 2
            geo = build_array(profile, cfg["array.spacing"], count)
            # move interior wells only: the telescoping identity needs fixed ends
            for _ in range(int(rng.integers(1, 4))):
                idx = int(rng.integers(-half + 1, half)) if half > 1 else 0
                dx = float(rng.uniform(-0.4, 0.4)) * (cfg["array.spacing"] / 2
                                                      - profile.rho)
                dp = float(rng.uniform(-1.0, 1.0))
                try:
                    geo = shift_well(geo, idx, dx, dp)
                except GeometryError:
                    continue
            if not checks.shift_identities(geo).passed:
                failures += 1
        summary["shifts"] = bool(failures == 0)
        lines.append(f"  shift identities: {100 - failures}/100 randomized geometries pass")
    passed = all(summary.values())
    lines.append(f"  overall: {'PASS' if passed else 'FAIL'}")
    _emit(out_dir, "verify.txt", lines)
    with open(os.path.join(out_dir, "verify.json"), "w", encoding="utf-8") as fh:
        json.dump({"passed": passed, "suites": summary}, fh, indent=2)
        fh.write("\n")
    return 0 if passed else _EXIT_VERIFY


def cmd_kernel_table(cfg: RunConfig, out_dir: str, args) -> int:
    from .specialfn import (KernelParams, log_convexity_ratio, resolvent_kernel,
                            resolvent_kernel_deriv)

    p = KernelParams(cfg["kernel.nu"], cfg["kernel.kappa"])
    rs = np.linspace(cfg["kernel.r_min"], cfg["kernel.r_max"], cfg["kernel.count"])
    rows = [(r, resolvent_kernel(p, r), resolvent_kernel_deriv(p, r),
             log_convexity_ratio(p, r)) for r in rs]
    path = os.path.join(out_dir, "kernel_table.csv")
    _write_csv(path, ["r", "resolvent_kernel", "kernel_derivative", "convexity_ratio"],
               rows)
    _emit(out_dir, "kernel_table.txt", [f"kernel table written to {path}"])
    return 0


_COMMANDS = {
    "threshold": cmd_threshold,
    "bands": cmd_bands,
    "bind": cmd_bind,
    "map": cmd_map,
    "verify": cmd_verify,
    "kernel-table": cmd_kernel_table,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wellspec",
                                     description="spectral toolkit for potential-well arrays")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the run configuration")
        p.add_argument("--out", default=".", help="output directory (default: cwd)")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker processes for map scans")
        if name == "bind":
            p.add_argument("--method", choices=["bs", "direct", "both"], default="both")
        if name == "verify":
            p.add_argument("--only", default=None,
                           help="comma list from convexity,mollifier,shifts")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
        env_jobs = os.environ.get("WELLSPEC_JOBS")
        if env_jobs is not None:
            args.jobs = int(env_jobs)
        elif args.jobs is None:
            args.jobs = cfg["run.jobs"]
        out_dir = args.out
        os.makedirs(out_dir, exist_ok=True)
        return _COMMANDS[args.command](cfg, out_dir, args)
    except (ConvergenceError, BracketError, ThresholdError) as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return _EXIT_SOLVER
    except (ConfigError, GeometryError, ConfigurationError, ValueError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return _EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
