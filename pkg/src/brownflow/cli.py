"""Command-line front end: reproducible runs emitting CSV/JSON plot data.

Subcommands
-----------
sample   eigenvalue point clouds of the matrix ensembles
density  analytic density tables (semicircle, circular, multiplicative)
compare  empirical-vs-analytic distance reports with pass/fail tolerances
hj       characteristic trajectories, lifetime scans, shooting tables
preset   named parameter sets reproducing the standard figure classes

Every command accepts ``--seed``; the effective seed resolution order is
CLI flag > BROWNFLOW_SEED environment variable > config file > default 42.
Output files embed the resolved configuration (CSV header comments / JSON
field).  Exit codes: 0 success, 1 comparison failure, 2 usage/config error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
from scipy import stats

from . import brown_analytic, ensembles, hj_engine, spectra
from .errors import BrownflowError, ConfigError, EigensolveError, QuadratureError

DEFAULT_SEED = 42
ENV_SEED = "BROWNFLOW_SEED"

EXIT_OK = 0
EXIT_COMPARISON_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": 1},
        "seed": {"type": "integer", "minimum": 0},
        "n": {"type": "integer", "minimum": 1},
        "t": {"type": "number", "exclusiveMinimum": 0},
        "k": {"type": "integer", "minimum": 1},
        "epsilon": {"type": "number", "minimum": 0},
        "count": {"type": "integer", "minimum": 1},
        "resolution": {"type": "integer", "minimum": 16},
        "format": {"enum": ["csv", "json"]},
    },
    "required": ["version"],
    "additionalProperties": False,
}


def _load_config(path):
    import jsonschema

    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config {path}: {exc.message}") from exc
    return cfg


def resolve_seed(flag_value, config):
    """Seed precedence: CLI flag > environment > config file > default."""
    if flag_value is not None:
        return int(flag_value)
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {env!r}") from exc
    if config and "seed" in config:
        return int(config["seed"])
    return DEFAULT_SEED


def _config_lines(config: dict):
    return [f"# {key}={config[key]}" for key in sorted(config)]


def _write_csv(path, header_cols, rows, config):
    lines = ["# brownflow " + config.get("command", "")] + _config_lines(config)
    lines.append(",".join(header_cols))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

ENSEMBLE_CHOICES = ("gue", "ginibre", "unitary-bm", "gl-bm", "nilpotent-demo")


def _sample_matrix(kind, n, t, k, epsilon, rng):
    if kind == "gue":
        return ensembles.sample_gue(n, rng)
    if kind == "ginibre":
        return ensembles.sample_ginibre(n, rng)
    if kind == "unitary-bm":
        spec = ensembles.BmPathSpec("unitary", n, t, k or ensembles.default_steps(t))
        return ensembles.sample_unitary_bm(spec, rng)
    if kind == "gl-bm":
        spec = ensembles.BmPathSpec("general-linear", n, t, k or ensembles.default_steps(t))
        return ensembles.sample_gl_bm(spec, rng)
    return ensembles.nilpotent_plus_noise(n, epsilon, rng)


def _write_histogram(path, points, ensemble, config):
    if ensemble == "gue":
        hist = spectra.histogram_1d(points.real)
        edges = hist.edges[0]
        rows = [(edges[i], edges[i + 1], hist.masses[i]) for i in range(len(hist.masses))]
        _write_csv(path, ("bin_lo", "bin_hi", "mass"), rows, config)
    else:
        hist = spectra.histogram_2d(points)
        xe, ye = hist.edges
        rows = [(xe[i], xe[i + 1], ye[j], ye[j + 1], hist.masses[i, j])
                for i in range(hist.masses.shape[0]) for j in range(hist.masses.shape[1])]
        _write_csv(path, ("re_lo", "re_hi", "im_lo", "im_hi", "mass"), rows, config)


def cmd_sample(args, config):
    seed = resolve_seed(args.seed, config)
    resolved = {"command": "sample", "ensemble": args.ensemble, "n": args.n,
                "t": args.t, "k": args.k, "epsilon": args.epsilon,
                "count": args.count, "seed": seed, "format": args.format}
    rows = []
    for j in range(args.count):
        m = _sample_matrix(args.ensemble, args.n, args.t, args.k, args.epsilon,
                           ensembles.RngHandle(seed, j))
        try:
            vals = spectra.eigenvalues(m).eigenvalues
        except EigensolveError as exc:
            raise EigensolveError(f"{exc} (ensemble={args.ensemble}, seed={seed}, "
                                  f"stream={j})", context=(seed, j)) from exc
        for lam in vals:
            rows.append((lam.real, lam.imag))
    if args.format == "csv":
        _write_csv(args.out, ("re", "im"), rows, resolved)
    else:
        _write_json(args.out, {"config": resolved,
                               "eigenvalues": [[r, i] for r, i in rows]})
    if args.histogram:
        pts = np.asarray([complex(r, i) for r, i in rows])
        _write_histogram(args.histogram, pts, args.ensemble, resolved)
    print(f"sample: wrote {len(rows)} eigenvalues to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------

def _density_table(kind, t, resolution):
    if kind == "semicircle":
        xs = np.linspace(-2.2, 2.2, resolution)
        return ("x", "density"), [(x, brown_analytic.semicircle_density(x)) for x in xs], 1.0
    if kind == "circular":
        rs = np.linspace(0.0, 1.5 * np.sqrt(t), resolution)
        spec = brown_analytic.DensitySpec("circular", t)
        return (("r", "density"),
                [(r, spec.evaluate(r)) for r in rs],
                brown_analytic.integrate_density(spec))
    domain = brown_analytic.sigma_domain(t)
    spec = brown_analytic.DensitySpec("multiplicative", t)
    rows = []
    for th in np.linspace(0.0, domain.theta_extent, resolution):
        r_in, r_out = domain.boundary_radii(th)
        wt = brown_analytic.omega(r_out, th) / (2.0 * np.pi * t)
        rows.append((th, r_in, r_out, wt))
    return ("theta", "r_inner", "r_outer", "w_t"), rows, brown_analytic.integrate_density(spec)


def cmd_density(args, config):
    seed = resolve_seed(args.seed, config)
    resolved = {"command": "density", "kind": args.kind, "t": args.t,
                "resolution": args.resolution, "seed": seed, "format": args.format}
    cols, rows, mass = _density_table(args.kind, args.t, args.resolution)
    resolved["total_mass"] = mass
    if args.format == "csv":
        _write_csv(args.out, cols, rows, resolved)
    else:
        _write_json(args.out, {"config": resolved, "columns": list(cols),
                               "rows": [[float(v) for v in row] for row in rows],
                               "total_mass": mass})
    print(f"density: wrote {len(rows)} rows to {args.out} (total mass {mass:.6f})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def check_semicircle(n, samples, seed):
    pooled = []
    for j in range(samples):
        m = ensembles.sample_gue(n, ensembles.RngHandle(seed, j))
        pooled.append(np.linalg.eigvalsh(m))
    pooled = np.concatenate(pooled)
    hist = spectra.histogram_1d(pooled, bins=40, range=(-2.2, 2.2))
    dist = spectra.distance_l1_bins(hist, brown_analytic.semicircle_density)
    return {"check": "semicircle", "l1_distance": dist, "tolerance": 0.08,
            "passed": bool(dist < 0.08)}


def check_circular(n, seed):
    m = ensembles.sample_ginibre(n, ensembles.RngHandle(seed))
    em = spectra.empirical_measure(spectra.eigenvalues(m))
    frac = float(np.mean(np.abs(em.points) <= 1.02))
    table = spectra.radial_cdf(em)
    ks = spectra.distance_sup_cdf(table, lambda r: min(r * r, 1.0))
    return {"check": "circular", "fraction_inside_1.02": frac, "fraction_tolerance": 0.97,
            "radial_ks": ks, "ks_tolerance": 0.05,
            "passed": bool(frac >= 0.97 and ks < 0.05)}


def check_multiplicative(n, t, k, seed):
    spec = ensembles.BmPathSpec("general-linear", n, t, k or ensembles.default_steps(t))
    m = ensembles.sample_gl_bm(spec, ensembles.RngHandle(seed))
    em = spectra.empirical_measure(spectra.eigenvalues(m))
    inside = float(np.mean([brown_analytic.T_lambda(z) < t + 0.2 for z in em.points]))
    domain = brown_analytic.sigma_domain(t)
    support = brown_analytic.biane_support(t).theta_max
    clamp = domain.theta_extent
    angles = spectra.angular_pushforward(
        em, lambda z: brown_analytic.phi_angle(t, np.clip(np.angle(z), -clamp, clamp), domain))
    in_support = float(np.mean(np.abs(angles) <= support + 0.1))
    return {"check": "multiplicative", "t": t,
            "fraction_T_below": inside, "T_tolerance": 0.95,
            "pushforward_in_support": in_support, "support_tolerance": 0.95,
            "passed": bool(inside >= 0.95 and in_support >= 0.95)}


def check_log_uniformity(n, t, k, seed, bands=4):
    """Chi-squared band-occupancy test of horizontal uniformity of log spectra."""
    spec = ensembles.BmPathSpec("general-linear", n, t, k or ensembles.default_steps(t))
    m = ensembles.sample_gl_bm(spec, ensembles.RngHandle(seed))
    vals = spectra.eigenvalues(m).eigenvalues
    domain = brown_analytic.sigma_domain(t)
    positions = []
    for z in vals:
        theta = np.angle(z)
        if domain.topology == "simply-connected" and abs(theta) > domain.theta_extent:
            continue
        r_in, r_out = domain.boundary_radii(theta)
        u = (np.log(abs(z)) - np.log(r_in)) / (np.log(r_out) - np.log(r_in))
        if 0.0 <= u <= 1.0:
            positions.append(u)
    counts = np.histogram(positions, bins=bands, range=(0.0, 1.0))[0]
    stat = float(np.sum((counts - counts.mean()) ** 2 / counts.mean()))
    pval = float(stats.chi2.sf(stat, bands - 1))
    return {"check": "log-uniformity", "t": t, "used_points": int(len(positions)),
            "chi2": stat, "p_value": pval, "tolerance": 0.01,
            "passed": bool(pval > 0.01)}


def check_biane_pushforward(n, t, k, seed):
    """Phi_t pushforward of gl-bm eigenvalues against the Biane support arc."""
    spec = ensembles.BmPathSpec("general-linear", n, t, k or ensembles.default_steps(t))
    m = ensembles.sample_gl_bm(spec, ensembles.RngHandle(seed))
    em = spectra.empirical_measure(spectra.eigenvalues(m))
    domain = brown_analytic.sigma_domain(t)
    clamp = domain.theta_extent
    angles = spectra.angular_pushforward(
        em, lambda z: brown_analytic.phi_angle(t, np.clip(np.angle(z), -clamp, clamp), domain))
    support = brown_analytic.biane_support(t).theta_max
    in_support = float(np.mean(np.abs(angles) <= support + 0.1))
    report = {"check": "biane-pushforward", "t": t, "support_theta_max": support,
              "fraction_in_support": in_support}
    if t >= 4.0:
        gaps = np.diff(np.sort(angles))
        wrap = 2 * np.pi - (np.max(angles) - np.min(angles))
        fill = float(max(np.max(gaps), wrap))
        report.update({"max_angle_gap": fill, "gap_tolerance": 0.25,
                       "passed": bool(fill < 0.25)})
    else:
        report.update({"support_tolerance": 0.95,
                       "passed": bool(in_support >= 0.95)})
    return report


def cmd_compare(args, config):
    seed = resolve_seed(args.seed, config)
    resolved = {"command": "compare", "check": args.check, "n": args.n, "t": args.t,
                "k": args.k, "samples": args.samples, "seed": seed}
    if args.check == "semicircle":
        report = check_semicircle(args.n, args.samples, seed)
    elif args.check == "circular":
        report = check_circular(args.n, seed)
    elif args.check == "multiplicative":
        report = check_multiplicative(args.n, args.t, args.k, seed)
    elif args.check == "log-uniformity":
        report = check_log_uniformity(args.n, args.t, args.k, seed)
    else:
        report = check_biane_pushforward(args.n, args.t, args.k, seed)
    payload = {"config": resolved, "report": report}
    if args.out:
        _write_json(args.out, payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK if report["passed"] else EXIT_COMPARISON_FAILED


# ---------------------------------------------------------------------------
# hj
# ---------------------------------------------------------------------------

def _parse_complex(text):
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex number {text!r}") from exc


def cmd_hj(args, config):
    seed = resolve_seed(args.seed, config)
    resolved = {"command": "hj", "task": args.task, "t": args.t, "x0": args.x0,
                "lambda0": str(args.lambda0), "seed": seed}
    if args.task == "trajectory":
        lam0 = _parse_complex(args.lambda0)
        init = hj_engine.mult_initial_state(lam0, args.x0)
        t_final = args.t
        if t_final is None:
            est = hj_engine.mult_lifetime(lam0, args.x0)
            t_final = 0.8 * est.time
        traj = hj_engine.integrate_hamilton("multiplicative", init, t_final)
        rows = []
        for s, y in zip(traj.t, traj.y.T):
            rows.append((s, *y, hj_engine.mult_hamiltonian(y), hj_engine.mult_psi(y)))
        _write_csv(args.out, ("t", "a", "b", "x", "p_a", "p_b", "p_x", "H", "Psi"),
                   rows, resolved)
        print(f"hj trajectory: {len(rows)} rows to {args.out} (blew_up={traj.blew_up})")
        return EXIT_OK
    if args.task == "lifetime-scan":
        thetas = np.linspace(0.0, np.pi, args.resolution)
        rows = []
        for th in thetas:
            lam0 = np.exp(1j * th)
            est = hj_engine.mult_lifetime(complex(lam0), args.x0)
            rows.append((th, est.time, brown_analytic.T_lambda(complex(lam0))))
        _write_csv(args.out, ("theta", "lifetime", "T_lambda"), rows, resolved)
        print(f"hj lifetime-scan: {len(rows)} rows to {args.out}")
        return EXIT_OK
    # shooting / ds-drho verification table
    targets = [_parse_complex(s) for s in args.targets.split(";")]
    t = args.t if args.t is not None else 1.0
    rows = []
    all_converged = True
    for lam in targets:
        try:
            value, results = hj_engine.ds_drho_shooting(t, lam)
            res = results[-1]
            expected = 2.0 * np.log(abs(lam)) / t + 1.0
            rows.append((lam.real, lam.imag, res.converged, res.residual_norm,
                         value, expected))
            all_converged = all_converged and res.converged
        except RuntimeError:
            rows.append((lam.real, lam.imag, False, np.inf, np.nan, np.nan))
            all_converged = False
    _write_csv(args.out, ("target_re", "target_im", "converged", "residual",
                          "ds_drho", "expected"), rows, resolved)
    print(f"hj shoot: {len(rows)} targets to {args.out} (all converged: {all_converged})")
    return EXIT_OK if all_converged else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

PRESETS = {
    "fig-gue-hist": ("sample", {"ensemble": "gue", "n": 2000}),
    "fig-ginibre": ("sample", {"ensemble": "ginibre", "n": 2000}),
    "fig-perturb1": ("sample", {"ensemble": "nilpotent-demo", "n": 2000, "epsilon": 1e-5}),
    "fig-t01": ("sample", {"ensemble": "gl-bm", "n": 2000, "t": 0.1}),
    "fig-t2": ("sample", {"ensemble": "gl-bm", "n": 2000, "t": 2.0}),
    "fig-t39": ("sample", {"ensemble": "gl-bm", "n": 2000, "t": 3.9}),
    "fig-t4": ("sample", {"ensemble": "gl-bm", "n": 2000, "t": 4.0}),
    "fig-t41": ("sample", {"ensemble": "gl-bm", "n": 2000, "t": 4.1}),
    "fig-splot3d": ("density", {"kind": "circular", "t": 1.0}),
    "fig-wt-2": ("density", {"kind": "multiplicative", "t": 2.0}),
    "fig-wt-35": ("density", {"kind": "multiplicative", "t": 3.5}),
    "fig-wt-4": ("density", {"kind": "multiplicative", "t": 4.0}),
    "fig-wt-7": ("density", {"kind": "multiplicative", "t": 7.0}),
    "fig-bianeevals": ("compare", {"check": "biane-pushforward", "n": 2000, "t": 2.0}),
    "fig-evalsandlogs": ("compare", {"check": "log-uniformity", "n": 2000, "t": 4.1}),
}


def cmd_preset(args, config):
    command, params = PRESETS[args.name]
    argv = [command]
    for key, val in params.items():
        argv += [f"--{key}", str(val)]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    argv += ["--out", args.out]
    print(f"preset {args.name}: brownflow {' '.join(argv)}")
    return main(argv)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="brownflow", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="JSON config file")
        if needs_out:
            p.add_argument("--out", required=True, help="output file path")

    p = sub.add_parser("sample", help="eigenvalue point clouds")
    common(p)
    p.add_argument("--ensemble", choices=ENSEMBLE_CHOICES, required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--k", type=int, default=None, help="steps (default: 100 per unit time)")
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--count", type=int, default=1, help="number of matrices to pool")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--histogram", default=None,
                   help="also write a binned histogram CSV (1D for gue, else 2D)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("density", help="analytic density tables")
    common(p)
    p.add_argument("--kind", choices=("semicircle", "circular", "multiplicative"),
                   required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("compare", help="empirical vs analytic comparison report")
    common(p, needs_out=False)
    p.add_argument("--out", default=None, help="optional JSON report path")
    p.add_argument("--check", choices=("semicircle", "circular", "multiplicative",
                                       "log-uniformity", "biane-pushforward"),
                   required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--samples", type=int, default=10)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("hj", help="characteristics, lifetimes, shooting")
    common(p)
    p.add_argument("--task", choices=("trajectory", "lifetime-scan", "shoot"),
                   required=True)
    p.add_argument("--lambda0", default="0.5+0.5j")
    p.add_argument("--x0", type=float, default=1e-6)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--resolution", type=int, default=33)
    p.add_argument("--targets", default="1;1.2214027581601699;0.8187307530779818;"
                                        "1.055810104758112+0.3266003381058178j",
                   help="semicolon-separated complex shooting targets")
    p.set_defaults(func=cmd_hj)

    p = sub.add_parser("preset", help="figure-class presets with pinned parameters")
    common(p)
    p.add_argument("name", choices=sorted(PRESETS))
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config) if getattr(args, "config", None) else {}
        return args.func(args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, EigensolveError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrownflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
