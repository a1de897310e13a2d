"""Command-line interface.

Every command writes its outputs into ``--out-dir`` together with a JSON run
manifest (arguments, seed, version, timestamps, SHA-256 of each output).
``qhahn replay MANIFEST`` re-runs the command and compares the digests.

Exit codes: 0 pass, 1 numerical mismatch, 2 invalid input, 3 resource cap.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import __version__

log = logging.getLogger("qhahn")

EXIT_PASS, EXIT_MISMATCH, EXIT_INVALID, EXIT_CAP = 0, 1, 2, 3


class InvalidInput(Exception):
    pass


class ResourceCap(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    argv: list
    params: dict
    seed: int | None
    version: str = __version__
    started: str = ""
    finished: str = ""
    exit_code: int = 0
    outputs: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def write(self, path: Path):
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# --- parameter parsing -------------------------------------------------------------------


def parse_scalar(text: str, exact: bool):
    """'3/10' is always exact; decimals become Fractions only when ``exact``."""
    try:
        if "/" in text or exact:
            return Fraction(text)
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInput(f"cannot parse scalar {text!r}") from exc


def build_params(args, force_exact: bool = False):
    from .hopping import ModelParams, ParameterError, params_from_relation

    exact = force_exact or args.arith == "exact"
    try:
        if getattr(args, "alpha", None) is not None:
            vals = [parse_scalar(getattr(args, k), exact) for k in ("alpha", "beta", "gamma", "p")]
            return params_from_relation(*vals)
        if args.q is None or args.mu is None or args.nu is None:
            raise InvalidInput("need --q, --mu and --nu")
        return ModelParams(parse_scalar(args.q, exact), parse_scalar(args.mu, exact), parse_scalar(args.nu, exact))
    except ParameterError as exc:
        raise InvalidInput(str(exc)) from exc


def parse_coords(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise InvalidInput(f"bad coordinate list {text!r}") from exc


# --- commands -------------------------------------------------------------------------------
# each returns (exit code, {filename: text}, extra manifest info)


def cmd_phi(args):
    from .hopping import phi, phi_table_csv

    params = build_params(args)
    if args.n_max < 0:
        raise InvalidInput("--n-max must be nonnegative")
    text = phi_table_csv(params, args.n_max, args.digits, exact_fractions=args.exact_fractions)
    worst = max(abs(sum(phi(m, n, params) for m in range(n + 1)) - 1) for n in range(args.n_max + 1))
    code = EXIT_PASS if worst <= 1e-12 else EXIT_MISMATCH
    print(f"phi table: {args.n_max + 1} row groups, max |row sum - 1| = {float(worst):.3g}")
    if params.q == 1:
        from .hopping import phi_limit

        dev = max(abs(phi(m, n, params) - phi_limit("q1_binomial", m, n, params))
                  for n in range(args.n_max + 1) for m in range(n + 1))
        print(f"q = 1: binomial law, max deviation {float(dev):.3g}")
        if dev > 1e-12:
            code = EXIT_MISMATCH
    return code, {"phi.csv": text}, {"params": params.describe()}


def cmd_verify_binomial(args):
    import numpy as np

    from .hopping import random_params
    from .normal_order import binomial_check

    if args.random:
        rng = np.random.default_rng(args.seed)
        triples = [random_params(rng) for _ in range(args.random)]
    else:
        triples = [build_params(args, force_exact=True)]
    reports = [binomial_check(args.n_max, p) for p in triples]
    ok = all(r["pass"] for r in reports)
    for r in reports:
        p = r["params"]
        print(f"q={p['q']} mu={p['mu']} nu={p['nu']}: {'PASS' if r['pass'] else 'FAIL'}")
    text = json.dumps({"n_max": args.n_max, "reports": reports, "pass": ok}, indent=2, sort_keys=True) + "\n"
    return (EXIT_PASS if ok else EXIT_MISMATCH), {"binomial.json": text}, {}


def cmd_dump(args):
    from .hopping import phi
    from .normal_order import coeff_a

    params = build_params(args, force_exact=True)
    lines = [f"# q={params.q} mu={params.mu} nu={params.nu}", "# a l k value"]
    for l in range(1, args.l_max + 1):
        for k in range(l + 1):
            lines.append(f"a {l} {k} {coeff_a(k, l, params)}")
    lines.append("# phi n m value")
    for n in range(args.n_max + 1):
        for m in range(n + 1):
            lines.append(f"phi {n} {m} {phi(m, n, params)}")
    return EXIT_PASS, {"dump.txt": "\n".join(lines) + "\n"}, {}


def cmd_export_matrix(args):
    from .state_space import build_markov_matrix, stationary_vector

    params = build_params(args)
    M = build_markov_matrix(args.L, args.N, params)
    p_st = stationary_vector(args.L, args.N, params, M.configs)
    sums = M.column_sums()
    fixed = M.matvec(p_st)
    if params.is_exact:
        ok = all(s == 1 for s in sums) and fixed == p_st
    else:
        ok = max(abs(s - 1) for s in sums) < 1e-12 and max(abs(a - b) for a, b in zip(fixed, p_st)) < 1e-12
    diag = M.flow_diagnostic()
    print(f"dimension {M.dim}, stochastic and stationary: {'PASS' if ok else 'FAIL'}, "
          f"entries with several flows: {diag['multi_flow_entries']}")
    files = {"matrix.txt": M.coordinate_list(not args.decimal), "legend.txt": M.legend()}
    return (EXIT_PASS if ok else EXIT_MISMATCH), files, {"flows": diag}


def cmd_spectrum(args):
    from .bethe import roots_csv, solve_bethe, spectrum_match

    params = build_params(args)
    roots = solve_bethe(args.L, args.N, params, seed=args.seed, n_random=args.starts)
    report = spectrum_match(args.L, args.N, params, roots=roots)
    print(f"L={args.L} N={args.N}: {report['matched']}/{report['dimension']} eigenvalues matched, "
          f"{report['solutions']} solutions, max gap {report['max_gap']:.3g}")
    files = {"roots.csv": roots_csv(args.L, args.N, roots),
             "spectrum.json": json.dumps(report, indent=2, sort_keys=True) + "\n"}
    return (EXIT_PASS if report["pass"] else EXIT_MISMATCH), files, {}


def cmd_green(args):
    from .green import MAX_PARTICLES, completeness_check, completeness_json, green_csv, green_table

    params = build_params(args)
    y = parse_coords(args.y)
    if not y:
        raise InvalidInput("--y needs at least one coordinate")
    if len(y) > MAX_PARTICLES:
        raise ResourceCap(f"residue evaluation is capped at {MAX_PARTICLES} particles")
    if args.t < 0:
        raise InvalidInput("--t must be nonnegative")
    table = green_table(args.t, y, params)
    total = sum(table.values())
    ok = abs(total - 1) <= args.tol
    files = {"green.csv": green_csv(args.t, tuple(sorted(y)), table)}
    print(f"t={args.t} y={y}: {len(table)} reachable x, sum = {complex(total).real:.15g}")
    if args.x is not None:
        x = parse_coords(args.x)
        if len(x) != len(y):
            raise InvalidInput("--x and --y need the same number of particles")
        report = completeness_check(tuple(sorted(x)), tuple(sorted(y)), params, args.tol)
        ok = ok and report["pass"]
        files["completeness.json"] = completeness_json(x, y, params, report)
        print(f"completeness at x={x}: {'PASS' if report['pass'] else 'FAIL'} (error {float(report['abs_error']):.3g})")
    return (EXIT_PASS if ok else EXIT_MISMATCH), files, {}


def _load_schema() -> dict:
    return json.loads(resources.files("qhahn").joinpath("schemas/simconfig.json").read_text())


def load_sim_config(path: str):
    import jsonschema

    from .hopping import ParameterError
    from .montecarlo import SimConfig

    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(data, _load_schema())
        return SimConfig.from_dict(data), data
    except jsonschema.ValidationError as exc:
        raise InvalidInput(f"config does not match schema: {exc.message}") from exc
    except (ParameterError, ValueError) as exc:
        raise InvalidInput(str(exc)) from exc


def cmd_simulate(args):
    from .montecarlo import run_current, run_stationary_test, series_csv, simulate, summary_json
    from .state_space import StateSpaceTooLarge

    cfg, raw = load_sim_config(args.config)
    result = simulate(cfg, args.backend)
    summary = {"config": cfg.to_dict(), "samples": len(result.codes)}
    files = {}
    ok = True
    if "current" in cfg.observables:
        cur = run_current(cfg, result=result, exact=False)
        summary.update(mean_current=cur["mean"], current_variance=cur["variance"], current_stderr=cur["stderr"])
        files["current.csv"] = series_csv(cur["series"], "current", cfg.burn_in)
    if "stationary" in cfg.observables:
        try:
            st = run_stationary_test(cfg, result=result, threshold=args.threshold)
        except StateSpaceTooLarge as exc:
            raise ResourceCap(str(exc)) from exc
        summary.update(tv_distance=st["tv_distance"], tv_threshold=st["threshold"], stationary_pass=st["pass"])
        ok = st["pass"]
        print(f"TV distance {st['tv_distance']:.4g} (threshold {st['threshold']}): {'PASS' if ok else 'FAIL'}")
    files["summary.json"] = summary_json(summary)
    return (EXIT_PASS if ok else EXIT_MISMATCH), files, {"inputs": {"config": raw}, "seed": cfg.seed}


def cmd_mapping(args):
    from .mappings import particle_hole_check, roundtrip_check, solution_counts, trajectory_check

    params = build_params(args, force_exact=True)
    report = {
        "roundtrip": roundtrip_check(args.L, args.N),
        "trajectory": trajectory_check(args.L, args.N, params),
        "particle_hole": particle_hole_check(args.L + args.N, args.N, params),
    }
    if args.counts:
        report["solution_counts"] = solution_counts(args.L, args.N, params, seed=args.seed)
    ok = all(report[k]["pass"] for k in ("roundtrip", "trajectory", "particle_hole"))
    for k, v in report.items():
        if "pass" in v:
            print(f"{k}: {'PASS' if v['pass'] else 'FAIL'}")
    if args.counts:
        c = report["solution_counts"]
        print(f"solutions: zero-range {c['zrp_solutions']}, exclusion {c['asep_solutions']}, "
              f"ratio {c['ratio']:.4g} (expected {c['expected_ratio']:.4g})")
    text = json.dumps(report, indent=2, sort_keys=True, default=str) + "\n"
    return (EXIT_PASS if ok else EXIT_MISMATCH), {"mapping.json": text}, {}


def cmd_bench(args):
    from .kernels import BACKEND

    from .bench import run_benchmark

    report = run_benchmark(args.steps, args.L, args.N, args.repeat)
    for name, t in report["timings"].items():
        print(f"{name}: {t:.4f} s for {args.steps} steps")
    if "speedup" in report:
        print(f"speedup {report['speedup']:.1f}x; streams identical: {report['identical']}")
    # timings vary between runs, so only the deterministic part is digested
    stable = {k: v for k, v in report.items() if k not in ("timings", "speedup")}
    stable["default_backend"] = BACKEND
    ok = report.get("identical", True)
    return (EXIT_PASS if ok else EXIT_MISMATCH), {"bench.json": json.dumps(stable, indent=2, sort_keys=True) + "\n"}, \
        {"timings": report["timings"]}


def cmd_replay(args):
    path = Path(args.manifest)
    try:
        man = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read manifest: {exc}") from exc
    argv = list(man["argv"])
    out = Path(args.out_dir) if args.out_dir else Path(tempfile.mkdtemp(prefix="qhahn-replay-"))
    out.mkdir(parents=True, exist_ok=True)
    if man["command"] == "simulate":
        cfg = out / "replay_config.json"
        cfg.write_text(json.dumps(man["inputs"]["config"]))
        argv[1] = str(cfg)
    code = main(argv + ["--out-dir", str(out), "--manifest", str(out / "replay.manifest.json")])
    diffs = [name for name, digest in man["outputs"].items()
             if not (out / name).exists() or sha256(out / name) != digest]
    if diffs:
        print(f"replay differs in: {', '.join(diffs)}")
        return EXIT_MISMATCH, {}, {}
    if code != man["exit_code"]:
        print(f"exit code {code}, recorded {man['exit_code']}")
        return EXIT_MISMATCH, {}, {}
    print(f"replay identical: {len(man['outputs'])} outputs in {out}")
    return EXIT_PASS, {}, {}


# --- parser --------------------------------------------------------------------------------


def _add_params(p, relation=False):
    p.add_argument("--q")
    p.add_argument("--mu")
    p.add_argument("--nu")
    p.add_argument("--arith", choices=["float", "exact"], default="float",
                   help="parse decimals exactly (fractions like 3/10 are always exact)")
    if relation:
        for k in ("alpha", "beta", "gamma", "p"):
            p.add_argument(f"--{k}", help="exchange-relation form, instead of q/mu/nu")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=".", help="directory for outputs and the manifest")
    common.add_argument("--manifest", help="manifest path (default OUT_DIR/<command>.manifest.json)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qhahn", description="q-Hahn chipping model toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phi", parents=[common], help="hopping probability table")
    _add_params(p)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--digits", type=int, default=17)
    p.add_argument("--exact-fractions", action="store_true")
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("verify-binomial", parents=[common], help="exact normal-ordering check")
    _add_params(p, relation=True)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--random", type=int, default=0, help="check this many random rational triples instead")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_binomial)

    p = sub.add_parser("dump", parents=[common], help="exact a_k^l and phi tables")
    _add_params(p)
    p.add_argument("--l-max", type=int, default=6)
    p.add_argument("--n-max", type=int, default=6)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("export-matrix", parents=[common], help="ring transition matrix")
    _add_params(p)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--decimal", action="store_true", help="decimal entries instead of fractions")
    p.set_defaults(func=cmd_export_matrix)

    p = sub.add_parser("spectrum", parents=[common], help="Bethe roots vs dense spectrum")
    _add_params(p)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=400, help="Newton starts per round")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("green", parents=[common], help="Green function table and completeness")
    _add_params(p)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--y", required=True, help="initial coordinates, e.g. 0,0,1")
    p.add_argument("--x", help="final coordinates for the completeness report")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo run from a JSON config")
    p.add_argument("config")
    p.add_argument("--backend", choices=["python", "cython"])
    p.add_argument("--threshold", type=float, default=0.01)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mapping", parents=[common], help="zero-range / exclusion correspondence checks")
    _add_params(p)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--counts", action="store_true", help="also count Bethe solutions on both rings")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mapping)

    p = sub.add_parser("bench", parents=[common], help="compare kernel backends")
    p.add_argument("--steps", type=int, default=200000)
    p.add_argument("--L", type=int, default=4)
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--repeat", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    p.add_argument("manifest")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    from .hopping import ParameterError
    from .montecarlo import HorizonError
    from .state_space import StateSpaceTooLarge, WindowTooSmall

    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    started = _now()
    try:
        code, files, extra = args.func(args)
    except (InvalidInput, ParameterError, WindowTooSmall) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ResourceCap, StateSpaceTooLarge, HorizonError) as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    if args.command == "replay":
        return code

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name, text in files.items():
        (out / name).write_text(text)
        digests[name] = sha256(out / name)
    # strip the output location so the manifest replays anywhere
    record, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a in ("--out-dir", "--manifest"):
            skip = True
            continue
        if a.startswith(("--out-dir=", "--manifest=")):
            continue
        record.append(a)
    params = {k: getattr(args, k) for k in ("q", "mu", "nu", "arith") if getattr(args, k, None) is not None}
    manifest = RunManifest(
        command=args.command,
        argv=record,
        params=params,
        seed=extra.pop("seed", getattr(args, "seed", None)),
        started=started,
        finished=_now(),
        exit_code=code,
        outputs=digests,
        inputs=extra.pop("inputs", {}),
        extra=extra,
    )
    manifest.write(Path(args.manifest) if args.manifest else out / f"{args.command}.manifest.json")
    return code


if __name__ == "__main__":
    sys.exit(main())
