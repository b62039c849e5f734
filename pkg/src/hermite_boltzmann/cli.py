"""Command-line entry point: ``hermite-boltzmann {assemble,run,info,cache}``."""
import argparse
import logging
import os
import sys
import time

log = logging.getLogger("hermite_boltzmann")

_THREAD_VARS = ("NUMBA_NUM_THREADS", "OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS")


def _add_common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--eta", type=float)
    p.add_argument("--M0", type=int)
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--quad-abs-tol", dest="quad_abs_tol", type=float)
    p.add_argument("--quad-rel-tol", dest="quad_rel_tol", type=float)
    p.add_argument("--single-thread", action="store_true",
                   help="pin every numeric library to one thread for reproducible output")


def build_parser():
    parser = argparse.ArgumentParser(prog="hermite-boltzmann",
                                     description="Hermite spectral solver for the "
                                                 "homogeneous Boltzmann equation (IPL gases)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assemble", help="compute and cache the collision tensor")
    _add_common(p)
    p.add_argument("--drop-floor", dest="drop_floor", type=float)
    p.add_argument("--memory-cap-gib", dest="memory_cap_gib", type=float)
    p.add_argument("--force", action="store_true", help="recompute even if cached")

    p = sub.add_parser("run", help="integrate one experiment and write CSV output")
    _add_common(p)
    p.add_argument("--M", type=int)
    p.add_argument("--model", choices=("quadratic", "hybrid", "bgk"))
    p.add_argument("--experiment", choices=("bkw", "bigaussian", "discontinuous", "custom"))
    p.add_argument("--coeff-file", dest="coeff_file")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--output", help="trajectory CSV path")
    p.add_argument("--marginal-g", dest="marginal_g", help="CSV path for g(v1)")
    p.add_argument("--marginal-h", dest="marginal_h", help="CSV path for h(v1, v2)")
    p.add_argument("--marginal-every", dest="marginal_every", type=int)

    p = sub.add_parser("info", help="report index-set sizes, memory and time constants")
    _add_common(p)
    p.add_argument("--M", type=int)

    p = sub.add_parser("cache", help="list or remove cached tensors")
    csub = p.add_subparsers(dest="cache_command", required=True)
    for name in ("ls", "rm"):
        c = csub.add_parser(name)
        c.add_argument("--cache-dir", dest="cache_dir")
        if name == "rm":
            c.add_argument("--eta", type=float)
            c.add_argument("--M0", type=int)
            c.add_argument("--all", action="store_true")
    return parser


_OVERRIDE_KEYS = ("eta", "M", "M0", "model", "experiment", "coeff_file", "dt", "t_end",
                  "quad_abs_tol", "quad_rel_tol", "drop_floor", "memory_cap_gib", "cache_dir",
                  "output", "marginal_g", "marginal_h", "marginal_every")


def _config(args):
    from .config import RunConfig, load_config

    base = RunConfig()
    if getattr(args, "config", None):
        base = load_config(args.config, base)
    overrides = {k: getattr(args, k, None) for k in _OVERRIDE_KEYS}
    # an M0 above the configured M lifts M along with it unless M is given too
    if overrides["M"] is None and overrides["M0"] is not None and overrides["M0"] > base.M:
        overrides["M"] = overrides["M0"]
    return base.updated(**overrides)


def _model(cfg):
    from .ipl_kernel import QuadratureSpec, kernel_model

    quad = QuadratureSpec(cfg.quad_abs_tol, cfg.quad_rel_tol, cfg.quad_max_subdivisions)
    return kernel_model(cfg.eta, quad)


def _gib(nbytes):
    return nbytes / 2 ** 30


def load_cached_tensor(cfg):
    from .collision_tensor import cache_path, load
    from .errors import CacheMissError

    path = cache_path(cfg.cache_dir, cfg.eta, cfg.M0)
    if not os.path.exists(path):
        raise CacheMissError(
            f"no cached tensor for eta={cfg.eta:g}, M0={cfg.M0} at {path}; "
            f"run `hermite-boltzmann assemble --eta {cfg.eta:g} --M0 {cfg.M0}` first")
    return load(path, eta=cfg.eta, M0=cfg.M0), path


def cmd_assemble(args):
    from .collision_tensor import assemble, cache_path, load, memory_estimate, save
    from .errors import MemoryRefusal, TensorFormatError

    cfg = _config(args)
    path = cache_path(cfg.cache_dir, cfg.eta, cfg.M0)
    est = memory_estimate(cfg.M0)
    if est > cfg.memory_cap:
        raise MemoryRefusal(est, cfg.memory_cap)
    if os.path.exists(path) and not args.force:
        try:
            tensor = load(path, eta=cfg.eta, M0=cfg.M0)
        except TensorFormatError as exc:
            log.warning("ignoring unusable cache file %s: %s", path, exc)
        else:
            log.info("cache hit: %s (%d entries), skipping assembly", path, tensor.n_entries)
            print(f"cache hit: {path}")
            print(f"entries: {tensor.n_entries}")
            print(f"dense memory estimate: {est} bytes ({_gib(est):.4f} GiB)")
            return 0
    t0 = time.perf_counter()
    tensor = assemble(cfg.eta, cfg.M0, _model(cfg), drop_floor=cfg.drop_floor,
                      memory_cap=cfg.memory_cap)
    wall = time.perf_counter() - t0
    os.makedirs(cfg.cache_dir, exist_ok=True)
    save(tensor, path)
    print(f"wrote {path}")
    print(f"entries: {tensor.n_entries}")
    print(f"wall time: {wall:.3f} s")
    print(f"dense memory estimate: {est} bytes ({_gib(est):.4f} GiB)")
    return 0


def _initial_state(cfg):
    from . import solver

    if cfg.experiment == "bkw":
        ref = solver.BkwReference.from_kernel(_model(cfg))
        return solver.bkw_coeffs(0.0, ref, cfg.M), ref
    if cfg.experiment == "bigaussian":
        return solver.project_bigaussian(cfg.M), None
    if cfg.experiment == "discontinuous":
        return solver.project_discontinuous(cfg.M), None
    return solver.load_coefficients(cfg.coeff_file, cfg.M), None


def build_rhs(cfg):
    """Right-hand side callable and the degree cap of the state it acts on."""
    from .collision_models import HybridModel, bgk_rhs, quadratic_rhs
    from .ipl_kernel import bgk_tau

    if cfg.model == "bgk":
        tau = bgk_tau(cfg.eta, _model(cfg))
        return (lambda f: bgk_rhs(tau, f)), cfg.M, {"tau": tau}
    tensor, _ = load_cached_tensor(cfg)
    if cfg.model == "quadratic":
        if cfg.M != cfg.M0:
            log.info("quadratic model acts on I_M0; truncating the state to degree %d", cfg.M0)
        return (lambda f: quadratic_rhs(tensor, f)), cfg.M0, {}
    hm = HybridModel.from_tensor(tensor, cfg.M)
    return hm, cfg.M, {"nu": hm.nu}


def cmd_run(args):
    import numpy as np

    from . import solver
    from .ipl_kernel import scaled_time_constant

    cfg = _config(args).validate_run()
    rhs, M_state, extra = build_rhs(cfg)
    state, ref = _initial_state(cfg)
    state = state.restrict(M_state) if M_state < state.M else state
    grid = np.linspace(-cfg.marginal_vmax, cfg.marginal_vmax, cfg.marginal_points)
    want_marg = bool(cfg.marginal_g or cfg.marginal_h)
    for path in (cfg.marginal_g, cfg.marginal_h):
        if path and os.path.exists(path):
            os.remove(path)
    traj = solver.integrate_trajectory(
        rhs, state, cfg.dt, cfg.t_end,
        marginal_every=cfg.marginal_every if want_marg else None,
        grid1d=grid if cfg.marginal_g else None,
        grid2d=(grid, grid) if cfg.marginal_h else None)
    scaled = None
    if cfg.experiment == "discontinuous":
        scaled = scaled_time_constant(cfg.eta, _model(cfg))
    solver.write_trajectory_csv(cfg.output, traj.rows, scaled)
    for t, g, h in traj.marginals:
        solver.write_marginal_csv(cfg.marginal_g or None, cfg.marginal_h or None, t,
                                  grid, g, (grid, grid), h)
    rows = np.array(traj.rows)
    print(f"wrote {cfg.output} ({len(rows)} rows)")
    for key, val in extra.items():
        print(f"{key}: {val:.10g}")
    if scaled is not None:
        print(f"tau_s: {scaled:.10g}")
    print(f"max |rho - 1|: {np.max(np.abs(rows[:, 1] - 1.0)):.3e}")
    print(f"max |u|: {np.max(np.abs(rows[:, 2:5])):.3e}")
    print(f"max |theta - 1|: {np.max(np.abs(rows[:, 5] - 1.0)):.3e}")
    if ref is not None:
        dev = 0.0
        for t, row in zip(traj.times, rows):
            exact = solver.bkw_coeffs(t, ref, 4)
            dev = max(dev, abs(row[-2] - exact[(4, 0, 0)]), abs(row[-1] - exact[(2, 2, 0)]))
        print(f"max deviation from BKW (f400, f220): {dev:.3e}")
    return 0


def cmd_info(args):
    from .basis import n_indices
    from .collision_models import linearized_operator, spectral_radius
    from .collision_tensor import memory_estimate
    from .errors import CacheMissError, TensorFormatError
    from .ipl_kernel import bgk_tau, scaled_time_constant

    cfg = _config(args)
    model = _model(cfg)
    est = memory_estimate(cfg.M0)
    print(f"N_M (M={cfg.M}): {n_indices(cfg.M)}")
    print(f"N_M0 (M0={cfg.M0}): {n_indices(cfg.M0)}")
    print(f"dense memory estimate: {est} bytes ({_gib(est):.4f} GiB)")
    try:
        tensor, _ = load_cached_tensor(cfg)
    except (CacheMissError, TensorFormatError):
        print("nu_M0: unavailable (no cached tensor)")
    else:
        print(f"nu_M0: {spectral_radius(linearized_operator(tensor)):.10g}")
    print(f"tau_BGK: {bgk_tau(cfg.eta, model):.10g}")
    print(f"tau_s: {scaled_time_constant(cfg.eta, model):.10g}")
    return 0


def cmd_cache(args):
    import glob

    from .collision_tensor import cache_path, format_eta
    from .config import default_cache_dir

    cache_dir = args.cache_dir or default_cache_dir()
    files = sorted(glob.glob(os.path.join(cache_dir, "A_eta*_M*.bin")))
    if args.cache_command == "ls":
        for f in files:
            print(f"{f}\t{os.path.getsize(f)} bytes")
        return 0
    if args.all:
        targets = files
    else:
        if args.eta is None or args.M0 is None:
            from .errors import ConfigError
            raise ConfigError("cache rm needs --eta and --M0, or --all")
        targets = [cache_path(cache_dir, args.eta, args.M0)]
        if not os.path.exists(targets[0]):
            print(f"nothing to remove for eta={format_eta(args.eta)}, M0={args.M0}")
            return 0
    for f in targets:
        os.remove(f)
        print(f"removed {f}")
    return 0


_COMMANDS = {"assemble": cmd_assemble, "run": cmd_run, "info": cmd_info, "cache": cmd_cache}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if getattr(args, "single_thread", False):
        for var in _THREAD_VARS:
            os.environ[var] = "1"
    from .errors import HermiteBoltzmannError

    try:
        return _COMMANDS[args.command](args)
    except HermiteBoltzmannError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
