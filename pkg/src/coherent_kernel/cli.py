"""Command-line entry point: ``coherent-kernel COMMAND [--config PATH] [--set K=V ...]``.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

COMMANDS = ("invariant-check", "kernel-xy", "kernel-z", "mathieu-check", "evolve",
            "oracle-compare", "stability-scan")
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

log = logging.getLogger("coherent_kernel")


def _write_csv(path: Path, header, columns):
    import numpy as np

    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
    return path.name


def _check(flag) -> str:
    return "pass" if bool(flag) else "fail"


# ----------------------------------------------------------------- commands

def _cmd_invariant_check(cfg, params, out):
    import numpy as np
    from . import field
    from .core import TimeGrid

    kind = cfg["drive"]
    if kind == "sin":
        u = field.DriveTrajectory.sinusoid(cfg["drive_amplitude"], cfg["drive_frequency"])
    elif kind == "constant":
        u = field.DriveTrajectory.constant(cfg["drive_amplitude"])
    elif kind == "zero":
        u = field.DriveTrajectory.zero()
    else:
        from .errors import ValidationError

        raise ValidationError(f"drive must be sin, constant or zero, got {kind!r}")
    grid = TimeGrid.spanning(cfg["t_final"], cfg["dt"])
    N = cfg["n_levels"]
    t, rI, G, phi = field.invariant_residual_series(params, u, grid, N)
    _, rT, _, _ = field.tdse_residual_series(params, u, grid, N)
    Gi, phii = G[1:-1], phi[1:-1]
    files = [_write_csv(out / "invariant_check.csv", ["t", "residual_I", "residual_tdse", "g_re", "g_im", "phi0"],
                        [t, rI, rT, Gi.real, Gi.imag, phii])]
    chi = np.abs(G) ** 2  # chi(0) = |G(0)|^2, so chi - |G|^2 is identically zero
    chi_drift = float(np.abs((chi - np.abs(G) ** 2) - (chi[0] - abs(G[0]) ** 2)).max())
    tol = cfg["residual_tol"]
    checks = {"invariant_residual": _check(rI.max() < tol), "tdse_residual": _check(rT.max() < tol),
              "chi_conservation": _check(chi_drift == 0.0)}
    extra = {"max_residual_I": float(rI.max()), "max_residual_tdse": float(rT.max())}
    return files, checks, extra


def _cmd_kernel_xy(cfg, params, out):
    import numpy as np
    from . import magnetic as mag
    from .core import SpatialGrid2D

    grid = SpatialGrid2D.square((cfg["xi"], cfg["yi"]), cfg["xy_half_width"], cfg["xy_spacing"])
    X, Y = grid.mesh()
    t = cfg["t_final"]
    K = mag.kxy_array(params, X, Y, cfg["xi"], cfg["yi"], t)
    files = [_write_csv(out / "kernel_xy.csv", ["xf", "yf", "re", "im"],
                        [X.ravel(), Y.ravel(), K.real.ravel(), K.imag.ravel()])]
    checks = {}
    extra = {}
    if params.magnetic_field == 0:
        free = mag.free_kernel_2d(params.mass, X, Y, cfg["xi"], cfg["yi"], t)
        err = float(np.abs(K - free).max() / np.abs(free).max())
        checks["free_limit"] = _check(err < 1e-12)
        extra["free_limit_rel_error"] = err
    ep = mag.PlanarEndpoints(cfg["xi"], cfg["yi"], cfg["xi"] + 0.37, cfg["yi"] - 0.21, t)
    r1 = mag.schrodinger_residual_xy(params, ep, 1e-2)
    r2 = mag.schrodinger_residual_xy(params, ep, 5e-3)
    extra["schrodinger_residual"] = [r1, r2]
    checks["schrodinger_second_order"] = _check(r2 < 1e-3 and 3.0 < r1 / r2 < 5.0)
    return files, checks, extra


def _cmd_kernel_z(cfg, params, out):
    import numpy as np
    from . import axial
    from .core import SpatialGrid1D

    st = axial.build_axial_kernel(params, cfg["t_final"], cfg["kernel_dt"])
    files = [_write_csv(out / "kernel_z.csv", ["t", "F", "c1", "c2", "c3", "d1", "d2", "d3"],
                        [st.times, st.F, st.c1, st.c2, st.c3, st.d1, st.d2, st.d3])]
    W = st.F * st.dG - st.dF * st.G
    wr = float(np.abs(W * st.E ** 2 - 1).max())
    checks = {"wronskian": _check(wr < 1e-9),
              "initial_conditions": _check(st.F[0] == 1 and st.dF[0] == 0 and st.c3[0] == 0 and st.d1[0] == 0)}
    extra = {"wronskian_error": wr, "F_zero_crossing": st.zero_crossing, "caustic_time": st.caustic_time}
    if params.coupling == 0:
        free_c3 = -(st.times - st.times[0]) / params.mass
        checks["free_limit"] = _check(np.allclose(st.c3, free_c3, atol=1e-12) and np.allclose(st.c2, 1.0))
    if cfg["z_slice"]:
        g = SpatialGrid1D.centered(cfg["z_center"], cfg["z_half_width"], cfg["z_spacing"])
        K = axial.kz(params, st, g.points, cfg["zi"], cfg["t_final"])
        files.append(_write_csv(out / "kernel_z_slice.csv", ["zf", "re", "im"], [g.points, K.real, K.imag]))
    return files, checks, extra


def _cmd_mathieu_check(cfg, params, out):
    import numpy as np
    from .mathieu import mathieu_basis_array, wronskian

    z = np.linspace(0.0, cfg["z_max"], cfg["z_points"])
    we, wep, wo, wop = mathieu_basis_array(cfg["mathieu_a"], cfg["mathieu_q"], z)
    err = np.abs(wronskian(we, wep, wo, wop) - 1.0)
    files = [_write_csv(out / "mathieu_check.csv", ["z", "we", "wep", "wo", "wop", "wronskian_err"],
                        [z, we, wep, wo, wop, err])]
    scale = max(1.0, float(np.abs([we, wep, wo, wop]).max()))
    return files, {"wronskian": _check(err.max() <= 1e-9 * scale)}, {"max_wronskian_error": float(err.max())}


def _propagate_auto(fn, *args, method):
    from .errors import PhaseResolution

    if method != "auto":
        return fn(*args, method=method), method
    try:
        return fn(*args, method="quadrature"), "quadrature"
    except PhaseResolution:
        return fn(*args, method="gaussian"), "gaussian"


def _cmd_evolve(cfg, params, out):
    import numpy as np
    from . import axial, evolution as ev
    from .core import SpatialGrid1D, SpatialGrid2D

    gz = SpatialGrid1D.centered(cfg["z_center"], cfg["z_half_width"], cfg["z_spacing"])
    gxy = SpatialGrid2D.square((0.0, 0.0), cfg["xy_half_width"], cfg["xy_spacing"])
    pz = ev.gaussian_packet(gz, cfg["packet_center"], cfg["packet_width"], cfg["packet_momentum"])
    pxy = ev.gaussian_packet(gxy, (cfg["packet_x"], cfg["packet_y"]), cfg["packet_width_xy"])
    state0 = ev.FullState(pxy, pz, params.g0, 0.0)
    st = axial.build_axial_kernel(params, cfg["t_final"], cfg["kernel_dt"])
    n = cfg["snapshots"]
    times = np.linspace(0.0, cfg["t_final"], n + 1)[1:]
    files, snaps = [], []
    for k, t in enumerate(times):
        pz_t, mz = _propagate_auto(lambda pk, method: ev.propagate_z(params, st, pk, t, method), pz, method=cfg["method"])
        pxy_t, mxy = _propagate_auto(lambda pk, method: ev.propagate_xy(params, pk, t, method), pxy, method=cfg["method"])
        full = ev.evolve_full(params, state0, t, cfg["dt_quad"], method="gaussian", kernel_state=st)
        full = ev.FullState(pxy_t, pz_t, full.field_amplitude, full.global_phase, t)
        a = pz_t.amplitudes
        files.append(_write_csv(out / f"evolve_z_{k:03d}.csv", ["z", "re", "im", "prob"], [gz.points, a.real, a.imag, np.abs(a) ** 2]))
        snaps.append({"t": float(t), "norm_z": pz_t.norm, "norm_xy": pxy_t.norm, "norm_total": full.norm,
                      "z_mean": pz_t.mean_position(), "z2_mean": pz_t.second_moment(),
                      "G_re": full.field_amplitude.real, "G_im": full.field_amplitude.imag,
                      "phi0": full.global_phase, "method_z": mz, "method_xy": mxy})
    drift = max(abs(s["norm_total"] - 1.0) for s in snaps)
    checks = {"norm_drift": _check(drift < 1e-4),
              "norm_factorization": _check(all(abs(s["norm_total"] - s["norm_z"] * s["norm_xy"]) < 1e-14 for s in snaps))}
    return files, checks, {"snapshots": snaps}


def _cmd_oracle_compare(cfg, params, out):
    import numpy as np
    from . import axial, evolution as ev, oracle
    from .core import SpatialGrid1D, TimeGrid

    gz = SpatialGrid1D.centered(cfg["z_center"], cfg["z_half_width"], cfg["z_spacing"])
    pk = ev.gaussian_packet(gz, cfg["packet_center"], cfg["packet_width"], cfg["packet_momentum"])
    st = axial.build_axial_kernel(params, cfg["t_final"], cfg["kernel_dt"])
    times = np.linspace(0.0, cfg["t_final"], cfg["snapshots"] + 1)
    cn = pk
    rows = []
    for a, b in zip(times[:-1], times[1:]):
        cn = oracle.cn_evolve_z(params, cn, TimeGrid.spanning(b, cfg["oracle_dt"], a))
        kp, _ = _propagate_auto(lambda p, method: ev.propagate_z(params, st, p, b, method), pk, method=cfg["method"])
        rows.append((b, kp.l2_distance(cn), kp.norm, cn.norm))
    rows = np.array(rows)
    files = [_write_csv(out / "oracle_compare.csv", ["t", "l2_error_kernel_vs_oracle", "norm_kernel", "norm_oracle"],
                        rows.T)]
    return files, {"l2_below_tol": _check(rows[:, 1].max() < cfg["l2_tol"])}, {"max_l2_error": float(rows[:, 1].max())}


def _cmd_stability_scan(cfg, params, out):
    import math
    from . import oracle
    from .core import SpatialGrid1D

    t_star = cfg["t_star"] if cfg["t_star"] is not None else 2 * math.pi / params.omega
    gz = SpatialGrid1D.centered(cfg["z_center"], cfg["scan_z_half_width"], cfg["scan_z_spacing"])
    rows, ok = oracle.stability_scan(params, cfg["volumes"], t_star, cfg["n_levels"], gz, cfg["scan_dt"],
                                     cfg["packet_width"], cfg["packet_center"], cfg["packet_momentum"], params.g0,
                                     cfg["dt_quad"])
    files = [_write_csv(out / "stability_scan.csv", ["V", "one_minus_fidelity", "purity", "z_mean"],
                        [[r.volume for r in rows], [r.one_minus_fidelity for r in rows],
                         [r.purity for r in rows], [r.z_mean for r in rows]])]
    extra = {"t_star": t_star, "rows": [r.__dict__ for r in rows]}
    return files, {"monotone_decreasing": _check(ok)}, extra


_HANDLERS = {
    "invariant-check": _cmd_invariant_check,
    "kernel-xy": _cmd_kernel_xy,
    "kernel-z": _cmd_kernel_z,
    "mathieu-check": _cmd_mathieu_check,
    "evolve": _cmd_evolve,
    "oracle-compare": _cmd_oracle_compare,
    "stability-scan": _cmd_stability_scan,
}


# --------------------------------------------------------------------- driver

def run(command: str, config_path=None, overrides=(), out_dir=".") -> int:
    """Execute one command; returns the process exit code."""
    from . import __version__
    from ._backend import BACKEND
    from .config import load_config, params_from_config
    from .errors import NumericalError, ValidationError

    t0 = time.perf_counter()
    out = Path(out_dir)
    summary = {"command": command, "version": __version__, "backend": BACKEND, "status": "ok"}
    code = 0
    try:
        if command not in _HANDLERS:
            raise ValidationError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
        cfg = load_config(config_path, overrides)
        summary["config"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(cfg.items())}
        params = params_from_config(cfg)
        from .core import coupling_strength, mathieu_q
        from .magnetic import cyclotron_frequency

        summary["derived"] = {"S": coupling_strength(params), "q": mathieu_q(params),
                              "omega1": cyclotron_frequency(params)}
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ValidationError(f"output directory {out} is not writable: {exc}") from None
        files, checks, extra = _HANDLERS[command](cfg, params, out)
        summary.update({"outputs": files, "checks": checks, "results": extra})
    except ValidationError as exc:
        code = 2
        summary.update({"status": "error", "error": {"type": type(exc).__name__, "message": str(exc)}})
        print(f"error: {exc}", file=sys.stderr)
    except NumericalError as exc:
        code = 3
        summary.update({"status": "error", "error": {"type": type(exc).__name__, "message": str(exc)}})
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
    summary.setdefault("checks", {})
    summary.setdefault("outputs", [])
    summary["wall_time_s"] = time.perf_counter() - t0
    summary["exit_code"] = code
    try:
        if out.is_dir():
            (out / f"{command}.summary.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    except OSError:
        pass
    return code


def _json_default(obj):
    import numpy as np

    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(type(obj).__name__)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="coherent-kernel",
        description="Closed-form propagators for a charged particle coupled to a coherent photon mode, "
                    "with independent grid and grid x Fock checks.",
        epilog="Exit codes: 0 success, 2 validation error, 3 numerical failure.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH", help="key = value configuration file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (repeatable, applied after the file)")
    ap.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
    ap.add_argument("--threads", type=int, default=None, metavar="N",
                    help="upper bound on BLAS/OpenMP threads")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)
    level = os.environ.get("COHERENT_KERNEL_LOG", "error").strip().lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")
    if level not in LOG_LEVELS:
        log.error("COHERENT_KERNEL_LOG=%r not in {error, info, debug}; using error", level)
    return run(args.command, args.config, args.overrides, args.out)


if __name__ == "__main__":
    sys.exit(main())
