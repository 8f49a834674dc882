"""Command-line front end: ``nmqrt <command> --config <path> [--out DIR] [--strict] [--plot]``.

Exit status 0 on success, 2 on invalid input, 3 when a numerical
cross-check fails under ``--strict``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import tolerances as tol
from .errors import StabilityError, ToleranceError, ValidationError

log = logging.getLogger("nmqrt")

COMMANDS = ("evolve", "correlate", "kernels", "balance", "fig1", "fig2", "fig3", "fig4", "fig5")


def _model_meta(model):
    e = model.ensemble
    meta = {
        "n_th": model.n_th,
        "gamma_phi": model.gamma_phi,
        "omega_rabi": model.omega_rabi,
        "omega_A": model.omega_A if model.omega_A is not None else "unset",
        "rates": " ".join(f"{r:.17g}" for r in e.rates),
        "weights": " ".join(f"{w:.17g}" for w in e.weights),
    }
    if e.exponential is not None:
        meta["exponential"] = " ".join(f"{v:.17g}" for v in e.exponential)
    return meta


def _tol_meta():
    return {
        "tol_structure": tol.STRUCTURE,
        "tol_propagation": tol.PROPAGATION,
        "tol_quadrature": tol.QUADRATURE,
    }


def _check(ok, message, strict, meta):
    meta["cross_check"] = "pass" if ok else "FAIL"
    if not ok:
        if strict:
            raise ToleranceError(message)
        log.warning(message)


def cmd_evolve(cfg, out, strict, **_):
    from .dynamics import ensemble_density
    from .tls import driven_volterra, free_decay_volterra

    model, run = cfg.model, cfg.run
    tgrid = run["tgrid"] if run["tgrid"] is not None else np.linspace(0, 10, 201)
    exact = ensemble_density(model, run["rho0"], tgrid, workers=run["workers"])
    meta = {"command": "evolve", "method": run["method"], **_model_meta(model), **_tol_meta()}
    traj = exact
    if run["method"] == "volterra":
        solve = driven_volterra if model.omega_rabi > 0 else free_decay_volterra
        traj = solve(model, run["rho0"], tgrid, strict=strict)
        gap = float(np.abs(traj.bloch - exact.bloch).max())
        meta["sup_gap_to_ensemble"] = gap
        _check(gap <= tol.QUADRATURE, f"Volterra solution deviates from the ensemble average by {gap:.3g}", strict, meta)
    return [traj.to_csv(out / "evolve.csv", meta)]


def cmd_correlate(cfg, out, strict, **_):
    from .correlations import correlate

    model, run = cfg.model, cfg.run
    taus = run["taugrid"] if run["taugrid"] is not None else np.linspace(0, 20, 401)
    g = correlate(model, run["O"], run["A"], run["rho0"], run["t"], taus, workers=run["workers"])
    meta = {"command": "correlate", "O": run["O_name"], "A": run["A_name"], **_model_meta(model), **_tol_meta()}
    resid = float(np.abs(g.deviation - (g.exact - g.qrt)).max())
    meta["deviation_crosscheck"] = resid
    _check(resid <= tol.STRUCTURE, f"deviation cross-check residual {resid:.3g}", strict, meta)
    return [g.to_csv(out / "correlate.csv", meta)]


def cmd_kernels(cfg, out, strict, **_):
    from .dynamics import laplace_kernel
    from .errors import SingularityError
    from .io import write_csv
    from .tls import driven_kernels, population_kernel

    model, run = cfg.model, cfg.run
    ugrid = run["ugrid"] if run["ugrid"] is not None else np.logspace(-2, 2, 41)
    e, gphi, om = model, model.gamma_phi, model.omega_rabi
    k = driven_kernels(e, gphi, om, ugrid)
    K = population_kernel(e, ugrid)
    resid, skipped = 0.0, []
    for i, u in enumerate(ugrid):
        try:
            M = laplace_kernel(model, u)[0].matrix
        except SingularityError:
            skipped.append(u)
            continue
        closed = [k.gamma_x[i], k.gamma_y[i], k.gamma_z[i], om + k.upsilon[i]]
        engine = [M[1, 1], M[2, 2], M[3, 3], M[2, 3]]
        resid = max(resid, float(np.max(np.abs(np.array(closed) - np.array(engine)))))
    meta = {"command": "kernels", **_model_meta(model), "engine_residual": resid}
    if skipped:
        meta["skipped_u"] = " ".join(f"{u:.17g}" for u in skipped)
    _check(resid <= 1e-9, f"closed-form kernels differ from the ensemble engine by {resid:.3g}", strict, meta)
    header = ["u", "K", "K_Phi", "Gamma_X", "Gamma_Y", "Gamma_Z", "Upsilon", "B", "C", "D"]
    cols = [K, k.gamma_x, k.gamma_x, k.gamma_y, k.gamma_z, k.upsilon, k.B, k.C, k.D]
    rows = np.column_stack([ugrid, *[np.real(c) for c in cols]])
    return [write_csv(out / "kernels.csv", header, rows, meta)]


def cmd_balance(cfg, out, strict, **_):
    from .balance import balance_report, nonmarkovian_db_check
    from .tls import memory_superop

    model, run = cfg.model, cfg.run
    report = balance_report(model, run["u_samples"])
    closed = nonmarkovian_db_check(
        model,
        report.nonmarkovian.u_samples,
        memory=lambda u: memory_superop(model, model.gamma_phi, model.omega_rabi, model.n_th, u),
    )
    diff = float(np.max(np.abs(np.subtract(closed.residuals, report.nonmarkovian.residuals)), initial=0.0))
    report.notes.append(f"closed-form memory superoperator reproduces the residuals to {diff:.3g}")
    if diff > 1e-9:
        msg = f"closed-form and engine balance residuals differ by {diff:.3g}"
        if strict:
            raise ToleranceError(msg)
        log.warning(msg)
    log.info("verdict %s (max |Xi| = %.3g)", report.verdict, report.magnitude)
    return [report.to_json(out / "balance.json")]


def cmd_figure(name):
    def run(cfg, out, strict, plot=False, **_):
        from . import figures

        taus = cfg.run["taugrid"] if name != "fig2" else cfg.run["tgrid"]
        data = figures.FIGURES[name](taus)
        paths = [data.to_csv(out / f"{name}.csv")]
        if plot:
            from .plotting import render

            paths.append(render(data, out / f"{name}.png"))
        failed = [k for k, ok in data.checks.items() if not ok]
        if failed:
            msg = f"{name}: ordering checks failed: {', '.join(failed)}"
            if strict:
                raise ToleranceError(msg)
            log.warning(msg)
        return paths

    return run


HANDLERS = {
    "evolve": cmd_evolve,
    "correlate": cmd_correlate,
    "kernels": cmd_kernels,
    "balance": cmd_balance,
    **{f"fig{k}": cmd_figure(f"fig{k}") for k in range(1, 6)},
}


def build_parser():
    p = argparse.ArgumentParser(prog="nmqrt", description="Random-rate Lindblad ensembles: dynamics, correlations, QRT audits.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="INI experiment configuration")
    p.add_argument("--out", help="output directory (default: [run] output or ./out)")
    p.add_argument("--strict", action="store_true", help="turn numerical cross-check failures into exit status 3")
    p.add_argument("--plot", action="store_true", help="also render figure commands to PNG next to the CSV")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    from .config import load_config

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config, need_model=not args.command.startswith("fig"))
        if cfg.run["command"] and cfg.run["command"] != args.command:
            raise ValidationError(f"{args.config}: config is for command {cfg.run['command']!r}, not {args.command!r}")
        out = Path(args.out or cfg.run["output"] or "out")
        out.mkdir(parents=True, exist_ok=True)
        paths = HANDLERS[args.command](cfg, out, args.strict, plot=args.plot)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ToleranceError, StabilityError) as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return 3
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
