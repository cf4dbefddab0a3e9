"""Command-line entry point: ``optomech-link <command> [--config FILE] ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 oracle residual
above its bound.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import PROTOCOLS, ConfigError, RunConfig, describe, load_config
from .oracle import (
    OracleConfig,
    closed_form_channel,
    decoupled_channel,
    extrapolated_channel,
    simulate_channel,
    steps_for,
)
from .results import ResultTable, stamp
from .sideband import epr_variance_closed_form
from .teleportation import (
    CLASSICAL_FIDELITY,
    NO_CLONING_FIDELITY,
    TeleportConfig,
    optimize_r,
    teleport_fidelity,
)
from .transfer import RECEIVER, SENDER, PulseShape, optimize_pulse_params, transfer_weights

EXIT_OK, EXIT_USAGE, EXIT_BOUND = 0, 1, 2


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))  # map keeps input order


def _r_opt(n_T: float, gamma_over_G: float) -> float:
    return optimize_r(n_T, gamma_over_G).r_opt


# ---------------------------------------------------------------------------
# protocols


def run_epr(cfg: RunConfig, threads: int = 1) -> ResultTable:
    """EPR variance along ``r`` or along the bath temperature.

    An ``r`` sweep uses the device damping; a temperature sweep is repeated
    for every listed damping value at a fixed ``r`` (the optimum at the
    configured environment unless ``epr.r`` is a number).
    """
    block, axis = cfg.block, cfg.sweep["name"] if cfg.sweep else "r"
    values = cfg.sweep_values() if cfg.sweep else np.array([0.0])
    if axis == "r":
        n_T = cfg.occupation()
        gq = cfg.device_params().gamma_over_G

        def row(r):
            return [float(r), epr_variance_closed_form(r, n_T, 0.0), epr_variance_closed_form(r, n_T, gq)]

        return ResultTable(["r", "delta_epr_ideal", "delta_epr_full"], _map(row, values, threads))

    rows = []
    for damping in block["gamma_over_omega_m_values"]:
        gq = cfg.device_params(gamma_over_omega_m=damping).gamma_over_G
        r = block["r"] if block["r"] != "optimized" else _r_opt(cfg.occupation(), gq)

        def row(T, gq=gq, r=r, damping=damping):
            n_T = cfg.occupation(T)
            return [
                damping, float(T), n_T, float(r),
                epr_variance_closed_form(r, n_T, 0.0), epr_variance_closed_form(r, n_T, gq),
            ]

        rows.extend(_map(row, values, threads))
    cols = ["gamma_over_omega_m", "temperature_K", "n_T", "r", "delta_epr_ideal", "delta_epr_full"]
    return ResultTable(cols, rows)


def run_teleport(cfg: RunConfig, threads: int = 1) -> ResultTable:
    """Coherent-state teleportation fidelity per damping value.

    Rows carry the classical (1/2) and no-cloning (2/3) bounds as columns.
    """
    b = cfg.block
    axis = cfg.sweep["name"] if cfg.sweep else "x_in"
    values = cfg.sweep_values() if cfg.sweep else np.array([b["x_in"]])
    rows = []
    for damping in b["gamma_over_omega_m_values"]:
        dev = cfg.device_params(gamma_over_omega_m=damping)

        def row(x, dev=dev, damping=damping):
            T = float(x) if axis == "temperature_K" else None
            n_T = cfg.occupation(T)
            x_in = float(x) if axis == "x_in" else b["x_in"]
            base = TeleportConfig(dev, dev, 0.0, b["eta"], n_T, x_in, b["p_in"])
            if b["r"] == "optimized":
                opt = optimize_r(n_T, dev.gamma_over_G, b["objective"], base)
                r = opt.r_opt
            else:
                r = float(b["r"])
            fid = teleport_fidelity(base.with_(r=r))
            return [damping, float(x), n_T, r, fid, CLASSICAL_FIDELITY, NO_CLONING_FIDELITY]

        rows.extend(_map(row, values, threads))
    cols = ["gamma_over_omega_m", axis, "n_T", "r", "fidelity", "classical_bound", "no_cloning_bound"]
    return ResultTable(cols, rows)


def run_transfer(cfg: RunConfig, threads: int = 1) -> ResultTable:
    """Squared transfer weights along ``tau`` or damping, or the pulse shapes."""
    b = cfg.block
    dev = cfg.device_params()
    tau = b["tau_kappa"] / dev.kappa
    if b["table"] == "pulse_shape":
        n = cfg.sweep["points"] if cfg.sweep else 201
        t = np.linspace(0.0, tau, n)
        S = PulseShape(SENDER, b["mu_S"], dev.G, tau).value(t)
        R = PulseShape(RECEIVER, b["mu_R"], dev.G, tau).value(t)
        rows = [[float(a * dev.kappa), float(s), float(r)] for a, s, r in zip(t, S, R)]
        return ResultTable(["t_kappa", "S", "R"], rows)

    axis = cfg.sweep["name"] if cfg.sweep else "tau_kappa"
    values = cfg.sweep_values() if cfg.sweep else np.array([b["tau_kappa"]])

    def row(x):
        if axis == "tau_kappa":
            w = transfer_weights(dev, b["mu_S"], b["mu_R"], float(x) / dev.kappa)
        else:
            w = transfer_weights(cfg.device_params(gamma_over_omega_m=float(x)), b["mu_S"], b["mu_R"], tau)
        return [float(x), *w.squared]

    return ResultTable([axis, "W_TA_sq", "W_D_sq", "W_TM_sq"], _map(row, values, threads))


def run_optimize(cfg: RunConfig, threads: int = 1) -> ResultTable:
    b = cfg.block
    if b["target"] == "pulse_params":
        dev = cfg.device_params()
        opt = optimize_pulse_params(dev, b["tau_kappa"] / dev.kappa)
        cols = ["mu_S", "mu_R", "W_TM_sq", "grid_mu_S", "grid_mu_R", "n_evals", "plateau", "converged"]
        return ResultTable(
            cols,
            [[opt.mu_S, opt.mu_R, opt.value, opt.grid_mu_S, opt.grid_mu_R, opt.n_evals, opt.plateau, opt.converged]],
        )

    n_T = cfg.occupation()

    def row(damping):
        dev = cfg.device_params(gamma_over_omega_m=damping)
        base = TeleportConfig(dev, dev, 0.0, b["eta"], n_T, b["x_in"], 0.0)
        opt = optimize_r(n_T, dev.gamma_over_G, b["objective"], base)
        return [
            damping, opt.r_opt, opt.value, opt.grid_r_opt, opt.n_evals, opt.unbounded, opt.entangled,
        ]

    cols = ["gamma_over_omega_m", "r_opt", "objective_value", "grid_r_opt", "n_evals", "plateau", "entangled"]
    return ResultTable(cols, _map(row, b["gamma_over_omega_m_values"], threads))


def run_oracle(cfg: RunConfig, threads: int = 1) -> tuple[ResultTable, bool]:
    """Oracle-versus-closed-form residual table; second value is True if all
    residuals are within their bounds."""
    b = cfg.block
    n_T = cfg.occupation()
    cases = [(side, ratio) for side in b["sidebands"] for ratio in b["coupling_over_kappa_values"]]

    def row(case):
        side, ratio = case
        dev = cfg.device_params(coupling_over_kappa=ratio)
        if dev.G == 0:
            tau = b["G_tau"] / cfg.device_params().G
        else:
            tau = b["G_tau"] / dev.G
        oc = OracleConfig(dev, side, tau, steps_for(dev, tau, b["kappa_dt"]), n_T=n_T)
        sim = simulate_channel(oc)
        if b["extrapolate"]:
            K, N, _ = extrapolated_channel(oc)
        else:
            K, N = sim.K, sim.N
        if dev.G == 0:
            ref = decoupled_channel(dev, tau, n_T)
        else:
            ref = closed_form_channel(dev, side, tau, n_T)
        ref_K, ref_N = ref.K, ref.N
        k_res = float(np.max(np.abs(K - ref_K)))
        n_res = float(np.max(np.abs(N - ref_N)))
        # elimination error ~ (g/kappa)^2; the closed form also drops O(gamma/G) terms,
        # amplified by the channel gain
        scale = ratio**2 + b["gamma_bound_factor"] * dev.gamma_over_G * float(np.max(np.abs(ref_K)))
        k_bound = b["k_bound_factor"][side] * scale + b["residual_floor"]
        # noise errors grow with the thermal input they act on
        n_bound = b["n_bound_factor"][side] * scale * (2 * n_T + 1) + b["residual_floor"]
        ok = k_res <= k_bound and n_res <= n_bound and sim.symplectic_defect <= b["defect_bound"]
        return [side, ratio, float(b["G_tau"]), oc.n_steps, k_res, n_res, sim.symplectic_defect, k_bound, n_bound, ok]

    rows = _map(row, cases, threads)
    cols = [
        "sideband", "coupling_over_kappa", "G_tau", "n_steps", "K_residual", "N_residual",
        "symplectic_defect", "K_bound", "N_bound", "within_bounds",
    ]
    return ResultTable(cols, rows), all(r[-1] for r in rows)


RUNNERS = {
    "epr": run_epr,
    "teleport": run_teleport,
    "transfer": run_transfer,
    "optimize": run_optimize,
}


# ---------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="optomech-link", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in PROTOCOLS:
        p = sub.add_parser(name, help=f"run the {name} protocol")
        p.add_argument("--config", help="JSON run configuration (defaults if omitted)")
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweep points")
    sub.add_parser("describe", help="print the configuration schema with defaults")
    return parser


def run(cfg: RunConfig, threads: int = 1) -> tuple[ResultTable, int]:
    if cfg.protocol == "oracle":
        table, ok = run_oracle(cfg, threads)
        status = EXIT_OK if ok else EXIT_BOUND
    else:
        table, status = RUNNERS[cfg.protocol](cfg, threads), EXIT_OK
    table = table.with_reasons(["non-finite result"] * len(table.rows))
    table.meta["protocol"] = cfg.protocol
    return stamp(table, cfg.digest()), status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "describe":
        print(json.dumps(describe(), indent=2))
        return EXIT_OK
    if args.threads < 1:
        print("optomech-link: error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config, args.command)
        table, status = run(cfg, args.threads)
    except ConfigError as exc:
        print(f"optomech-link: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = table.render(args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if status == EXIT_BOUND:
        print("optomech-link: oracle residual above bound", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
