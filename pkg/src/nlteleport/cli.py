"""Command-line front end: ``nlteleport <subcommand> [options]``.

Every subcommand accepts ``--config PATH`` (key-value file, see
:mod:`nlteleport.config`; without it the built-in reference setup with all
refractive indices 1.8 is used), ``--out PATH`` (default: stdout),
``--json`` (flat column object instead of CSV) and ``--seed U64``.

Numeric lists take comma-separated items, each a number or a range
``start:stop:step`` that includes start and excludes stop, e.g.
``1:6:0.5,8,10``.  Lists starting with a minus sign need the ``=`` form,
``--ells=-3:4:1``.

Mode text (``--input``, ``--basis``, ``--modes``)::

    mode   := family [":" params] | "sup:" term ("+" term)*
    family := lg (ell=, p=) | hg (n=, m=) | gauss | vortex (ell=) | frac (M=, offset=)
    params := key=value ("," key=value)*      optional w0_um= overrides the waist
    term   := "(" complex "," mode ")"        complex like 1, -0.5, 2i, 1-1i

Mode lists are separated by ``;``.  Without ``w0_um`` modes use the
config's ``w_0``.

Exit codes: 0 success, 1 usage or input error, 2 numerical
non-convergence, 3 a selftest check failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import capacity as cap
from . import pipeline as pl
from .channel import crosstalk_matrix, kernel_quadrature, kernel_thin
from .config import ConfigError, Settings, default_settings, load_config
from .errors import ConvergenceError, ToleranceNotMetError
from .metrics import classical_bound, fidelity_mixed, haar_mc_classical_fidelity
from .modes import format_mode, parse_mode
from .noise import EfficiencyParams, conversion_sigma, procrustean_weights
from .probe import DEFAULT_N_LIST, DiagonalChannel, fit_purity_dimension, probe_visibilities
from .tables import Table
from .tomography import DensityMatrix, projector_set, reconstruct, simulate_counts

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_SELFTEST = 0, 1, 2, 3
U64 = 2**64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def parse_numbers(text: str) -> list[float]:
    """Comma list of numbers and ``start:stop:step`` ranges (stop excluded)."""
    out: list[float] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise UsageError(f"empty item in {text!r}")
        try:
            if ":" in item:
                parts = [float(x) for x in item.split(":")]
                if len(parts) != 3:
                    raise ValueError
                start, stop, step = parts
                if step <= 0:
                    raise UsageError(f"range step must be positive in {item!r}")
                k = 0
                while start + k * step < stop - 1e-12 * max(1.0, abs(stop)):
                    out.append(start + k * step)
                    k += 1
            else:
                out.append(float(item))
        except ValueError:
            raise UsageError(f"cannot parse number or range {item!r}") from None
    return out


def parse_ints(text: str) -> list[int]:
    vals = parse_numbers(text)
    if any(v != int(v) for v in vals):
        raise UsageError(f"expected integers in {text!r}")
    return [int(v) for v in vals]


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text!r}") from None
    if not 0 <= v < U64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


def _modes(text: str, waist: float) -> list:
    return [parse_mode(t, waist) for t in text.split(";") if t.strip()]


def _settings(args) -> Settings:
    return load_config(args.config) if args.config else default_settings()


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_table(args, table: Table) -> None:
    _emit(args, table.to_json() if args.json else table.to_csv())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_crosstalk(args) -> int:
    s = _settings(args)
    cfg = s.config
    if args.modes:
        prepared = _modes(args.modes, cfg.w_0)
    else:
        prepared = cap.basis_modes(args.basis, cfg.w_0, parse_ints(args.ells))
    detected = _modes(args.detected, cfg.w_0) if args.detected else prepared
    if args.kernel == "thin":
        kernel = kernel_thin(cfg, args.approx)
        grid = s.grid()
    else:
        grid = s.grid() if s.grid_n is not None else None
        kernel = kernel_quadrature(cfg, grid=grid, tolerance=args.tolerance, approx=args.approx, max_n=args.max_n)
        grid = kernel.grid
    m = crosstalk_matrix(kernel, prepared, detected, args.normalization, grid=grid, workers=args.workers)
    t = Table(["prepared", "detected", "P"])
    for j, p in enumerate(m.prepared):
        for i, d in enumerate(m.detected):
            t.add(p, d, m.P[i, j])
    _emit_table(args, t)
    return EXIT_OK


def cmd_capacity(args) -> int:
    cfg = _settings(args).config
    scan = cap.capacity_scan(cfg, parse_numbers(args.alphas), parse_numbers(args.betas), args.basis, parse_ints(args.ells), workers=args.workers)
    if args.json:
        _emit(args, json.dumps(scan.columns(), indent=1) + "\n")
    else:
        _emit(args, scan.to_csv())
    return EXIT_OK


def cmd_probe(args) -> int:
    n_list = parse_ints(args.n_list)
    if args.visibilities:
        vis = parse_numbers(args.visibilities)
        if len(vis) != len(n_list):
            raise UsageError("--visibilities needs one value per --n-list entry")
    else:
        if args.from_config:
            chan = pl.channel_lambdas(_settings(args).config)
        else:
            chan = DiagonalChannel.flat(args.dim)
        vis = probe_visibilities(chan, n_list, args.purity, args.noise_dim or len(chan.support))
    fit = fit_purity_dimension(list(zip(n_list, vis)))
    t = Table(["n", "V_n", "p_fit", "K_fit", "residual", "indeterminate"])
    for row in fit.rows():
        t.add(*row, fit.indeterminate)
    _emit_table(args, t)
    return EXIT_OK


def _state(text: str) -> np.ndarray:
    parts = [p.strip().replace("i", "j") for p in text.split(",")]
    try:
        psi = np.array([complex(p if p not in ("j", "-j", "+j") else p.replace("j", "1j")) for p in parts])
    except ValueError:
        raise UsageError(f"cannot parse state amplitudes {text!r}") from None
    if np.linalg.norm(psi) == 0:
        raise UsageError("state vector is zero")
    return psi / np.linalg.norm(psi)


def cmd_tomo(args) -> int:
    psi = _state(args.state)
    d = psi.size
    rho_in = DensityMatrix.isotropic(psi, args.purity)
    projs = projector_set(d, args.scheme)
    recs = simulate_counts(rho_in, projs, args.counts, args.accidental, seed=args.seed, poisson=args.poisson)
    rho = reconstruct(recs, d, args.method)
    fid = fidelity_mixed(rho, psi)
    if args.json:
        payload = {
            "re": [[float(x) for x in row] for row in rho.matrix.real],
            "im": [[float(x) for x in row] for row in rho.matrix.imag],
            "fidelity": fid,
        }
        _emit(args, json.dumps(payload, indent=1) + "\n")
    else:
        _emit(args, rho.to_csv())
    print(f"fidelity {fid!r}", file=sys.stderr)
    return EXIT_OK


def cmd_teleport(args) -> int:
    cfg = _settings(args).config
    if args.state:
        if args.state not in pl.NAMED_STATES:
            raise UsageError(f"unknown state {args.state!r}; choose from {', '.join(pl.NAMED_STATES)}")
        mode, basis, _ = pl.named_state(args.state, cfg.w_0)
    elif args.input and args.basis:
        mode, basis = parse_mode(args.input, cfg.w_0), _modes(args.basis, cfg.w_0)
    else:
        raise UsageError("give --state, or both --input and --basis")
    res = pl.teleport_state(cfg, mode, basis, noise=args.noise, flatten=not args.no_flatten)
    t = Table(["mode", "prepared", "detected", "similarity", "fidelity", "fidelity_noisy", "throughput"])
    for b, pre, det in zip(basis, res.prepared, res.detected):
        t.add(format_mode(b, cfg.w_0), pre, det, res.similarity, res.fidelity, res.fidelity_noisy, res.throughput)
    _emit_table(args, t)
    return EXIT_OK


def cmd_bound(args) -> int:
    b = classical_bound(args.d)
    if not args.mc:
        if args.json:
            _emit(args, json.dumps({"d": [args.d], "bound": [b]}) + "\n")
        elif args.out:
            t = Table(["d", "bound"])
            t.add(args.d, b)
            _emit_table(args, t)
        else:
            print(f"{b:g}")
        return EXIT_OK
    res = haar_mc_classical_fidelity(args.d, args.strategy, args.samples, args.seed, args.workers)
    t = Table(["d", "bound", "strategy", "samples", "mc_mean", "mc_stderr"])
    t.add(args.d, b, args.strategy, res.samples, res.mean, res.stderr)
    _emit_table(args, t)
    return EXIT_OK


def cmd_efficiency(args) -> int:
    cfg = _settings(args).config
    p = EfficiencyParams.from_beam(
        args.chi2_pm_v * 1e-12,
        args.power_w,
        (args.waist_um * 1e-6) if args.waist_um else cfg.w_p,
        (cfg.lambda_p, cfg.lambda_B, cfg.lambda_C),
        (cfg.n_p, cfg.n_B, cfg.n_C),
    )
    length = args.length_mm * 1e-3 if args.length_mm else cfg.L_D
    t = Table(["sigma_per_m", "length_m", "sigma_L", "efficiency"])
    s = conversion_sigma(p)
    sl = conversion_sigma(p, length)
    t.add(s, length, sl, math.sin(sl) ** 2)
    _emit_table(args, t)
    return EXIT_OK


def selftest_checks(seed: int = 0) -> Table:
    """A fast deterministic pass over the core invariants."""
    from .channel import OpticalConfig
    from .modes import PhaseVortex

    t = Table(["check", "value", "threshold", "passed"])
    t.add("bound_d3", classical_bound(3), 0.5, classical_bound(3) == 0.5)

    worst = max(abs(cap.schmidt_from_spectrum(np.ones(d)) - d) for d in range(2, 26))
    t.add("flat_schmidt_equals_d", worst, 1e-9, worst <= 1e-9)

    cfg = OpticalConfig.default().with_ratios(2.7, 1.1)
    modes = [PhaseVortex(l, cfg.w_0) for l in range(-5, 6)]
    P = crosstalk_matrix(kernel_thin(cfg), modes, modes).P
    off = float(np.max(P - np.diag(np.diag(P))) / P.max())
    t.add("oam_selection_rule", off, 1e-6, off <= 1e-6)

    ks = [cap.modal_capacity(OpticalConfig.default().with_ratios(a, b)) for b, a in pl.SPIRAL_SETTINGS]
    t.add("capacity_ordering", ks[2] - ks[0], 0.0, ks[0] < ks[1] < ks[2])

    diag = cap.modal_spectrum(cfg)
    flat = diag * procrustean_weights(diag).weights
    k_flat = cap.schmidt_from_spectrum(flat)
    t.add("procrustean_flattening", abs(k_flat - diag.size), 1e-9, abs(k_flat - diag.size) <= 1e-9)

    mc = haar_mc_classical_fidelity(2, "optimal-projective", 20_000, seed)
    t.add("haar_mc_d2", abs(mc.mean - 2 / 3), 0.01, abs(mc.mean - 2 / 3) <= 0.01)

    psi = np.ones(3) / math.sqrt(3)
    recs = simulate_counts(DensityMatrix.pure(psi), projector_set(3), 1e6, seed=seed, poisson=True)
    fid = fidelity_mixed(reconstruct(recs, 3), psi)
    t.add("tomography_qutrit", fid, 0.999, fid >= 0.999)

    curve = pl.visibility_curve(DiagonalChannel.flat(3), 1, np.linspace(0, np.pi, 181))
    v = pl.curve_visibility(curve)
    t.add("fringe_visibility", abs(1 - v), 1e-6, abs(1 - v) <= 1e-6)
    return t


def cmd_selftest(args) -> int:
    t = selftest_checks(args.seed)
    _emit_table(args, t)
    return EXIT_OK if all(t.column("passed")) else EXIT_SELFTEST


def cmd_figures(args) -> int:
    cfg = _settings(args).config
    only = args.only.split(",") if args.only else None
    if only and any(o not in pl.FIGURES for o in only):
        raise UsageError(f"--only accepts {', '.join(pl.FIGURES)}")
    paths = pl.write_figures(cfg, args.outdir, args.json, only)
    for p in paths.values():
        print(p)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key-value config file")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    common.add_argument("--seed", type=_seed, default=0, help="unsigned 64-bit seed (default 0)")
    common.add_argument("--workers", type=int, default=1, help="threads for independent evaluations")

    p = _Parser(prog="nlteleport", description=__doc__.split("\n\n")[0], formatter_class=argparse.RawDescriptionHelpFormatter, epilog=__doc__.split("\n\n", 1)[1])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("crosstalk", parents=[common], help="channel crosstalk matrix")
    c.add_argument("--modes", help="prepared modes, ';'-separated")
    c.add_argument("--detected", help="detected modes (default: prepared)")
    c.add_argument("--basis", choices=["vortex", "lg", "hg"], default="vortex")
    c.add_argument("--ells", default="-5:6:1", help="OAM values for --basis (default -5:6:1)")
    c.add_argument("--kernel", choices=["thin", "quadrature"], default="thin")
    c.add_argument("--approx", choices=["sinc", "gaussian"], default="sinc")
    c.add_argument("--tolerance", type=float, default=1e-6, help="quadrature refinement tolerance")
    c.add_argument("--max-n", type=int, default=256, help="largest quadrature grid")
    c.add_argument("--normalization", choices=["raw", "column"], default="raw")
    c.set_defaults(func=cmd_crosstalk)

    c = sub.add_parser("capacity", parents=[common], help="Schmidt number over (alpha, beta)")
    c.add_argument("--alphas", required=True, help="w_p / w_0 values")
    c.add_argument("--betas", required=True, help="w_p / w_D values")
    c.add_argument("--basis", choices=["vortex", "lg", "hg"], default="vortex")
    c.add_argument("--ells", default="-5:6:1")
    c.set_defaults(func=cmd_capacity)

    c = sub.add_parser("probe", parents=[common], help="fractional-probe visibilities and (p, K) fit")
    c.add_argument("--n-list", default=",".join(map(str, DEFAULT_N_LIST)))
    c.add_argument("--visibilities", help="measured V_n to fit, one per --n-list entry")
    c.add_argument("--purity", type=float, default=1.0)
    c.add_argument("--dim", type=int, default=10, help="flat channel dimension for forward modelling")
    c.add_argument("--noise-dim", type=int, help="dimension of the noise term (default: channel support)")
    c.add_argument("--from-config", action="store_true", help="use the config's vortex spectrum")
    c.set_defaults(func=cmd_probe)

    c = sub.add_parser("tomo", parents=[common], help="simulated tomography round trip")
    c.add_argument("--state", default="1,1,1", help="comma-separated amplitudes, e.g. 1,1i,-1")
    c.add_argument("--purity", type=float, default=1.0)
    c.add_argument("--counts", type=float, default=1e5)
    c.add_argument("--accidental", type=float, default=0.0)
    c.add_argument("--poisson", action="store_true", help="draw Poisson counts from --seed")
    c.add_argument("--method", choices=["max-likelihood", "linear-inversion"], default="max-likelihood")
    c.add_argument("--scheme", choices=["mub-complete", "pairwise-overcomplete"], default="mub-complete")
    c.set_defaults(func=cmd_tomo)

    c = sub.add_parser("teleport", parents=[common], help="teleport a state through the channel")
    c.add_argument("--state", help=f"named state: {', '.join(pl.NAMED_STATES)}")
    c.add_argument("--input", help="input mode text")
    c.add_argument("--basis", help="';'-separated readout basis")
    c.add_argument("--noise", type=float, default=0.0, help="accidental floor per projection, relative to the mean")
    c.add_argument("--no-flatten", action="store_true", help="skip Procrustean filtering")
    c.set_defaults(func=cmd_teleport)

    c = sub.add_parser("bound", parents=[common], help="classical fidelity bound 2/(d+1)")
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--mc", action="store_true", help="also run the Haar Monte Carlo")
    c.add_argument("--strategy", choices=["optimal-projective", "fixed-guess"], default="optimal-projective")
    c.add_argument("--samples", type=int, default=100_000)
    c.set_defaults(func=cmd_bound)

    c = sub.add_parser("efficiency", parents=[common], help="SFG conversion parameter sigma")
    c.add_argument("--chi2-pm-v", type=float, required=True, help="effective chi2 in pm/V")
    c.add_argument("--power-w", type=float, required=True)
    c.add_argument("--waist-um", type=float, help="pump waist (default w_p from config)")
    c.add_argument("--length-mm", type=float, help="crystal length (default l_d_mm)")
    c.set_defaults(func=cmd_efficiency)

    c = sub.add_parser("selftest", parents=[common], help="deterministic invariant checks")
    c.set_defaults(func=cmd_selftest)

    c = sub.add_parser("figures", parents=[common], help="write per-figure tables")
    c.add_argument("--outdir", default="figures")
    c.add_argument("--only", help="comma list of figure names")
    c.set_defaults(func=cmd_figures)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, ToleranceNotMetError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
