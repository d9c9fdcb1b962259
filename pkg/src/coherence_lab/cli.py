"""Command-line experiment runner.

Subcommands: split, chsh, evolve, scan, series. Parameters come from flags
or from a JSON config file (``--config``; flags override file values, keys
use the flag names with underscores). Randomized commands require an
explicit ``--seed``; outputs are byte-identical for identical config+seed.

Exit codes: 0 success, 2 validation/config error, 3 numerical failure.
The COHERENCE_LAB_THREADS environment variable caps internal parallelism
(0 = one thread per CPU).
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

import numpy as np

from . import bell, dynamics, fock, serialize, spin, splitting
from .errors import ConfigError, NumericalError, ValidationError
from .qcore import StateVector
from .serialize import SCHEMA_VERSION, parse_complex


def _seed_value(raw) -> int:
    seed = int(raw)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must fit in 64 unsigned bits")
    return seed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coherence-lab",
        description="coherent-state splitting, CHSH analysis, and phase-space dynamics")
    parser.add_argument("--config", help="JSON file with default parameter values")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=["json", "csv"],
                       help="output format (default depends on the command)")

    p = sub.add_parser("split", help="split a coherent state and classify the result")
    p.add_argument("--system", choices=["fock", "spin"])
    p.add_argument("--alpha", help="coherent amplitude a+bi (fock)")
    p.add_argument("--N", type=int, help="Fock cutoff (fock)")
    p.add_argument("--mu", help="beamsplitter coefficient for output B")
    p.add_argument("--nu", help="beamsplitter coefficient for output C")
    p.add_argument("--jA", type=float, help="system spin (spin)")
    p.add_argument("--jB", type=float, help="first subsystem spin (spin)")
    p.add_argument("--jC", type=float, help="second subsystem spin (spin)")
    p.add_argument("--zeta", help="spin coherent-state coordinate a+bi")
    p.add_argument("--theta", type=float, help="polar angle alternative to --zeta")
    p.add_argument("--phi", type=float, default=0.0, help="azimuth for --theta")
    p.add_argument("--save-state", dest="save_state",
                   help="also write the split state as JSON")
    add_common(p)

    p = sub.add_parser("chsh", help="maximize the CHSH quantity on a bipartite state")
    p.add_argument("--state",
                   help="named state (e.g. split-spin1-m0) or a state JSON file")
    p.add_argument("--strategy", default="analytic-qubit",
                   choices=["analytic-qubit", "multistart", "multistart-local-search"])
    p.add_argument("--n-starts", dest="n_starts", type=int, default=32)
    p.add_argument("--seed", help="required for the multistart strategy")
    p.add_argument("--tol", type=float, default=1e-7)
    add_common(p)

    p = sub.add_parser("evolve", help="integrate a trajectory and emit CSV")
    p.add_argument("--system", choices=["fock", "spin"], default="fock")
    p.add_argument("--drive", choices=["constant", "sinusoid", "exponential"],
                   default="constant")
    p.add_argument("--lambda", dest="lam", default="0",
                   help="drive amplitude a+bi on the creation operator")
    p.add_argument("--omega", type=float, help="oscillator frequency")
    p.add_argument("--drive-frequency", dest="drive_frequency", type=float,
                   default=0.0)
    p.add_argument("--drive-phase", dest="drive_phase", type=float, default=0.0)
    p.add_argument("--N", type=int, help="Fock cutoff (fock)")
    p.add_argument("--initial-alpha", dest="initial_alpha",
                   help="start from this coherent state (fock; default vacuum)")
    p.add_argument("--j", type=float, help="spin magnitude (spin)")
    p.add_argument("--beta0", type=float, help="J0 coefficient (spin)")
    p.add_argument("--beta-plus", dest="beta_plus", default="0",
                   help="J+ coefficient a+bi (spin)")
    p.add_argument("--zeta0", help="initial spin coherent state a+bi")
    p.add_argument("--theta0", type=float, help="initial polar angle (spin)")
    p.add_argument("--phi0", type=float, default=0.0)
    p.add_argument("--tmax", type=float)
    p.add_argument("--samples", type=int, default=129,
                   help="number of grid points including t=0")
    add_common(p)

    p = sub.add_parser("scan", help="seeded uniqueness scan over random states")
    p.add_argument("--system", choices=["fock", "spin"])
    p.add_argument("--N", type=int, help="Fock cutoff (fock)")
    p.add_argument("--mu", help="beamsplitter coefficient (fock)")
    p.add_argument("--nu", help="beamsplitter coefficient (fock)")
    p.add_argument("--jA", type=float)
    p.add_argument("--jB", type=float)
    p.add_argument("--jC", type=float)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--seed")
    add_common(p)

    p = sub.add_parser("series", help="solve the splitting functional equation")
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--mu", default="1")
    p.add_argument("--nu", default="1")
    add_common(p)

    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _require(args, names) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise ConfigError(f"missing required parameter(s): {', '.join(missing)}")


_CHOICE_FIELDS = {
    "system": {"fock", "spin"},
    "strategy": {"analytic-qubit", "multistart", "multistart-local-search"},
    "drive": {"constant", "sinusoid", "exponential"},
    "format": {"json", "csv"},
}


def _validate_choices(args) -> None:
    """Choice validation for values that arrived through a config file."""
    for field, allowed in _CHOICE_FIELDS.items():
        value = getattr(args, field, None)
        if value is not None and value not in allowed:
            raise ConfigError(f"invalid {field} {value!r}; choose from {sorted(allowed)}")


def _check_format(args, expected: str) -> None:
    if args.format is not None and args.format != expected:
        raise ConfigError(f"command {args.command!r} emits {expected} reports")


def _split_spec(args) -> fock.SplitSpec:
    if (args.mu is None) != (args.nu is None):
        raise ConfigError("give both --mu and --nu or neither")
    if args.mu is None:
        return fock.SplitSpec.balanced()
    try:
        return fock.SplitSpec(parse_complex(args.mu), parse_complex(args.nu))
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def _spin_cs_params(j, zeta, theta, phi) -> spin.SpinCsParams:
    if (zeta is None) == (theta is None):
        raise ConfigError("give exactly one of --zeta or --theta")
    if zeta is not None:
        return spin.SpinCsParams(j=j, zeta=parse_complex(zeta))
    return spin.SpinCsParams.from_angles(j, theta, phi)


def cmd_split(args) -> int:
    _check_format(args, "json")
    _require(args, ["system"])
    params: dict = {}
    if args.system == "fock":
        _require(args, ["alpha", "N"])
        alpha = parse_complex(args.alpha)
        spec = _split_spec(args)
        state = fock.glauber_cs(alpha, args.N)
        out_state = fock.split_fock(state, spec)
        params = {
            "alpha": serialize.complex_pair(alpha),
            "cutoff": args.N,
            "mu": serialize.complex_pair(spec.mu),
            "nu": serialize.complex_pair(spec.nu),
        }
    else:
        _require(args, ["jA", "jB", "jC"])
        cs = _spin_cs_params(args.jA, args.zeta, args.theta, args.phi)
        out_state = spin.split_spin(spin.spin_cs(cs), args.jB, args.jC)
        params = {"jA": args.jA, "jB": args.jB, "jC": args.jC}
        if cs.zeta is not None:
            params["zeta"] = serialize.complex_pair(cs.zeta)
        else:
            params.update(theta=cs.theta, phi=cs.phi)
    report = splitting.factorization_report(out_state)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "split",
        "system": args.system,
        "params": params,
        "entropy_bits": report.entropy_bits,
        "is_product": report.is_product,
        "residual": report.residual,
    }
    if args.save_state:
        _emit(serialize.json_text(serialize.state_to_dict(out_state)), args.save_state)
    _emit(serialize.json_text(doc), args.out)
    return 0


NAMED_STATES = {
    # the triplet made by splitting the m=0 level of a spin-1 system
    "split-spin1-m0": lambda: spin.split_spin(spin.basis_state(1, 0), 0.5, 0.5),
    "split-spin1-lowest": lambda: spin.split_spin(spin.basis_state(1, -1), 0.5, 0.5),
}


def _load_state(name: str) -> StateVector:
    if name in NAMED_STATES:
        return NAMED_STATES[name]()
    if os.path.exists(name):
        return serialize.state_from_dict(serialize.load_json(name))
    raise ConfigError(f"unknown state {name!r} (not a named state or a file)")


def cmd_chsh(args) -> int:
    _check_format(args, "json")
    _require(args, ["state"])
    state = _load_state(args.state)
    strategy = args.strategy
    if strategy == "multistart":
        strategy = "multistart-local-search"
    seed = None
    if strategy == "multistart-local-search":
        if args.seed is None:
            raise ConfigError("--seed is required for the multistart strategy")
        seed = _seed_value(args.seed)
    result = bell.chsh_maximize(state, strategy=strategy,
                                n_starts=args.n_starts, seed=seed, tol=args.tol)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "chsh",
        "state_id": args.state,
        "strategy": result.strategy,
        "max_value": result.max_value,
        "settings": result.settings.angle_lists(),
        "n_starts": result.n_starts,
        "seed": result.seed,
    }
    _emit(serialize.json_text(doc), args.out)
    return 0


def cmd_evolve(args) -> int:
    _check_format(args, "csv")
    _require(args, ["system", "tmax"])
    if args.tmax <= 0:
        raise ConfigError("tmax must be positive")
    if args.samples < 2:
        raise ConfigError("need at least 2 samples")
    grid = np.linspace(0.0, args.tmax, args.samples)
    if args.system == "fock":
        _require(args, ["omega", "N"])
        lam = parse_complex(args.lam)
        if args.drive == "constant":
            drive = dynamics.DriveSpec.constant(args.omega, lam)
        elif args.drive == "sinusoid":
            drive = dynamics.DriveSpec.sinusoid(args.omega, lam,
                                                args.drive_frequency,
                                                args.drive_phase)
        else:
            drive = dynamics.DriveSpec.exponential(args.omega, lam,
                                                   args.drive_frequency)
        initial = None
        if args.initial_alpha is not None:
            initial = fock.glauber_cs(parse_complex(args.initial_alpha), args.N)
        traj = dynamics.evolve_fock(drive, grid, args.N, initial=initial)
        _emit(serialize.trajectory_csv(traj), args.out)
    else:
        _require(args, ["j", "beta0"])
        ham = dynamics.LinearSpinHamiltonian(args.beta0,
                                             parse_complex(args.beta_plus))
        cs = _spin_cs_params(args.j, args.zeta0, args.theta0, args.phi0)
        traj = dynamics.evolve_spin(ham, args.j, grid, spin.spin_cs(cs))
        _emit(serialize.spin_trajectory_csv(traj), args.out)
    return 0


def cmd_scan(args) -> int:
    _check_format(args, "json")
    _require(args, ["system", "n_samples", "seed"])
    seed = _seed_value(args.seed)
    if args.system == "fock":
        _require(args, ["N"])
        system = splitting.FockScanSystem(args.N, _split_spec(args))
    else:
        _require(args, ["jA", "jB", "jC"])
        system = splitting.SpinScanSystem(args.jA, args.jB, args.jC)
    stats = splitting.uniqueness_scan(system, args.n_samples, seed)
    doc = {"schema_version": SCHEMA_VERSION, "command": "scan"}
    doc.update(stats.to_json_dict())
    _emit(serialize.json_text(doc), args.out)
    return 0


def cmd_series(args) -> int:
    _check_format(args, "json")
    mu = parse_complex(args.mu)
    nu = parse_complex(args.nu)
    solution = splitting.aflp_series_solve(args.order, mu, nu)
    taus = [0.5, 1.0, -0.75, 0.3 + 0.8j]
    worst = 0.0
    for tau in taus:
        triple = solution.split_triple(tau)
        worst = max(worst, float(splitting.functional_residuals(
            *triple, mu=mu, nu=nu).max()))
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "series",
        "order": solution.order,
        "mu": serialize.complex_pair(mu),
        "nu": serialize.complex_pair(nu),
        "family": {
            "rule": "c_k = f0 * tau^k / k!",
            "free_parameters": ["tau", "f0"],
            "subsystem_rule": "tau_B = mu*tau, tau_C = nu*tau",
        },
        "consistency_residual": solution.consistency_residual,
        "exponential_rule_residual": solution.exponential_rule_residual,
        "exponential_family_max_residual": worst,
    }
    _emit(serialize.json_text(doc), args.out)
    return 0


DISPATCH = {
    "split": cmd_split,
    "chsh": cmd_chsh,
    "evolve": cmd_evolve,
    "scan": cmd_scan,
    "series": cmd_series,
}


def _apply_config_defaults(parser: argparse.ArgumentParser, argv) -> None:
    if "--config" not in argv:
        return
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise ConfigError("--config needs a file path")
    config = serialize.load_json(argv[idx + 1])
    if not isinstance(config, dict):
        raise ConfigError("config file must hold a JSON object")
    subparsers = parser._subparsers._group_actions[0].choices.values()
    known = set()
    for sub in subparsers:
        known.update(a.dest for a in sub._actions)
    unknown = sorted(set(config) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    # subcommands parse into a fresh namespace, so defaults must land on them
    parser.set_defaults(**config)
    for sub in subparsers:
        sub.set_defaults(**config)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_defaults(parser, argv)
        args = parser.parse_args(argv)
        _validate_choices(args)
        return DISPATCH[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


def run(argv) -> int:
    """Programmatic entry point; same contract as the console script."""
    return main(list(argv))


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
