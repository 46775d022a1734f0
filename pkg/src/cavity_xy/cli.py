"""Command-line front end: ``cavity-xy {couplings,dispersion,optimize,evolve,verify}``.

Exit codes: 0 success, 1 physics failure (band resonance, validity, ...),
2 malformed input. Outputs go to ``--out`` (written atomically) or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from . import io
from .couplings import (
    DEFAULT_SYSTEM_G_MAX,
    DEFAULT_THRESHOLD,
    AtomSpec,
    CavityArray,
    DriveLaser,
    LaserPair,
    coupling_table,
    lasers_from_pairs,
    margin_scaled_system,
    paired_coupling_table,
    tabulated_presets,
    preset_system,
)
from .dispersion import (
    dense_grid,
    group_velocity,
    ideal_linear_couplings,
    linearity_error,
    magnon_dispersion,
    normalize_table,
)
from .dynamics import propagation_profile, revival_search
from .errors import CavityXYError, ConfigError, PhysicsError, UnknownPreset
from .optimize import FitProblem, fit_drives
from .oracle import OracleSystem, verify_report

_NUMBER = {"type": "number"}
_ODD = {"type": "integer", "minimum": 1, "not": {"multipleOf": 2}}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "array": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 2, "multipleOf": 2},
                "t_hop": _NUMBER,
                "omega_c": _NUMBER,
            },
        },
        "atom": {
            "type": "object",
            "additionalProperties": False,
            "required": ["omega_e", "omega_ab", "g"],
            "properties": {"omega_e": _NUMBER, "omega_ab": {"type": "number", "minimum": 0}, "g": _NUMBER},
        },
        "lasers": {
            "oneOf": [
                {"type": "string", "enum": ["nL2", "nL4", "ideal"]},
                {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["rabi_re", "omega_l"],
                        "properties": {"rabi_re": _NUMBER, "rabi_im": _NUMBER, "omega_l": _NUMBER},
                    },
                },
            ]
        },
        "dynamics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "source": {"type": "integer", "minimum": 0},
                "t_max": {"type": "number", "exclusiveMinimum": 0},
                "t_steps": {"type": "integer", "minimum": 2},
            },
        },
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_pairs": {"type": "integer", "minimum": 1},
                "l_fit": {"type": "array", "minItems": 1, "items": _ODD},
                "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "starts": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "validity": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"threshold": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
}


def _path(parts) -> str:
    return ".".join(str(p) for p in parts) or "<root>"


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})", str(path)) from None
    validate_config(cfg)
    return cfg


def validate_config(cfg) -> None:
    err = best_match(Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg))
    if err is not None:
        raise ConfigError(f"config rejected: {err.message}", _path(err.absolute_path))
    atom = cfg.get("atom")
    if atom and not atom["omega_e"] > atom["omega_ab"]:
        raise ConfigError("config rejected: omega_e must exceed omega_ab", "atom.omega_e")
    fit = cfg.get("fit", {})
    if "weights" in fit and len(fit["weights"]) != len(fit.get("l_fit", FitProblem.l_fit)):
        raise ConfigError("config rejected: one weight per l_fit entry is required", "fit.weights")
    dyn = cfg.get("dynamics", {})
    n = cfg.get("array", {}).get("n")
    if n is not None and dyn.get("source", 0) >= n:
        raise ConfigError("config rejected: source lies outside the ring", "dynamics.source")


# ---------------------------------------------------------------------------
# building blocks


def _ring_size(args, cfg) -> int:
    if getattr(args, "n", None) is not None:
        return args.n
    return cfg.get("array", {}).get("n", 40)


def _system(args, cfg):
    """``(array, atom, lasers, pairs)`` from flags and config; ``pairs`` is None for free lasers."""
    n = _ring_size(args, cfg)
    arr_cfg = cfg.get("array", {})
    atom_cfg = cfg.get("atom")
    lasers_cfg = cfg.get("lasers")
    preset = getattr(args, "preset", None) or (lasers_cfg if isinstance(lasers_cfg, str) else None)
    custom_pairs = getattr(args, "pair", None)

    if preset is None and not custom_pairs and atom_cfg and isinstance(lasers_cfg, list):
        array = CavityArray(n, arr_cfg.get("t_hop", 1.0), arr_cfg.get("omega_c", 0.0))
        atom = AtomSpec(atom_cfg["omega_e"], atom_cfg["omega_ab"], atom_cfg["g"])
        lasers = [DriveLaser(complex(l["rabi_re"], l.get("rabi_im", 0.0)), l["omega_l"]) for l in lasers_cfg]
        return array, atom, lasers, None

    if custom_pairs:
        pairs = [LaserPair(float(d), float(g)) for d, g in custom_pairs]
    elif preset is not None:
        pairs = tabulated_presets(preset)
    else:
        raise ConfigError("no drive given: use --preset, --pair or a config with lasers", "lasers")
    array, atom, _ = preset_system("nL2", n)
    if arr_cfg:
        array = CavityArray(n, arr_cfg.get("t_hop", array.t_hop), arr_cfg.get("omega_c", array.omega_c))
    if atom_cfg:
        atom = AtomSpec(atom_cfg["omega_e"], atom_cfg["omega_ab"], atom_cfg["g"])
    return array, atom, lasers_from_pairs(array, atom, pairs, g_max=DEFAULT_SYSTEM_G_MAX), pairs


def _table(args, cfg):
    if getattr(args, "couplings", None):
        return io.read_couplings(args.couplings)
    preset = getattr(args, "preset", None) or (cfg.get("lasers") if isinstance(cfg.get("lasers"), str) else None)
    if preset == "ideal":
        n = _ring_size(args, cfg)
        return ideal_linear_couplings(n // 2, n)
    array, atom, lasers, pairs = _system(args, cfg)
    threshold = getattr(args, "threshold", None)
    if threshold is None:
        threshold = cfg.get("validity", {}).get("threshold", DEFAULT_THRESHOLD)
    build = paired_coupling_table if pairs is not None else coupling_table
    return build(array, atom, lasers, kernel_mode=getattr(args, "kernel", "finite"), threshold=threshold)


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        io.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_couplings(args, cfg) -> int:
    table = _table(args, cfg)
    if args.normalize:
        table = normalize_table(table)
    _emit(args, io.coupling_csv(table, ratio=args.ratio))
    return 0


def cmd_dispersion(args, cfg) -> int:
    table = _table(args, cfg)
    if not args.raw:
        table = normalize_table(table)
    k = dense_grid(args.points) if args.points else None
    curve = magnon_dispersion(table, k)
    _emit(args, io.dispersion_csv(curve.k, curve.e_of_k, group_velocity(curve)))
    report = linearity_error(curve, (args.fit_lo * np.pi, args.fit_hi * np.pi))
    sys.stderr.write(io.json_text({"linearity": report.__dict__}))
    return 0


def cmd_optimize(args, cfg) -> int:
    fit = cfg.get("fit", {})
    n = _ring_size(args, cfg)
    l_fit = tuple(args.l_fit) if args.l_fit else tuple(fit.get("l_fit", (3, 5, 7, 9, 11)))
    problem = FitProblem(
        n_pairs=args.pairs or fit.get("n_pairs", 2),
        target=ideal_linear_couplings(n // 2, n),
        l_fit=l_fit,
        weights=tuple(args.weights) if args.weights else fit.get("weights"),
        n_sites=n,
    )
    seed = args.seed if args.seed is not None else fit.get("seed", 0)
    starts = args.starts or fit.get("starts", 32)
    result = fit_drives(problem, starts=starts, seed=seed)
    _emit(args, io.json_text(result.as_dict()))
    if args.table_out:
        io.write_couplings(args.table_out, result.achieved, ratio=True)
    return 0


def cmd_evolve(args, cfg) -> int:
    raw = _table(args, cfg)
    table = raw if args.raw else normalize_table(raw)
    n = table.n_sites
    dyn = cfg.get("dynamics", {})
    source = args.source if args.source is not None else dyn.get("source", 0)
    if not 0 <= source < n:
        raise ConfigError(f"source {source} outside a ring of {n} sites", "source")
    revival = revival_search(table, source)
    t_max = args.tmax if args.tmax is not None else dyn.get("t_max", 2.0 * revival.t_star)
    steps = args.steps or dyn.get("t_steps", 401)
    record = propagation_profile(table, source, np.linspace(0.0, t_max, steps))
    _emit(args, io.profile_csv(record.times, record.probabilities))
    if args.fidelity_out:
        io.atomic_write(args.fidelity_out, io.fidelity_csv(record.times, record.fidelity))
    # raw time unit: 1/J(1) of the unnormalised table
    to_raw = table.j_of_l[1] / raw.j_of_l[1]
    summary = {
        "source": source,
        "target": revival.target,
        "t_star": revival.t_star,
        "t_star_raw": revival.t_star * to_raw,
        "t_star_j1": revival.t_star * table.j_of_l[1],
        "fidelity": revival.fidelity,
        "peak_site": revival.peak_site,
        "normalized_j1": bool(not args.raw),
    }
    sys.stderr.write(io.json_text(summary))
    return 0


def cmd_verify(args, cfg) -> int:
    if args.preset not in ("nL2", "nL4"):
        raise UnknownPreset(f"verify needs a laser preset, got {args.preset!r}")
    array, atom, lasers = margin_scaled_system(args.n, args.margin, args.preset, g_over_rabi=args.g_over_rabi)
    report = verify_report(OracleSystem(array, atom, lasers), t_end=args.t_end)
    report["params"]["margin"] = args.margin
    _emit(args, io.json_text(report))
    return 0


# ---------------------------------------------------------------------------
# parser


def _pair(text):
    try:
        d, g = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected D,G got {text!r}") from None
    return d, g


def _drive_flags(p):
    p.add_argument("--preset", choices=["nL2", "nL4", "ideal"])
    p.add_argument("--pair", type=_pair, action="append", metavar="D,G", help="mirrored pair (repeatable)")
    p.add_argument("--couplings", help="read J(l) from an l,J CSV instead")
    p.add_argument("--n", type=int, help="ring size (even)")
    p.add_argument("--kernel", choices=["finite", "closed"], default="finite")
    p.add_argument("--threshold", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavity-xy", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON run configuration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("couplings", help="coupling table J(l) as CSV")
    _drive_flags(p)
    p.add_argument("--ratio", action="store_true", help="add a J(l)/J(1) column")
    p.add_argument("--normalize", action="store_true", help="rescale to J(1) = 2/pi")
    p.add_argument("--out")
    p.set_defaults(func=cmd_couplings)

    p = sub.add_parser("dispersion", help="E_k and v_k as CSV, linearity on stderr")
    _drive_flags(p)
    p.add_argument("--points", type=int, help="dense grid on [-pi, pi] instead of the ring momenta")
    p.add_argument("--raw", action="store_true", help="skip J(1) normalisation")
    p.add_argument("--fit-lo", type=float, default=0.1, help="fit range start, units of pi")
    p.add_argument("--fit-hi", type=float, default=0.9, help="fit range end, units of pi")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("optimize", help="fit mirrored pairs to the linear-dispersion target")
    p.add_argument("--pairs", type=int)
    p.add_argument("--l-fit", type=int, nargs="+")
    p.add_argument("--weights", type=float, nargs="+")
    p.add_argument("--starts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--out")
    p.add_argument("--table-out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evolve", help="single-magnon propagation profile")
    _drive_flags(p)
    p.add_argument("--source", type=int)
    p.add_argument("--tmax", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--raw", action="store_true", help="skip J(1) normalisation")
    p.add_argument("--out")
    p.add_argument("--fidelity-out")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("verify", help="full-model check of the effective XY model")
    p.add_argument("--preset", default="nL2")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--margin", type=float, default=20.0)
    p.add_argument("--g-over-rabi", type=float, default=0.5)
    p.add_argument("--t-end", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config) if args.config else {}
        return args.func(args, cfg)
    except PhysicsError as exc:
        _report(exc)
        return 1
    except (CavityXYError, ValueError) as exc:
        _report(exc)
        return 2


def _report(exc: Exception) -> None:
    name = type(exc).__name__
    msg = str(exc)
    print(f"error: {msg if msg.startswith(name) else f'{name}: {msg}'}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
