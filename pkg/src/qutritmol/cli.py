"""Command-line driver.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .dynamics import ConfigurationError, NumericalStabilityError, SimulationConfig, propagate, uniform_checkpoints
from .gates import (ORDERINGS, WALSH_HADAMARD_ORDERINGS, Inadmissible, check_unitary, decompose,
                    matrix_from_text, walsh_hadamard)
from .metrics import average_gate_fidelity, density, state_fidelity, write_table_csv, write_trajectory_csv
from .pulses import DEFAULT_GAP, DEFAULT_DURATIONS, Encoding, SynthesisError, ScheduleError, synthesize, write_timeseries
from .rotor import MoleculeSpec, propanediol, solve_spectrum, transition_table
from .sweep import (SweepSpec, input_state, manifest, run_error_sweep, run_fidelity_map, run_trajectory,
                    sweep_columns)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class ValidationError(ValueError):
    pass


RUN_KEYS = {
    "molecule": str, "jmax": int, "method": str, "target": str, "ordering": str,
    "durations_ns": dict, "gap_factor": (int, float), "inputs": list, "n_checkpoints": int,
    "field_scale": (int, float),
}
RUN_DEFAULTS = {
    "molecule": "propanediol", "jmax": 3, "method": "exact", "target": "walsh-hadamard",
    "ordering": "cab", "durations_ns": dict(DEFAULT_DURATIONS), "gap_factor": DEFAULT_GAP,
    "inputs": ["0", "psi2"], "n_checkpoints": 0, "field_scale": 1.0,
}
SEED_SWEEP = {
    "experiment": "amplitude_sweep",
    "grid": {"alpha": [-0.2, -0.1, 0.0, 0.1, 0.2]},
    "sequences": [1, 2, 3, 4],
    "inputs": ["0", "psi2"],
    "method": "rwa",
    "jmax": 3,
}


def load_molecule(ref):
    if ref in (None, "propanediol"):
        return propanediol()
    try:
        return MoleculeSpec.load(ref)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read molecule file {ref}: {exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"invalid molecule file {ref}: {exc}") from exc


def load_target(ref):
    if ref in (None, "walsh-hadamard"):
        return walsh_hadamard()
    if ref == "identity":
        return np.eye(3, dtype=complex)
    try:
        U = matrix_from_text(Path(ref).read_text())
        return check_unitary(U)
    except OSError as exc:
        raise ValidationError(f"cannot read target file {ref}: {exc}") from exc
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def parse_ordering_arg(text):
    if text in (None, "all"):
        return list(ORDERINGS)
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok.isdigit():
            k = int(tok)
            if not 1 <= k <= 4:
                raise ValidationError("sequence index must be 1..4")
            out.append(WALSH_HADAMARD_ORDERINGS[k - 1])
        else:
            o = tuple(tok.replace("(", "").replace(")", "").replace(" ", ""))
            if sorted(o) != ["a", "b", "c"]:
                raise ValidationError(f"bad ordering {tok!r}; use e.g. 'cab' or a sequence index 1-4")
            out.append(o)
    return out


def load_run_config(path, overrides):
    cfg = dict(RUN_DEFAULTS)
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        unknown = set(data) - set(RUN_KEYS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        for k, v in data.items():
            if not isinstance(v, RUN_KEYS[k]) or isinstance(v, bool):
                raise ValidationError(f"config key {k!r} has wrong type {type(v).__name__}")
        cfg.update(data)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _outdir(args):
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out, command, config, molecule, method, tolerances=None, extra=None):
    m = manifest({"command": command, **config}, molecule, method, tolerances, extra)
    m["command"] = command
    m["created"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    _write_json(out / "manifest.json", m)


# --- commands ---------------------------------------------------------------

def cmd_spectrum(args):
    mol = load_molecule(args.molecule)
    jmax = args.jmax or 3
    if jmax < 1:
        raise ValidationError("jmax must be >= 1")
    basis = solve_spectrum(mol, jmax)
    rows = transition_table(basis, mol)
    out = _outdir(args)
    levels = [{"index": i, "J": s.J, "Ka": s.Ka, "Kc": s.Kc, "M": s.M, "label": s.label,
               "energy_MHz": float(s.energy)} for i, s in enumerate(basis)]
    write_table_csv(out / "levels.csv", ["index", "J", "Ka", "Kc", "M", "label", "energy_MHz"], levels)
    trans = [{"lower": t.lower, "upper": t.upper, "lower_label": basis[t.lower].label,
              "upper_label": basis[t.upper].label, "M_lower": basis[t.lower].M, "M_upper": basis[t.upper].M,
              "q": t.q, "frequency_MHz": float(t.frequency), "mu_re_D": float(np.real(t.element)),
              "mu_im_D": float(np.imag(t.element)), "type": t.kind} for t in rows]
    write_table_csv(out / "transitions.csv", list(trans[0]) if trans else ["lower"], trans)
    _write_manifest(out, "spectrum", {"jmax": jmax}, mol, "eigensolve")
    seen = set()
    for s in basis:
        if (s.J, s.Ka, s.Kc) not in seen:
            seen.add((s.J, s.Ka, s.Kc))
            print(f"{s.label:6s} {s.energy:12.2f} MHz  (x{2 * s.J + 1})")
    print(f"{len(basis)} states, {len(rows)} transitions -> {out}")
    return EXIT_OK


def cmd_decompose(args):
    target = load_target(args.target)
    orderings = parse_ordering_arg(args.ordering)
    report = []
    for o in orderings:
        r = decompose(target, o, projective=args.projective)
        name = "".join(o)
        if isinstance(r, Inadmissible):
            print(f"{name}: inadmissible (max residual {r.residual:.6g})")
            for i, k, got, want in r.offending:
                print(f"    M[{i + 1},{k + 1}] = {got.real:+.12f}{got.imag:+.12f}i  target {want.real:+.12f}{want.imag:+.12f}i")
            report.append({"ordering": name, "admissible": False, "residual": r.residual,
                           "offending": [[i, k, got, want] for i, k, got, want in r.offending]})
        else:
            th, ph = r.theta, r.phi
            parts = "  ".join(f"theta_{m}={th[m]:.12f} phi_{m}={ph[m]:.12f}" for m in "abc")
            print(f"{name}: admissible  {parts}  eta={r.phase.eta:.12f} chi={r.phase.chi:.12f}"
                  + (f" gamma={r.global_phase:.12f}" if args.projective else ""))
            report.append({"ordering": name, "admissible": True, "theta": th, "phi": ph,
                           "eta": r.phase.eta, "chi": r.phase.chi, "global_phase": r.global_phase})
    n_ok = sum(r["admissible"] for r in report)
    print(f"{n_ok} admissible, {len(report) - n_ok} inadmissible")
    if args.out:
        out = _outdir(args)
        _write_json(out / "decomposition.json", report)
    return EXIT_OK


def _build_run(cfg):
    mol = load_molecule(cfg["molecule"])
    target = load_target(cfg["target"])
    orderings = parse_ordering_arg(cfg["ordering"])
    if len(orderings) != 1:
        raise ValidationError("simulate/synthesize take exactly one ordering")
    seq = decompose(target, orderings[0])
    if isinstance(seq, Inadmissible):
        raise ValidationError(f"ordering {''.join(orderings[0])} is inadmissible for the target")
    try:
        config = SimulationConfig(jmax=cfg["jmax"], method=cfg["method"])
    except ConfigurationError as exc:
        raise ValidationError(str(exc)) from exc
    basis = solve_spectrum(mol, config.jmax)
    try:
        pulses = synthesize(seq, basis, cfg["durations_ns"], cfg["gap_factor"])
    except (SynthesisError, ScheduleError) as exc:
        raise ValidationError(str(exc)) from exc
    scale = float(cfg.get("field_scale", 1.0))
    if scale != 1.0:
        from dataclasses import replace
        pulses = replace(pulses, subpulses=tuple(replace(s, amplitude=s.amplitude * scale) for s in pulses.subpulses))
    return mol, target, seq, basis, pulses, config


def _overrides(args):
    return {"molecule": args.molecule, "jmax": args.jmax, "method": args.method, "ordering": args.ordering,
            "target": getattr(args, "target", None)}


def cmd_synthesize(args):
    if args.seed_config:
        return _seed(args.seed_config, RUN_DEFAULTS)
    cfg = load_run_config(args.config, _overrides(args))
    mol, target, seq, basis, pulses, config = _build_run(cfg)
    out = _outdir(args)
    (out / "pulses.json").write_text(pulses.to_json() + "\n")
    write_timeseries(out / "field.csv", pulses, args.sample_rate)
    _write_manifest(out, "synthesize", cfg, mol, config.method)
    for s in pulses.subpulses:
        print(f"{s.label:3s} {basis[s.transition[0]].label}->{basis[s.transition[1]].label} q={s.q:+d} "
              f"theta={s.theta:.6f} phi={s.phi:.6f} tau={s.tau:g} ns T={s.delay:.2f} ns "
              f"carrier={s.carrier / (2e-3 * np.pi):.2f} MHz amp={s.amplitude:.6g}")
    print(f"total duration {pulses.total_duration:.2f} ns -> {out}")
    return EXIT_OK


def cmd_simulate(args):
    if args.seed_config:
        return _seed(args.seed_config, RUN_DEFAULTS)
    cfg = load_run_config(args.config, _overrides(args))
    inputs = [input_state(n) for n in cfg["inputs"]]
    mol, target, seq, basis, pulses, config = _build_run(cfg)
    times = uniform_checkpoints(pulses, cfg["n_checkpoints"]) if cfg["n_checkpoints"] else ()
    result = propagate(pulses, basis, config, times)
    F = average_gate_fidelity(result.M_hat, target)
    report = {"gate_fidelity": F, "leakage": result.leakage, "n_steps": result.n_steps,
              "M_hat": [[complex(z) for z in row] for row in result.M_hat], "states": []}
    print(f"gate fidelity {F:.10f}  leakage {result.leakage:.3e}  steps {result.n_steps}")
    for name, psi in zip(cfg["inputs"], inputs):
        out_psi = result.M_hat @ psi
        rho = density(out_psi)
        fs = state_fidelity(result.M_hat, psi, target)
        report["states"].append({"input": name, "state_fidelity": fs,
                                 "rho": [[complex(z) for z in row] for row in rho]})
        print(f"input {name}: state fidelity {fs:.10f}  populations {np.round(np.real(np.diag(rho)), 6).tolist()}")
    out = _outdir(args)
    _write_json(out / "report.json", report)
    if len(times):
        comp = Encoding().computational(basis)
        lines = ["# t_ns followed by 9 complex entries (re im) of the computational density block, row-major"]
        for name, psi in zip(cfg["inputs"], inputs):
            for t, ket in zip(result.times, result.states(psi)):
                blk = density(ket[list(comp)]).reshape(-1)
                lines.append(f"{name} {t:.6f} " + " ".join(f"{z.real:.12e} {z.imag:.12e}" for z in blk))
        (out / "checkpoints.txt").write_text("\n".join(lines) + "\n")
    _write_manifest(out, "simulate", cfg, mol, config.method, {"unitarity": config.unitarity_tol})
    return EXIT_OK


def cmd_sweep(args):
    if args.seed_config:
        return _seed(args.seed_config, SEED_SWEEP)
    if not args.config:
        raise ValidationError("sweep needs --config (write a template with --seed-config)")
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
    mol = load_molecule(data.pop("molecule", None))
    if args.method:
        data["method"] = args.method
    if args.jmax:
        data["jmax"] = args.jmax
    try:
        spec = SweepSpec.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc
    out = _outdir(args)
    if spec.experiment == "fidelity_map":
        rows = run_fidelity_map(spec, mol)
        write_table_csv(out / "fidelity_map.csv", ["channel", "theta", "tau_ns", "F", "leakage", "error"], rows)
        print(f"{len(rows)} grid points -> {out / 'fidelity_map.csv'}")
    elif spec.experiment == "trajectory":
        traj = run_trajectory(spec, mol)
        for idx, series in traj.items():
            write_trajectory_csv(out / f"trajectory_seq{idx}.csv", series)
            fin = series.s[-1]
            print(f"sequence {idx}: final ds1={fin[0]:+.5f} ds4={fin[3]:+.5f} ds6={fin[5]:+.5f} "
                  f"max|ds6|={np.abs(series.s[:, 5]).max():.5f}")
    else:
        rows = run_error_sweep(spec, mol)
        write_table_csv(out / f"{spec.experiment}.csv", sweep_columns(spec.inputs), rows)
        print(f"{len(rows)} rows -> {out / (spec.experiment + '.csv')}")
    _write_manifest(out, "sweep", spec.to_dict(), mol, spec.method)
    return EXIT_OK


def _seed(path, template):
    text = json.dumps(template, indent=2) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="qutritmol", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, ordering=True):
        sp.add_argument("--molecule", help="molecule JSON file or 'propanediol' (default)")
        sp.add_argument("--jmax", type=int)
        sp.add_argument("--method", choices=["exact", "rwa", "magnus1"])
        sp.add_argument("--out", help="output directory")
        if ordering:
            sp.add_argument("--ordering", help="e.g. cab, 'all', or a sequence index 1-4 (comma separated)")

    sp = sub.add_parser("spectrum", help="rotational levels and transition table")
    common(sp, ordering=False)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("decompose", help="decompose a target gate")
    sp.add_argument("--target", default="walsh-hadamard",
                    help="'walsh-hadamard', 'identity' or a file of 9 're im' lines (row-major)")
    sp.add_argument("--ordering", default="all")
    sp.add_argument("--projective", action="store_true", help="allow a global phase")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_decompose)

    for name, fn, helptext in (("synthesize", cmd_synthesize, "write the pulse train"),
                               ("simulate", cmd_simulate, "propagate and report fidelities")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--config", help="run config JSON")
        sp.add_argument("--target")
        sp.add_argument("--seed-config", metavar="PATH", help="write a template config ('-' for stdout) and exit")
        if name == "synthesize":
            sp.add_argument("--sample-rate", type=float, default=10.0, help="field samples per ns")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("sweep", help="fidelity maps, error sweeps, trajectories")
    common(sp, ordering=False)
    sp.add_argument("--config", help="sweep config JSON")
    sp.add_argument("--seed-config", metavar="PATH", help="write a template sweep config and exit")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ValidationError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalStabilityError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
