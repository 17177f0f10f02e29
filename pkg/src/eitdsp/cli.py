"""Command-line front end.

    eitdsp <subcommand> [--config run.yaml] [--out DIR] [--seed N]
    eitdsp [subcommand] --batch DIR [--out DIR]

Every run writes three files into the output directory:

* ``report.txt``   human-readable summary (rounded numbers)
* ``summary.txt``  ``key = value`` lines, floats at 17 significant digits
* ``timeseries.csv`` for dynamics runs (header: time, dark_overlap, norm, ...),
  or ``table.csv`` for the static checks

Outputs depend only on the config and seed.
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import PROTOCOLS, ConfigError, RunConfig, emit_config, from_mapping, load_config

__all__ = ["main", "run", "execute", "RunOutput", "format_value"]


@dataclass
class RunOutput:
    summary: dict[str, object] = field(default_factory=dict)
    report: list[str] = field(default_factory=list)
    columns: dict[str, np.ndarray] | None = None  # time series
    table: dict[str, np.ndarray] | None = None  # non-dynamic rows


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (complex, np.complexfloating)):
        return f"{format_value(v.real)}{'+' if v.imag >= 0 or math.isnan(v.imag) else '-'}{format_value(abs(v.imag))}j"
    if isinstance(v, (tuple, list, np.ndarray)):
        return ",".join(format_value(x) for x in v)
    return str(v)


def _r(x, digits=6) -> str:
    if isinstance(x, complex):
        return f"{x.real:.{digits}g}{x.imag:+.{digits}g}j"
    return f"{x:.{digits}g}"


# ---------------------------------------------------------------------------
# dynamics helpers


def _hygiene(out: RunOutput, prefix: str, result):
    out.summary[f"{prefix}norm_drift"] = result.norm_drift
    out.summary[f"{prefix}sector_drift"] = result.sector_drift
    out.summary[f"{prefix}min_dark_overlap"] = result.min_dark_overlap
    out.report.append(
        f"  {prefix or 'run '}hygiene: norm drift {_r(result.norm_drift, 3)}, sector drift "
        f"{_r(result.sector_drift, 3)}, min dark overlap {_r(result.min_dark_overlap, 6)}"
    )


def _concat(results) -> dict[str, np.ndarray]:
    """Concatenate time series of consecutive runs, shifting times."""
    cols_list = [r.columns() for r in results]
    keys: list[str] = []
    for c in cols_list:
        keys += [k for k in c if k not in keys]
    out: dict[str, list] = {k: [] for k in keys}
    t0 = 0.0
    for c in cols_list:
        n = len(c["time"])
        for k in keys:
            vals = c.get(k, np.zeros(n))
            out[k].append(vals + t0 if k == "time" else vals)
        t0 += float(c["time"][-1])
    return {k: np.concatenate(v) for k, v in out.items()}


def _input_state(cfg: RunConfig, system):
    from .branches import CoherentBranches
    from .fock import ModeSpace, fock_state

    inp = cfg.input
    if inp.kind == "coherent":
        return CoherentBranches.coherent(system.mode_labels, system.input_label, inp.alpha0)
    if inp.kind == "cat":
        beta0 = -inp.alpha0 if inp.beta0 is None else inp.beta0
        return CoherentBranches.cat(system.mode_labels, system.input_label, inp.alpha0, beta0, inp.sign)
    space = ModeSpace(system.mode_labels, 1)
    return fock_state(space, {system.input_label: 1})


def _describe(cfg: RunConfig) -> list[str]:
    head = [f"protocol: {cfg.protocol}", f"family: {cfg.family}"]
    if cfg.family == "mlevel":
        head.append(f"m = {cfg.m}, g = {list(cfg.g)}, N = {cfg.N[0]:g}")
    else:
        head.append(f"k = {cfg.k}, g = {list(cfg.g)}, N = {[float(x) for x in cfg.N]}")
    return head


# ---------------------------------------------------------------------------
# subcommands


def _verify_algebra(cfg: RunConfig) -> RunOutput:
    from .algebra import verify_ensemble_algebra, verify_mlevel_algebra
    from .models import build_space
    from .polariton import identity_residuals, random_system

    size = cfg.m if cfg.family == "mlevel" else cfg.k
    rng = np.random.default_rng(cfg.numerics.seed)
    n_cap = cfg.numerics.n_cap
    dark_max = min(4, n_cap)
    rows = {k: [] for k in ("draw", "commutator", "bosonic", "dark_annihilation", "dark_orthonormality")}
    for i in range(cfg.numerics.draws):
        res = identity_residuals(random_system(cfg.family, size, rng), n_cap, dark_max)
        rows["draw"].append(i)
        rows["commutator"].append(res.commutator)
        rows["bosonic"].append(res.bosonic)
        rows["dark_annihilation"].append(res.dark_annihilation)
        rows["dark_orthonormality"].append(res.dark_orthonormality)
    system = cfg.build_system()
    space = build_space(system, min(n_cap, 4))
    alg = (verify_mlevel_algebra if cfg.family == "mlevel" else verify_ensemble_algebra)(system, space)

    out = RunOutput(table={k: np.asarray(v) for k, v in rows.items()})
    s = out.summary
    s["draws"] = cfg.numerics.draws
    s["seed"] = cfg.numerics.seed
    s["max_commutator_residual"] = max(rows["commutator"])
    s["max_bosonic_residual"] = max(rows["bosonic"])
    s["max_dark_annihilation_residual"] = max(rows["dark_annihilation"])
    s["max_dark_orthonormality_residual"] = max(rows["dark_orthonormality"])
    s["max_algebra_residual"] = alg.max_residual
    for name, v in sorted(alg.literal_residuals.items()):
        s["literal_" + "".join(ch if ch.isalnum() else "_" for ch in name).strip("_")] = v
    out.report += [
        f"random draws: {cfg.numerics.draws} (seed {cfg.numerics.seed}), n_cap = {n_cap}",
        f"  max ||[H, d] psi||            {_r(s['max_commutator_residual'], 3)}",
        f"  max ||([d, d+] - 1) psi||     {_r(s['max_bosonic_residual'], 3)}",
        f"  max ||H |D_n>||, n <= {dark_max}      {_r(s['max_dark_annihilation_residual'], 3)}",
        f"  max |<D_m|D_n> - delta|       {_r(s['max_dark_orthonormality_residual'], 3)}",
        "algebra relations (configured system):",
    ]
    out.report += [f"  {k}: {_r(v, 3)}" for k, v in sorted(alg.residuals.items())]
    if alg.literal_residuals:
        out.report.append("relations as printed that do not hold in the boson representation:")
        out.report += [f"  {k}: {_r(v, 3)}" for k, v in sorted(alg.literal_residuals.items())]
    return out


def _storage(cfg: RunConfig) -> RunOutput:
    from .protocols import protocol_store

    system = cfg.build_system()
    sch = cfg.schedule
    psi0 = _input_state(cfg, system)
    angles = sch.phi_e if cfg.family == "ensemble" else None
    res = protocol_store(
        system,
        cfg.input.alpha0 if cfg.input.kind == "coherent" else None,
        sch.sweep_T,
        input_state=None if cfg.input.kind == "coherent" else psi0,
        omega_max=sch.omega_max,
        dt=cfg.numerics.dt,
        omega_shape=sch.omega_shape,
        angles=angles,
        record_every=cfg.numerics.record_every,
    )
    out = RunOutput(columns=res.columns())
    s = out.summary
    s["sweep_T"] = res.extras["sweep_T"]
    s["omega_max"] = res.extras["omega_max"]
    s["final_fidelity"] = res.final_fidelity
    s["phi"] = res.extras["phi"]
    out.report += [
        f"input: {cfg.input.kind}, alpha0 = {cfg.input.alpha0:g}",
        f"sweep T = {_r(res.extras['sweep_T'])}, Omega_max = {_r(res.extras['omega_max'])}",
        f"target: {res.target_description}",
        f"  fidelity to target      {_r(res.final_fidelity, 10)}",
    ]
    pred = res.extras["predicted_coherences"] or {}
    for i, (x, v) in enumerate(res.extras["stored_coherences"].items(), start=1):
        key = "stored_C" if cfg.family == "mlevel" else f"stored_C{i}"
        s[key] = v.real
        s[key + "_imag"] = v.imag
        line = f"  stored coherence {x}: {_r(v, 8)}"
        if x in pred:
            s[key.replace("stored", "predicted")] = pred[x].real
            line += f"  (closed form {_r(pred[x], 8)})"
        out.report.append(line)
    _hygiene(out, "", res)
    return out


def _split(cfg: RunConfig) -> RunOutput:
    from .protocols import protocol_release_split, protocol_store

    system = cfg.build_system()
    sch, num = cfg.schedule, cfg.numerics
    psi0 = _input_state(cfg, system)
    kw = dict(omega_max=sch.omega_max, dt=num.dt, record_every=num.record_every)
    store = protocol_store(system, None, sch.sweep_T, input_state=psi0, **kw)
    rel = protocol_release_split(system, store, sch.phi_e, sch.sweep_T, **kw)
    out = RunOutput(columns=_concat([store, rel]))
    s = out.summary
    s["sweep_T"] = rel.extras["sweep_T"]
    s["phi_e"] = rel.extras["phi_e"]
    s["storage_fidelity"] = store.final_fidelity
    s["release_fidelity"] = rel.final_fidelity
    w = np.asarray(rel.extras["weights"])
    out.report += [
        f"input: {cfg.input.kind}, alpha0 = {cfg.input.alpha0:g}",
        f"release angles phi_e = {[round(x, 10) for x in rel.extras['phi_e']]}, weights = {np.round(w, 10).tolist()}",
        f"  storage fidelity        {_r(store.final_fidelity, 10)}",
        f"  release fidelity        {_r(rel.final_fidelity, 10)}",
    ]
    for i, (x, v) in enumerate(rel.extras["released_amplitudes"].items(), start=1):
        s[f"alpha_e{i}"] = v.real
        s[f"alpha_e{i}_imag"] = v.imag
        line = f"  released <{x}> = {_r(v, 8)}"
        if cfg.input.kind == "coherent":
            s[f"predicted_alpha_e{i}"] = cfg.input.alpha0 * w[i - 1]
            line += f"  (closed form alpha0 w_{i} = {_r(cfg.input.alpha0 * w[i - 1], 8)})"
        out.report.append(line)
    s["residual_spinwave_number"] = rel.extras["residual_spinwave_number"]
    _hygiene(out, "storage_", store)
    _hygiene(out, "release_", rel)
    return out


def _entangle(cfg: RunConfig) -> RunOutput:
    from . import entanglement as ent

    system = cfg.build_system()
    inp, sch, num = cfg.input, cfg.schedule, cfg.numerics
    beta0 = -inp.alpha0 if inp.beta0 is None else inp.beta0
    if cfg.family == "ensemble":
        if sch.omega_shape is not None:
            from .polariton import angles_from_weights

            G = system.collective_couplings
            w = G / np.asarray(sch.omega_shape)
            angles = angles_from_weights(w / np.linalg.norm(w))
        else:
            angles = sch.phi_e
        rep = ent.run_ensemble_entanglement(
            system, (inp.alpha0, beta0), inp.sign, angles, sweep_T=sch.sweep_T, tail_tol=num.tail_tol
        )
    elif inp.kind == "single-photon":
        phi = sch.phi_e[0] if sch.phi_e else np.pi / 4
        rep = ent.run_single_photon_protocol(phi, system=system, sweep_T=sch.sweep_T)
    elif cfg.m == 4:
        phi = sch.phi_e[0] if sch.phi_e else np.pi / 4
        rep = ent.run_two_mode_cat_protocol(
            inp.alpha0, inp.sign, phi, beta0=beta0, system=system, sweep_T=sch.sweep_T, tail_tol=num.tail_tol
        )
    else:
        phi, varphi = sch.phi_e if sch.phi_e else ent.SYMMETRIC_ANGLES
        rep = ent.run_three_mode_cat_protocol(
            inp.alpha0, beta0, inp.sign, phi, varphi, system=system, sweep_T=sch.sweep_T, tail_tol=num.tail_tol
        )

    out = RunOutput(columns=_concat(rep.runs))
    s = out.summary
    s["overlap_fidelity"] = rep.overlap_fidelity
    s["oracle_deviation"] = rep.oracle_deviation
    s["simulated_oracle_deviation"] = rep.simulated_oracle_deviation
    out.report += [
        f"input: {inp.kind}" + (f", alpha0 = {inp.alpha0:g}, beta0 = {beta0:g}, sign = {inp.sign:+d}" if inp.kind == "cat" else ""),
        f"  fidelity to predicted output state   {_r(rep.overlap_fidelity, 10)}",
        "  reduced entropies (nats): simulated / Gram oracle / Fock on prediction",
    ]
    for cut, val in rep.entropy_per_cut.items():
        name = "_".join(cut)
        s[f"entropy_{name}"] = val
        s[f"oracle_entropy_{name}"] = rep.oracle_entropy_per_cut[cut]
        s[f"fock_entropy_{name}"] = rep.fock_entropy_per_cut[cut]
        out.report.append(
            f"    keep {name:<8} {_r(val, 10)} / {_r(rep.oracle_entropy_per_cut[cut], 10)} / "
            f"{_r(rep.fock_entropy_per_cut[cut], 10)}"
        )
    if "output_amplitudes" in rep.extras:
        a10, a01 = rep.extras["output_amplitudes"]
        s["amplitude_10"], s["amplitude_01"] = a10.real, a01.real
        out.report.append(f"  output amplitudes |10>, |01>: {_r(a10, 8)}, {_r(a01, 8)}")
    if "simulated_branch_amplitudes" in rep.extras:
        for i, amps in enumerate(rep.extras["simulated_branch_amplitudes"]):
            s[f"branch{i}_amplitudes"] = tuple(complex(x).real for x in amps)
    dec = rep.decomposition
    if dec is not None:
        s["w_support"] = dec.support
        for k, v in dec.coefficients.items():
            s[f"w_coefficient_{k.replace('+', 'p').replace('-', 'm')}"] = v
        s["w_weight_sum"] = dec.weight_sum
        s["w_off_support_weight"] = dec.off_support_weight
        s["w_h1"], s["w_h2"] = dec.h1, dec.h2
        s["w_printed_h1"], s["w_printed_h2"] = dec.printed_h
        out.report += [
            f"  +/- basis decomposition support: {' '.join(dec.support)}",
            f"    h1 = {_r(dec.h1, 8)}, h2 = {_r(dec.h2, 8)} (printed formulas give "
            f"{_r(dec.printed_h[0], 6)}, {_r(dec.printed_h[1], 6)})",
            f"    off-support weight {_r(dec.off_support_weight, 3)}",
        ]
        for key in ("simulated_off_support_weight", "simulated_own_basis_off_support_weight"):
            if key in rep.extras:
                s[key] = rep.extras[key]
        if "pair_negativity" in rep.extras:
            for pair, v in rep.extras["pair_negativity"].items():
                name = "_".join(str(j + 1) for j in pair)
                s[f"pair_negativity_{name}"] = v
    for i, run in enumerate(rep.runs):
        _hygiene(out, f"run{i}_", run)
    return out


def _spectrum(cfg: RunConfig) -> RunOutput:
    from .fivelevel import five_level_shift_operators, five_level_spectrum, ladder_residuals
    from .fock import ModeSpace

    system = cfg.build_system()
    space = ModeSpace(system.mode_labels, cfg.numerics.n_cap)
    ops = five_level_shift_operators(space, cfg.g[0], cfg.schedule.omega, cfg.N[0])
    rep = five_level_spectrum(ops, cfg.numerics.max_quanta)
    ladders = ladder_residuals(ops)
    cols = ("i", "j", "k", "l", "f", "g", "n")
    table = {c: np.array([e.indices[p] for e in rep.entries]) for p, c in enumerate(cols)}
    table["eigenvalue"] = np.array([e.predicted_eigenvalue for e in rep.entries])
    table["residual"] = np.array([e.residual for e in rep.entries])
    table["norm"] = np.array([e.norm_before_normalisation for e in rep.entries])
    out = RunOutput(table=table)
    s = out.summary
    s["eps1"], s["eps2"] = ops.eps1, ops.eps2
    s["states"] = len(rep.entries)
    s["null_states"] = sum(e.is_null for e in rep.entries)
    s["max_eigenvalue_residual"] = rep.max_residual
    s["zero_class_max_eigenvalue"] = rep.zero_class_max_eigenvalue
    s["max_ladder_residual"] = max(ladders.values())
    out.report += [
        f"Omega = {list(cfg.schedule.omega)}, total quanta <= {cfg.numerics.max_quanta}, n_cap = {cfg.numerics.n_cap}",
        f"  eps1 = sqrt(G^2 + sum Omega^2) = {_r(ops.eps1, 10)}, eps2 = G = {_r(ops.eps2, 10)}",
        f"  states built: {len(rep.entries)} ({s['null_states']} vanish identically)",
        f"  max eigenvalue residual        {_r(rep.max_residual, 3)}",
        f"  max |E| in the zero class      {_r(rep.zero_class_max_eigenvalue, 3)}",
        f"  max ladder residual            {_r(s['max_ladder_residual'], 3)}",
    ]
    return out


def _bosonization(cfg: RunConfig) -> RunOutput:
    from .dicke import bosonization_error

    atoms = sorted(cfg.bosonization.atoms)
    exc = sorted(cfg.bosonization.excitations)
    rows = {"N": [], "excitation": [], "residual": []}
    err = {}
    for N in atoms:
        for n in exc:
            err[N, n] = bosonization_error(N, n)
            rows["N"].append(N)
            rows["excitation"].append(n)
            rows["residual"].append(err[N, n])
    out = RunOutput(table={k: np.asarray(v) for k, v in rows.items()})
    s = out.summary
    out.report.append("max ||([E, E+] - 1) psi|| by atom number N and excitation n:")
    for n in exc:
        out.report.append(f"  n = {n}: " + ", ".join(f"N={N}: {_r(err[N, n], 6)}" for N in atoms))
        for N in atoms:
            s[f"residual_N{N}_n{n}"] = err[N, n]
        ratios = [err[b, n] / err[a, n] for a, b in zip(atoms, atoms[1:]) if err[a, n] > 0]
        if ratios:
            s[f"halving_ratios_n{n}"] = tuple(ratios)
            out.report.append(f"    successive ratios {', '.join(_r(x, 5) for x in ratios)}")
    s["max_residual_excitation0"] = max(err[N, 0] for N in atoms) if 0 in exc else float("nan")
    return out


_RUNNERS = {
    "verify-algebra": _verify_algebra,
    "storage": _storage,
    "split": _split,
    "entangle": _entangle,
    "spectrum": _spectrum,
    "validate-bosonization": _bosonization,
}


def execute(cfg: RunConfig) -> RunOutput:
    """Run the configured protocol without touching the disk."""
    out = _RUNNERS[cfg.protocol](cfg)
    out.report = _describe(cfg) + [""] + out.report
    return out


def _write_csv(path: Path, cols: dict[str, np.ndarray]):
    keys = list(cols)
    n = len(cols[keys[0]])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(keys) + "\n")
        for i in range(n):
            fh.write(",".join(format_value(cols[k][i]) for k in keys) + "\n")


def write_outputs(out: RunOutput, cfg: RunConfig, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "summary.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"protocol = {cfg.protocol}\n")
        for k, v in out.summary.items():
            fh.write(f"{k} = {format_value(v)}\n")
    with open(out_dir / "report.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out.report) + "\n\nconfig (defaults filled):\n")
        fh.write(emit_config(cfg))
    if out.columns is not None:
        _write_csv(out_dir / "timeseries.csv", out.columns)
    if out.table is not None:
        _write_csv(out_dir / "table.csv", out.table)


def run(cfg: RunConfig, out_dir=None) -> int:
    """Execute ``cfg`` and write its artifacts.  Returns an exit status."""
    out_dir = Path(out_dir if out_dir is not None else cfg.output_dir)
    try:
        out = execute(cfg)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        origin = type(exc).__module__.rsplit(".", 1)[-1]
        print(f"error: {cfg.protocol}: {origin}: {exc}", file=sys.stderr)
        return 1
    try:
        write_outputs(out, cfg, out_dir)
    except OSError as exc:
        print(f"error: writing {out_dir}: {exc}", file=sys.stderr)
        return 1
    return 0


def _run_file(args) -> tuple[str, int, str]:
    path, out_dir, seed, protocol = args
    try:
        cfg = load_config(path)
        if protocol is not None and cfg.protocol != protocol:
            raise ConfigError(f"config is for '{cfg.protocol}', not '{protocol}'", "protocol")
        if seed is not None:
            cfg = cfg.with_seed(seed)
    except ConfigError as exc:
        return path, 2, f"{path}: {exc}"
    except OSError as exc:
        return path, 2, f"{path}: {exc}"
    return path, run(cfg, out_dir), ""


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eitdsp", description="Bosonized EIT polariton simulations.")
    p.add_argument("subcommand", nargs="?", choices=PROTOCOLS)
    p.add_argument("--config", help="YAML run config")
    p.add_argument("--out", help="output directory (default: output.dir of the config)")
    p.add_argument("--seed", type=int, help="seed for randomized parameter draws (overrides the config)")
    p.add_argument("--batch", help="directory of *.yaml configs to run concurrently")
    p.add_argument("--workers", type=int, default=None, help="batch worker processes")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    if args.batch:
        if args.config:
            print("error: give --config or --batch, not both", file=sys.stderr)
            return 2
        files = sorted(Path(args.batch).glob("*.yaml"))
        if not files:
            print(f"error: no *.yaml files in {args.batch}", file=sys.stderr)
            return 2
        root = Path(args.out or "out")
        jobs = [(str(f), str(root / f.stem), args.seed, args.subcommand) for f in files]
        status = 0
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for path, code, msg in pool.map(_run_file, jobs):
                if msg:
                    print(f"error: {msg}", file=sys.stderr)
                print(f"{path}: {'ok' if code == 0 else f'failed ({code})'}")
                status = max(status, code)
        return status

    try:
        if args.config:
            cfg = load_config(args.config)
            if args.subcommand and cfg.protocol != args.subcommand:
                raise ConfigError(f"config is for '{cfg.protocol}', not '{args.subcommand}'", "protocol")
        elif args.subcommand:
            cfg = from_mapping(_DEFAULTS.get(args.subcommand, {}) | {"protocol": args.subcommand})
        else:
            print("error: give a subcommand, --config or --batch", file=sys.stderr)
            return 2
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg, args.out)


# Settings used when a subcommand runs without a config file.
_DEFAULTS = {
    "verify-algebra": {"family": "mlevel", "m": 4},
    "storage": {"family": "mlevel", "m": 3, "g": 0.1, "N": 100, "input": {"alpha0": 2.0}},
    "split": {"family": "mlevel", "m": 4, "g": [0.1, 0.1], "N": 100, "input": {"alpha0": 2.0}},
    "entangle": {"family": "mlevel", "m": 4, "g": [0.1, 0.1], "N": 100, "input": {"kind": "cat", "alpha0": 3.0, "sign": -1}},
    "spectrum": {"family": "mlevel", "m": 5, "g": 1.0, "N": 10, "schedule": {"omega": [3.0, 4.0, 1.0]}},
    "validate-bosonization": {},
}


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
