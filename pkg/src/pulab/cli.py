"""Command-line harness: every experiment behind one ``pulab`` entry point.

Each subcommand maps one-to-one onto a library operation and writes CSV or
JSON artifacts.  Every artifact header embeds the fully resolved run
configuration and the tool version, so a result file identifies the exact
invocation that produced it; feeding that config back through ``--config``
reproduces the run.  CSV bodies are deterministic: identical configuration
(including seeds) gives byte-identical data lines on the same build.

Formats:

* CSV: comma separated, '#'-prefixed header lines, complex values as
  re,im column pairs, 17 significant digits (lossless double round-trip).
* JSON: sorted keys, complex values as [re, im] pairs.

Exit codes: 0 success, 2 configuration error, 3 degenerate-input rejection
(mode collision, pole or caustic hit, overflow guard), 4 accuracy failure
(uncertified function values, missed contour count), 5 internal error.

The ``plots`` subcommand turns finished artifacts into self-contained
matplotlib scripts with the data inlined, one per supported artifact kind:
Trotter convergence curves, norm-drift series, divergence scans, and
imaginary-time periodograms.
"""

import argparse
import cmath
import json
import math
import os
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import lab
from . import ostrogradsky as mech
from . import propagators as prop
from . import special
from . import spectral
from .errors import (
    AccuracyLoss,
    CausticError,
    ConfigError,
    ContourMiss,
    DegenerateModes,
    FresnelError,
    OverflowGuard,
    PoleHit,
    PulabError,
)
from .params import NonlocalParams, PUParams

OUTDIR_ENV = "PULAB_OUTDIR"

PLOT_KINDS = ("trotter-converge", "norm-drift", "divergence-scan", "euclid-pitfall")


# ---------------------------------------------------------------------------
# configuration object


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment invocation: subcommand path plus resolved options.

    Options hold JSON-native values only (numbers, strings, booleans, lists,
    null), so the config round-trips through JSON bit-identically.
    """

    command: str
    options: dict

    def to_json(self):
        return json.dumps(
            {"command": self.command, "options": self.options},
            sort_keys=True,
            separators=(",", ":"),
        )

    @staticmethod
    def from_json(text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or set(doc) != {"command", "options"}:
            raise ConfigError(
                "config document must hold exactly the keys 'command' and 'options'"
            )
        if not isinstance(doc["command"], str) or not isinstance(doc["options"], dict):
            raise ConfigError("'command' must be a string and 'options' an object")
        return ExperimentConfig(doc["command"], doc["options"])


# ---------------------------------------------------------------------------
# option schema


@dataclass(frozen=True)
class Opt:
    name: str
    help: str
    type: object = float
    default: object = None
    nargs: object = None
    choices: object = None
    required: bool = False
    flag: bool = False

    @property
    def dest(self):
        return self.name.replace("-", "_")


@dataclass(frozen=True)
class Command:
    help: str
    opts: tuple
    handler: object


def _coerce(opt, value):
    """Normalize one option value coming from argparse or a JSON config."""
    if value is None:
        return None
    try:
        if opt.flag:
            return bool(value)
        if opt.nargs is not None:
            if isinstance(value, (str, bytes)) or not isinstance(value, (list, tuple)):
                raise ConfigError(f"option '{opt.name}' expects a list")
            return [opt.type(v) for v in value]
        out = opt.type(value)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for option '{opt.name}': {value!r}") from exc
    if opt.choices is not None and out not in opt.choices:
        raise ConfigError(
            f"option '{opt.name}' must be one of {list(opt.choices)}, got {out!r}"
        )
    return out


def _validated_options(cmd, given):
    known = {o.dest: o for o in cmd.opts}
    unknown = sorted(set(given) - set(known))
    if unknown:
        raise ConfigError(f"unknown option(s): {', '.join(unknown)}")
    opts = {}
    for dest, opt in known.items():
        if dest in given and given[dest] is not None:
            opts[dest] = _coerce(opt, given[dest])
        elif opt.required:
            raise ConfigError(f"missing required option: '{opt.name}'")
        else:
            opts[dest] = opt.default
    return opts


# ---------------------------------------------------------------------------
# output helpers


def _inpath(name):
    """Resolve an existing-artifact path against the output directory."""
    base = Path(os.environ.get(OUTDIR_ENV, "."))
    p = Path(name)
    return p if p.is_absolute() else base / p


def _outpath(name, default_name):
    """Resolve an artifact path; bare names land in the output directory."""
    p = _inpath(name if name else default_name)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _fmt(v):
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _cpair(z):
    z = complex(z)
    return [z.real, z.imag]


def _parse_complex(text):
    try:
        return complex(str(text).replace(" ", ""))
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex value {text!r}") from exc


def _header_lines(cfg, diagnostics=None):
    lines = [f"# pulab {__version__}", f"# config {cfg.to_json()}"]
    if diagnostics:
        lines.append(
            "# diagnostics "
            + json.dumps(diagnostics, sort_keys=True, separators=(",", ":"))
        )
    return lines


def _write_csv(path, cfg, columns, diagnostics=None):
    """Write named columns; complex columns expand to name_re, name_im."""
    names, cols = [], []
    for name, data in columns:
        arr = np.asarray(data)
        if np.iscomplexobj(arr):
            names += [name + "_re", name + "_im"]
            cols += [arr.real, arr.imag]
        else:
            names.append(name)
            cols.append(arr)
    lines = _header_lines(cfg, diagnostics)
    lines.append("# columns " + ",".join(names))
    for i in range(len(cols[0])):
        lines.append(",".join(_fmt(c[i]) for c in cols))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path, cfg, result, diagnostics=None):
    doc = {
        "version": f"pulab {__version__}",
        "config": json.loads(cfg.to_json()),
        "result": result,
    }
    if diagnostics:
        doc["diagnostics"] = diagnostics
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _pu_params(o):
    return PUParams(omega_cap=o["omega"], hbar=o["hbar"])


def _nl_params(o):
    return NonlocalParams(omega=o["omega"], delay=o["delay"], hbar=o["hbar"])


# ---------------------------------------------------------------------------
# handlers: fourth-order oscillator mechanics


def _run_pu_classical(cfg):
    o = cfg.options
    p = _pu_params(o)
    s0 = mech.ostrogradsky_state(o["q"], o["qdot"], o["qddot"], o["qdddot"])
    traj = mech.integrate_flow(s0, p, o["t_max"], n_samples=o["samples"])
    path = _outpath(o["out"], "pu_classical.csv")
    _write_csv(
        path,
        cfg,
        [
            ("t", traj.t),
            ("q1", traj.q1),
            ("q2", traj.q2),
            ("pi1", traj.pi1),
            ("pi2", traj.pi2),
            ("energy", traj.energy()),
            ("x_growth", traj.x_observable()),
        ],
    )
    print(f"wrote {path}")
    return 0


def _run_pu_decouple_check(cfg):
    o = cfg.options
    p = _pu_params(o)
    rng = np.random.default_rng(o["seed"])
    worst_energy = 0.0
    worst_roundtrip = 0.0
    for _ in range(o["states"]):
        s = mech.PhaseState(*rng.uniform(-2.0, 2.0, 4))
        d = mech.decouple(s, p)
        h_pu = mech.hamiltonian_pu(s, p)
        h_dec = mech.hamiltonian_decoupled(d, p)
        scale = max(abs(h_pu), abs(h_dec), 1.0)
        worst_energy = max(worst_energy, abs(h_pu - h_dec) / scale)
        back = mech.decouple_inverse(d, p)
        worst_roundtrip = max(
            worst_roundtrip, float(np.max(np.abs(back.as_array() - s.as_array())))
        )
    jac = mech.decouple_matrix(p)
    # canonical two-forms: block form on (q1,q2,Pi1,Pi2), interleaved on
    # the decoupled ordering (X1,P1,X2,P2)
    sigma = np.block(
        [[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]]
    )
    sigma_dec = np.zeros((4, 4))
    for i, j in ((0, 1), (2, 3)):
        sigma_dec[i, j] = 1.0
        sigma_dec[j, i] = -1.0
    symp = float(np.max(np.abs(jac.T @ sigma_dec @ jac - sigma)))
    path = _outpath(o["out"], "pu_decouple_check.json")
    _write_json(
        path,
        cfg,
        {
            "states": o["states"],
            "max_energy_mismatch": worst_energy,
            "max_roundtrip_error": worst_roundtrip,
            "symplectic_defect": symp,
        },
    )
    print(f"wrote {path}")
    return 0


def _run_pu_x_growth(cfg):
    o = cfg.options
    if not o["fit_start"] < o["t_max"]:
        raise ConfigError("fit-start must lie below t-max")
    p = _pu_params(o)
    rng = np.random.default_rng(o["seed"])
    s0 = mech.PhaseState(*rng.uniform(-1.0, 1.0, 4))
    if abs(mech.x_observable(s0, p)) < 0.1:
        # a vanishing growth coordinate leaves nothing to fit; nudge q1
        s0 = mech.PhaseState(s0.q1 + 1.0, s0.q2, s0.pi1, s0.pi2)
    traj = mech.integrate_flow(s0, p, o["t_max"], n_samples=o["samples"])
    mask = traj.t >= o["fit_start"]
    rate = mech.fit_log_slope(traj.t[mask], traj.x_observable()[mask])
    path = _outpath(o["out"], "pu_x_growth.json")
    _write_json(
        path,
        cfg,
        {
            "fitted_rate": rate,
            "expected_rate": o["omega"],
            "rel_error": abs(rate - o["omega"]) / o["omega"],
            "fit_window": [o["fit_start"], o["t_max"]],
        },
    )
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# handlers: delay-oscillator spectra


def _run_nl_modes(cfg):
    o = cfg.options
    p = _nl_params(o)
    d = spectral.find_modes(p, K=o["pairs"], search_radius=o["radius"])
    worst = max(spectral.characteristic_residual(z, p) for z in d.roots_z())
    if worst > 1e-10:
        raise AccuracyLoss(
            f"characteristic residual {worst:.3e} exceeds the 1e-10 budget"
        )
    path = _outpath(o["out"], "nonlocal_modes.json")
    _write_json(
        path,
        cfg,
        {
            "decomposition": json.loads(d.to_json()),
            "roots_z": [_cpair(z) for z in d.roots_z()],
            "max_characteristic_residual": worst,
        },
    )
    print(f"wrote {path}")
    return 0


def _run_nl_residues(cfg):
    o = cfg.options
    p = _nl_params(o)
    d = spectral.residues(spectral.find_modes(p, K=o["pairs"], search_radius=o["radius"]), p)
    path = _outpath(o["out"], "nonlocal_residues.json")
    _write_json(
        path,
        cfg,
        {
            "decomposition": json.loads(d.to_json()),
            "roots_z": [_cpair(z) for z in d.roots_z()],
        },
    )
    print(f"wrote {path}")
    return 0


def _run_nl_pf_check(cfg):
    o = cfg.options
    p = _nl_params(o)
    rng = np.random.default_rng(o["seed"])
    zs = [
        complex(x, y)
        for x, y in zip(
            rng.uniform(-2.0, 2.0, o["points"]), rng.uniform(-2.0, 2.0, o["points"])
        )
    ]
    ks, abs_errs, rel_errs = [], [], []
    for k in o["pairs"]:
        d = spectral.residues(spectral.find_modes(p, K=k), p)
        errs = []
        rels = []
        for z in zs:
            ref = 1.0 / spectral.phi(z, p)
            err = abs(spectral.partial_fraction_eval(d, z) - ref)
            errs.append(err)
            rels.append(err / abs(ref))
        ks.append(k)
        abs_errs.append(max(errs))
        rel_errs.append(max(rels))
    path = _outpath(o["out"], "nonlocal_pf_check.csv")
    _write_csv(
        path,
        cfg,
        [("K", ks), ("max_abs_error", abs_errs), ("max_rel_error", rel_errs)],
    )
    print(f"wrote {path}")
    return 0


def _run_nl_trajectory(cfg):
    o = cfg.options
    p = _nl_params(o)
    d = spectral.find_modes(p, K=o["pairs"], search_radius=o["radius"])
    zs = d.roots_z()
    if o["amplitudes"] is None:
        # bounded default: excite the real modes only
        amps = [1.0] * len(d.real_modes) + [0.0] * len(d.complex_modes)
    else:
        amps = [_parse_complex(a) for a in o["amplitudes"]]
        if len(amps) != len(zs):
            raise ConfigError(
                f"need {len(zs)} amplitudes (one per stored mode), got {len(amps)}"
            )
    t = np.linspace(0.0, o["t_max"], o["samples"])
    q = spectral.mode_trajectory(d, amps, t)
    residual, scale = spectral.mode_residual(d, amps, t, p)
    path = _outpath(o["out"], "nonlocal_trajectory.csv")
    _write_csv(
        path,
        cfg,
        [("t", t), ("q", q)],
        diagnostics={"eom_residual": residual / max(scale, 1e-300)},
    )
    print(f"wrote {path}")
    return 0


def _run_nl_spectrum(cfg):
    o = cfg.options
    p = _nl_params(o)
    d = spectral.residues(spectral.find_modes(p, K=o["pairs"], search_radius=o["radius"]), p)
    gens = spectral.spectrum_generators(d)
    nan = float("nan")
    idx = list(range(len(gens)))
    kinds = [g.kind for g in gens]
    cols = [
        ("index", idx),
        ("kind", kinds),
        ("Omega", [g.Omega if g.Omega is not None else nan for g in gens]),
        ("sign", [g.sign if g.sign is not None else nan for g in gens]),
        ("mu", [g.mu if g.mu is not None else nan for g in gens]),
        ("nu", [g.nu if g.nu is not None else nan for g in gens]),
    ]
    for n in range(o["n_max"] + 1):
        cols.append(
            (
                f"E_{n}",
                [g.spectrum_sample(lam=o["lam"], n=n, hbar=o["hbar"]) for g in gens],
            )
        )
    path = _outpath(o["out"], "nonlocal_spectrum.csv")
    _write_csv(path, cfg, cols)
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# handlers: special functions


def _run_sf_d_check(cfg):
    o = cfg.options
    nu = _parse_complex(o["nu"])
    if o["ray_radii"]:
        cases = []
        for r in o["ray_radii"]:
            for sign in (1.0, -1.0):
                cases.append((nu, r * cmath.exp(sign * 1j * math.pi / 4)))
    else:
        cases = [(nu, _parse_complex(o["z"]))]
    rows = []
    for nu_k, z_k in cases:
        rows.append(
            {
                "nu": _cpair(nu_k),
                "z": _cpair(z_k),
                "residual": special.d_recurrence_residual(nu_k, z_k),
            }
        )
    worst = max(r["residual"] for r in rows)
    if worst > o["tolerance"]:
        raise AccuracyLoss(
            f"recurrence residual {worst:.3e} exceeds tolerance {o['tolerance']:.1e}"
        )
    path = _outpath(o["out"], "sf_d_check.json")
    _write_json(
        path,
        cfg,
        {"cases": rows, "max_residual": worst, "tolerance": o["tolerance"]},
    )
    print(f"wrote {path}")
    return 0


def _run_sf_eigenfunction(cfg):
    o = cfg.options
    p = _pu_params(o)
    x = np.linspace(o["x_min"], o["x_max"], o["points"])
    kind = o["kind"]
    if kind == "oscillator":
        psi = special.oscillator_eigenfunction(o["n"], x, p)
        diag = {"energy": p.hbar * p.omega_cap * (o["n"] + 0.5)}
    elif kind == "inverted":
        psi = special.inverted_eigenfunction(o["epsilon"], o["branch"], x, p)
        diag = {"epsilon": o["epsilon"], "branch": o["branch"]}
    else:
        label = special.EigenLabel(n=o["n"], epsilon=o["epsilon"], branch=o["branch"])
        psi = special.pu_eigenfunction(label, x, o["x2"], p)
        diag = {"energy": special.pu_energy(label, p), "x2": o["x2"]}
    path = _outpath(o["out"], "sf_eigenfunction.csv")
    _write_csv(path, cfg, [("x", x), ("psi", psi)], diagnostics=diag)
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# handlers: propagators


def _run_prop_closed(cfg):
    o = cfg.options
    kind = o["kind"]
    if kind == "free":
        val = prop.free_propagator(o["x"], o["y"], o["t"], o["hbar"])
    elif kind == "inverted":
        val = prop.inverted_propagator(o["x"], o["y"], o["t"], o["omega"], o["hbar"])
    elif kind == "harmonic":
        val = prop.harmonic_propagator(o["x"], o["y"], o["t"], o["omega"], o["hbar"])
    else:
        val = prop.pu_propagator(
            o["x1p"], o["x2p"], o["x1"], o["x2"], o["t"], _pu_params(o)
        )
    path = _outpath(o["out"], "propagator_closed.json")
    _write_json(
        path,
        cfg,
        {"value": _cpair(val), "abs": abs(val), "phase": cmath.phase(val)},
    )
    print(f"wrote {path}")
    return 0


def _run_prop_trotter_converge(cfg):
    o = cfg.options
    closed_form = {
        "inverted": prop.inverted_propagator,
        "harmonic": prop.harmonic_propagator,
    }[o["potential"]]
    ref = closed_form(o["x"], o["y"], o["t"], o["omega"], o["hbar"])
    ns, abs_errs, rel_errs = [], [], []
    for n in o["n_list"]:
        val = prop.trotter_propagator(
            o["x"], o["y"], o["t"], o["omega"], o["hbar"], N=n,
            potential=o["potential"],
        )
        ns.append(n)
        abs_errs.append(abs(val - ref))
        rel_errs.append(abs(val - ref) / abs(ref))
    path = _outpath(o["out"], "trotter_converge.csv")
    _write_csv(
        path,
        cfg,
        [("N", ns), ("abs_error", abs_errs), ("rel_error", rel_errs)],
        diagnostics={"closed_value": _cpair(ref)},
    )
    print(f"wrote {path}")
    return 0


def _run_prop_spectral_identity(cfg):
    o = cfg.options
    p = _pu_params(o)
    lhs, rhs = prop.spectral_identity(
        o["E"], o["t_max"], p, window=o["window"], n_grid=o["grid"]
    )
    ratio = lhs / rhs
    path = _outpath(o["out"], "spectral_identity.json")
    _write_json(
        path,
        cfg,
        {
            "lhs": _cpair(lhs),
            "rhs": rhs,
            "ratio": _cpair(ratio),
            "ratio_abs": abs(ratio),
        },
    )
    print(f"wrote {path}")
    return 0


def _run_prop_euclid_pitfall(cfg):
    o = cfg.options
    tau = np.linspace(o["tau_max"] / o["points"], o["tau_max"], o["points"])
    samples, verdict = prop.euclidean_pitfall(tau, o["omega"], o["hbar"], kind=o["kind"])
    path = _outpath(o["out"], "euclid_pitfall.csv")
    _write_csv(path, cfg, [("tau", tau), ("abs_k", samples)])
    vpath = _outpath(o["verdict_out"], "euclid_pitfall.verdict.json")
    _write_json(vpath, cfg, json.loads(verdict.to_json()))
    print(f"wrote {path}")
    print(f"wrote {vpath}")
    return 0


# ---------------------------------------------------------------------------
# handlers: grid laboratory


def _run_lab_evolve(cfg):
    o = cfg.options
    grid = lab.Grid1D(o["extent"], o["points"])
    state = lab.gaussian_state(
        grid, center=o["center"], momentum=o["momentum"], width=o["width"],
        hbar=o["hbar"],
    )
    op = lab.build_hamiltonian_inverted(
        grid, o["omega"], hbar=o["hbar"], potential=o["potential"]
    )
    final, norms = lab.evolve(
        state, op, o["dt"], o["steps"], hbar=o["hbar"], return_norms=True
    )
    steps = np.arange(len(norms))
    path = _outpath(o["out"], "lab_evolve.csv")
    _write_csv(
        path,
        cfg,
        [
            ("step", steps),
            ("time", steps * o["dt"]),
            ("norm", norms),
            ("drift", np.abs(norms - norms[0])),
        ],
        diagnostics={"final_boundary_mass": final.boundary_mass()},
    )
    print(f"wrote {path}")
    return 0


def _run_lab_dilrot(cfg):
    o = cfg.options
    grid = lab.Grid2D(o["extent"], o["points"])
    state = lab.sector_state(grid, o["sector"], width=o["width"])
    op = lab.build_hamiltonian_dilrot(grid, o["mu"], o["nu"], hbar=o["hbar"])
    asym = lab.boundary_asymmetry(op, state)
    final, norms = lab.evolve(
        state, op, o["dt"], o["steps"], hbar=o["hbar"], return_norms=True
    )
    steps = np.arange(len(norms))
    path = _outpath(o["out"], "lab_dilrot.csv")
    _write_csv(
        path,
        cfg,
        [
            ("step", steps),
            ("time", steps * o["dt"]),
            ("norm", norms),
            ("drift", np.abs(norms - norms[0])),
        ],
        diagnostics={
            "state_felt_asymmetry": asym,
            "final_boundary_mass": final.boundary_mass(),
        },
    )
    print(f"wrote {path}")
    return 0


def _run_lab_divergence_scan(cfg):
    o = cfg.options
    p = _pu_params(o)
    ell = math.sqrt(o["hbar"] / o["omega"])
    cutoffs = [c * ell for c in o["cutoffs"]]
    pairs = lab.divergence_scan(
        o["n_prime"], o["eps_prime"], o["n"], o["eps"], cutoffs, p,
        branch_prime=o["branch_prime"], branch=o["branch"], damped=o["damped"],
    )
    values = [v for _, v in pairs]
    mags = [abs(v) for v in values]
    increments = [mags[0]] + [b - a for a, b in zip(mags, mags[1:])]
    path = _outpath(o["out"], "divergence_scan.csv")
    _write_csv(
        path,
        cfg,
        [
            ("cutoff_ell", o["cutoffs"]),
            ("cutoff", [r for r, _ in pairs]),
            ("element", values),
            ("abs_element", mags),
            ("increment", increments),
        ],
    )
    print(f"wrote {path}")
    return 0


def _run_lab_commutator(cfg):
    o = cfg.options
    grid = lab.Grid1D(o["extent"], o["points"])
    residual = lab.commutator_check(o["omega"], o["hbar"], grid)
    path = _outpath(o["out"], "lab_commutator.json")
    _write_json(
        path,
        cfg,
        {"residual": residual, "extent": o["extent"], "points": o["points"]},
    )
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# plot-script emission


def _read_csv_artifact(path):
    if not path.is_file():
        raise ConfigError(f"missing artifact: {path}")
    names = None
    rows = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            if line.startswith("# columns "):
                names = line[len("# columns "):].split(",")
        elif line.strip():
            rows.append(line.split(","))
    if names is None or not rows:
        raise ConfigError(f"artifact {path} has no column header or no data")
    cols = {}
    for i, name in enumerate(names):
        try:
            cols[name] = [float(r[i]) for r in rows]
        except ValueError:
            cols[name] = [r[i] for r in rows]
    return cols


def _need(cols, names, kind, path):
    for name in names:
        if name not in cols:
            raise ConfigError(
                f"artifact {path} lacks column '{name}' required for a "
                f"{kind} plot"
            )
    return [cols[n] for n in names]


def _pylist(values):
    parts = []
    for v in values:
        f = float(v)
        parts.append('float("nan")' if math.isnan(f) else repr(f))
    return "[" + ", ".join(parts) + "]"


def _script_prelude(title, out_png):
    return (
        "#!/usr/bin/env python3\n"
        f'"""{title} (generated by pulab {__version__}; data inlined)."""\n'
        "import matplotlib\n"
        'matplotlib.use("Agg")\n'
        "import matplotlib.pyplot as plt\n"
        "\n"
        f"OUT = {out_png!r}\n"
        "\n"
    )


def emit_plot_script(kind, artifact, verdict_path=None):
    """Return the text of a self-contained plotting script for an artifact.

    The script inlines the artifact data, needs only matplotlib at run
    time, and saves a PNG next to wherever it is executed.
    """
    artifact = Path(artifact)
    cols = _read_csv_artifact(artifact)
    png = artifact.stem + ".png"
    if kind == "trotter-converge":
        n, err = _need(cols, ["N", "abs_error"], kind, artifact)
        body = (
            f"N = {_pylist(n)}\n"
            f"err = {_pylist(err)}\n"
            "\n"
            "plt.figure(figsize=(5.2, 4.0))\n"
            'plt.loglog(N, err, "o-", label="measured")\n'
            "guide = [err[0] * N[0] / n for n in N]\n"
            'plt.loglog(N, guide, "--", color="gray", label="~1/N")\n'
            'plt.xlabel("factorization steps N")\n'
            'plt.ylabel("|K_N - K|")\n'
            'plt.title("product-formula convergence")\n'
            "plt.legend()\n"
            'plt.grid(True, which="both", alpha=0.3)\n'
        )
    elif kind == "norm-drift":
        t, drift = _need(cols, ["time", "drift"], kind, artifact)
        body = (
            f"t = {_pylist(t)}\n"
            f"drift = {_pylist(drift)}\n"
            "\n"
            "plt.figure(figsize=(5.2, 4.0))\n"
            "floor = [max(d, 1e-18) for d in drift]\n"
            "plt.semilogy(t, floor)\n"
            'plt.xlabel("time")\n'
            'plt.ylabel("|norm(t) - norm(0)|")\n'
            'plt.title("norm drift under Cayley evolution")\n'
            "plt.grid(True, alpha=0.3)\n"
        )
    elif kind == "divergence-scan":
        r, mag, inc = _need(
            cols, ["cutoff", "abs_element", "increment"], kind, artifact
        )
        body = (
            f"R = {_pylist(r)}\n"
            f"mag = {_pylist(mag)}\n"
            f"inc = {_pylist(inc)}\n"
            "\n"
            "plt.figure(figsize=(5.2, 4.0))\n"
            'plt.plot(R, mag, "o-", label="|element|")\n'
            'plt.plot(R, inc, "s--", label="shell increment")\n'
            'plt.xlabel("cutoff R")\n'
            'plt.ylabel("truncated matrix element")\n'
            'plt.title("growth-observable cutoff scan")\n'
            "plt.legend()\n"
            "plt.grid(True, alpha=0.3)\n"
        )
    elif kind == "euclid-pitfall":
        tau, amp = _need(cols, ["tau", "abs_k"], kind, artifact)
        if verdict_path is None:
            stem = artifact.name[: -len(artifact.suffix)] if artifact.suffix else artifact.name
            verdict_path = artifact.with_name(stem + ".verdict.json")
        verdict_path = Path(verdict_path)
        if not verdict_path.is_file():
            raise ConfigError(f"missing artifact: {verdict_path}")
        vdoc = json.loads(verdict_path.read_text())
        verdict = vdoc.get("result", vdoc)
        period = verdict.get("period")
        energy = verdict.get("ground_energy_estimate")
        annotate = ""
        if verdict.get("periodic") and period:
            annotate = (
                f"period = {float(period)!r}\n"
                "k = 1\n"
                "while k * period <= max(tau):\n"
                '    plt.axvline(k * period, ls="--", color="gray", alpha=0.6)\n'
                "    k += 1\n"
                f'plt.title("imaginary-time amplitude, detected period '
                f'{float(period):.6g}")\n'
            )
        elif energy is not None:
            annotate = (
                f'plt.title("imaginary-time amplitude, ground energy estimate '
                f'{float(energy):.6g}")\n'
            )
        else:
            annotate = 'plt.title("imaginary-time amplitude")\n'
        body = (
            f"tau = {_pylist(tau)}\n"
            f"amp = {_pylist(amp)}\n"
            "\n"
            "plt.figure(figsize=(5.2, 4.0))\n"
            "plt.semilogy(tau, amp)\n"
            'plt.xlabel("tau")\n'
            'plt.ylabel("|K(0,0;-i tau)|")\n'
            + annotate
            + "plt.grid(True, alpha=0.3)\n"
        )
    else:
        raise ConfigError(
            f"unknown plot kind {kind!r}; choose from {', '.join(PLOT_KINDS)}"
        )
    tail = "plt.tight_layout()\nplt.savefig(OUT, dpi=160)\nprint(f\"wrote {OUT}\")\n"
    title = f"{kind} plot for {artifact.name}"
    return _script_prelude(title, png) + body + tail


def _run_plots(cfg):
    o = cfg.options
    artifact = _inpath(o["artifact"])
    verdict = _inpath(o["verdict"]) if o["verdict"] else None
    text = emit_plot_script(o["kind"], artifact, verdict)
    default_name = artifact.stem + "_plot.py"
    path = _outpath(o["out"], default_name)
    path.write_text(text)
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# command registry

_OMEGA = Opt("omega", "fourth-order frequency split parameter", default=1.0)
_HBAR = Opt("hbar", "reduced Planck constant", default=1.0)
_OUT = Opt("out", "artifact path; bare names land in the output directory",
           type=str)

COMMANDS = {
    ("pu", "classical"): Command(
        "integrate the canonical flow and tabulate the trajectory",
        (
            _OMEGA, _HBAR,
            Opt("q", "initial position", default=1.0),
            Opt("qdot", "initial velocity", default=0.0),
            Opt("qddot", "initial acceleration", default=0.0),
            Opt("qdddot", "initial jerk", default=0.0),
            Opt("t-max", "integration horizon", default=5.0),
            Opt("samples", "number of output samples", type=int, default=2001),
            _OUT,
        ),
        _run_pu_classical,
    ),
    ("pu", "decouple-check"): Command(
        "audit the decoupling map on random states: energy match, "
        "round-trip, symplectic defect",
        (
            _OMEGA, _HBAR,
            Opt("states", "number of random phase-space states", type=int,
                default=1000),
            Opt("seed", "random seed", type=int, default=0),
            _OUT,
        ),
        _run_pu_decouple_check,
    ),
    ("pu", "x-growth"): Command(
        "fit the exponential growth rate of the growth observable",
        (
            _OMEGA, _HBAR,
            Opt("t-max", "integration horizon", default=3.0),
            Opt("samples", "number of samples", type=int, default=1501),
            Opt("fit-start", "discard samples before this time", default=0.5),
            Opt("seed", "random seed for the initial state", type=int, default=11),
            _OUT,
        ),
        _run_pu_x_growth,
    ),
    ("nonlocal", "modes"): Command(
        "locate the delay-oscillator modes and write the decomposition",
        (
            Opt("omega", "oscillator frequency", default=1.0),
            Opt("delay", "delay time", default=1.0),
            _HBAR,
            Opt("pairs", "retained complex mode pairs", type=int, default=32),
            Opt("radius", "root search radius", default=40.0),
            _OUT,
        ),
        _run_nl_modes,
    ),
    ("nonlocal", "residues"): Command(
        "mode decomposition with residue weights populated",
        (
            Opt("omega", "oscillator frequency", default=1.0),
            Opt("delay", "delay time", default=1.0),
            _HBAR,
            Opt("pairs", "retained complex mode pairs", type=int, default=32),
            Opt("radius", "root search radius", default=40.0),
            _OUT,
        ),
        _run_nl_residues,
    ),
    ("nonlocal", "pf-check"): Command(
        "two-sided partial-fraction identity error vs truncation depth",
        (
            Opt("omega", "oscillator frequency", default=1.0),
            Opt("delay", "delay time", default=1.0),
            _HBAR,
            Opt("pairs", "truncation depths to sweep", type=int, nargs="+",
                default=[4, 8, 16, 32, 64]),
            Opt("points", "random probe points", type=int, default=50),
            Opt("seed", "random seed for the probes", type=int, default=7),
            _OUT,
        ),
        _run_nl_pf_check,
    ),
    ("nonlocal", "trajectory"): Command(
        "superpose stored modes into a trajectory and check the "
        "delayed equation of motion",
        (
            Opt("omega", "oscillator frequency", default=1.0),
            Opt("delay", "delay time", default=1.0),
            _HBAR,
            Opt("pairs", "retained complex mode pairs", type=int, default=4),
            Opt("radius", "root search radius", default=40.0),
            Opt("t-max", "trajectory horizon", default=10.0),
            Opt("samples", "number of samples", type=int, default=2001),
            Opt("amplitudes", "one complex amplitude per stored mode, e.g. "
                "1 0.5+0.2j (default: real modes only)", type=str, nargs="+"),
            _OUT,
        ),
        _run_nl_trajectory,
    ),
    ("nonlocal", "spectrum"): Command(
        "tabulate the commuting generators and sample their spectra",
        (
            Opt("omega", "oscillator frequency", default=1.0),
            Opt("delay", "delay time", default=1.0),
            _HBAR,
            Opt("pairs", "retained complex mode pairs", type=int, default=8),
            Opt("radius", "root search radius", default=40.0),
            Opt("lam", "continuous dilatation label", default=0.0),
            Opt("n-max", "sample levels n = 0..n-max", type=int, default=3),
            _OUT,
        ),
        _run_nl_spectrum,
    ),
    ("sf", "d-check"): Command(
        "audit the three-term order recurrence of the cylinder function",
        (
            Opt("nu", "complex order; spell leading-dash values as "
                "--nu=-0.5-0.8j", type=str, default="-0.5-0.8j"),
            Opt("z", "complex argument, e.g. 1.5+0.2j", type=str,
                default="5+5j"),
            Opt("ray-radii", "audit both 45-degree rays at these radii "
                "instead of a single point", nargs="+"),
            Opt("tolerance", "largest acceptable relative residual",
                default=1e-7),
            _OUT,
        ),
        _run_sf_d_check,
    ),
    ("sf", "eigenfunction"): Command(
        "tabulate an exact eigenfunction on a grid",
        (
            Opt("kind", "which factor to evaluate", type=str,
                default="oscillator",
                choices=("oscillator", "inverted", "full")),
            Opt("n", "oscillator level", type=int, default=0),
            Opt("epsilon", "continuous label of the unstable factor",
                default=0.0),
            Opt("branch", "ray selector, +1 or -1", type=int, default=1,
                choices=(1, -1)),
            _OMEGA, _HBAR,
            Opt("x-min", "grid start", default=-5.0),
            Opt("x-max", "grid end", default=5.0),
            Opt("points", "grid points", type=int, default=201),
            Opt("x2", "fixed second coordinate (kind full)", default=0.0),
            _OUT,
        ),
        _run_sf_eigenfunction,
    ),
    ("propagator", "closed"): Command(
        "evaluate a closed-form propagator at one point",
        (
            Opt("kind", "which kernel", type=str, default="inverted",
                choices=("free", "inverted", "harmonic", "pu")),
            Opt("x", "final position (1d kinds)", default=0.3),
            Opt("y", "initial position (1d kinds)", default=-0.2),
            Opt("t", "elapsed time", default=1.0),
            _OMEGA, _HBAR,
            Opt("x1p", "final first coordinate (kind pu)", default=0.3),
            Opt("x2p", "final second coordinate (kind pu)", default=-0.2),
            Opt("x1", "initial first coordinate (kind pu)", default=0.1),
            Opt("x2", "initial second coordinate (kind pu)", default=0.2),
            _OUT,
        ),
        _run_prop_closed,
    ),
    ("propagator", "trotter-converge"): Command(
        "error of the split-step product against the closed form vs N",
        (
            _OMEGA, _HBAR,
            Opt("t", "elapsed time", default=1.0),
            Opt("x", "final position", default=0.3),
            Opt("y", "initial position", default=-0.2),
            Opt("potential", "sign of the quadratic potential", type=str,
                default="inverted", choices=("inverted", "harmonic")),
            Opt("n-list", "step counts to sweep", type=int, nargs="+",
                default=[8, 16, 32, 64, 128, 256]),
            _OUT,
        ),
        _run_prop_trotter_converge,
    ),
    ("propagator", "spectral-identity"): Command(
        "Fourier-transformed return amplitude against the eigenfunction sum",
        (
            Opt("E", "energy at which both sides are evaluated", default=0.0),
            Opt("t-max", "time-integration horizon", default=40.0),
            _OMEGA, _HBAR,
            Opt("window", "cosine-taper fraction of the horizon", default=0.2),
            Opt("grid", "odd number of quadrature nodes", type=int,
                default=16001),
            _OUT,
        ),
        _run_prop_spectral_identity,
    ),
    ("propagator", "euclid-pitfall"): Command(
        "naive imaginary-time continuation of the return amplitude",
        (
            _OMEGA, _HBAR,
            Opt("kind", "which kernel", type=str, default="inverted",
                choices=("inverted", "harmonic", "free")),
            Opt("tau-max", "largest imaginary time", default=10.0),
            Opt("points", "grid points", type=int, default=4096),
            _OUT,
            Opt("verdict-out", "verdict path (default "
                "euclid_pitfall.verdict.json)", type=str),
        ),
        _run_prop_euclid_pitfall,
    ),
    ("lab", "evolve"): Command(
        "Cayley evolution of a wave packet with the norm series recorded",
        (
            _OMEGA, _HBAR,
            Opt("extent", "half-width of the box", default=12.0),
            Opt("points", "grid points", type=int, default=256),
            Opt("potential", "sign of the quadratic potential", type=str,
                default="inverted", choices=("inverted", "harmonic")),
            Opt("dt", "time step", default=0.002),
            Opt("steps", "number of steps", type=int, default=2000),
            Opt("center", "packet center", default=0.0),
            Opt("momentum", "packet momentum", default=0.0),
            Opt("width", "packet density width", default=1.0),
            _OUT,
        ),
        _run_lab_evolve,
    ),
    ("lab", "dilrot"): Command(
        "Cayley evolution under the dilatation-rotation generator",
        (
            Opt("mu", "dilatation strength", default=0.15),
            Opt("nu", "rotation strength", default=0.9),
            _HBAR,
            Opt("extent", "half-width of the square box", default=12.0),
            Opt("points", "grid points per axis", type=int, default=96),
            Opt("dt", "time step", default=0.002),
            Opt("steps", "number of steps", type=int, default=200),
            Opt("sector", "angular sector of the initial state", type=int,
                default=1),
            Opt("width", "radial width of the initial state", default=1.0),
            _OUT,
        ),
        _run_lab_dilrot,
    ),
    ("lab", "divergence-scan"): Command(
        "truncated growth-observable matrix elements vs cutoff",
        (
            _OMEGA, _HBAR,
            Opt("n-prime", "bra oscillator level", type=int, default=0),
            Opt("eps-prime", "bra continuous label", default=-0.7),
            Opt("branch-prime", "bra ray selector", type=int, default=1,
                choices=(1, -1)),
            Opt("n", "ket oscillator level", type=int, default=0),
            Opt("eps", "ket continuous label", default=0.3),
            Opt("branch", "ket ray selector", type=int, default=1,
                choices=(1, -1)),
            Opt("cutoffs", "cutoff radii in units of sqrt(hbar/omega)",
                nargs="+", default=[5.0, 10.0, 20.0, 40.0]),
            Opt("damped", "use the damped convergent control observable",
                flag=True, default=False),
            _OUT,
        ),
        _run_lab_divergence_scan,
    ),
    ("lab", "commutator"): Command(
        "discrete commutator identity residual on one grid",
        (
            _OMEGA, _HBAR,
            Opt("extent", "half-width of the box", default=20.0),
            Opt("points", "grid points", type=int, default=1024),
            _OUT,
        ),
        _run_lab_commutator,
    ),
    ("plots",): Command(
        "emit a self-contained plotting script from a finished artifact",
        (
            Opt("kind", "artifact kind", type=str, required=True,
                choices=PLOT_KINDS),
            Opt("artifact", "path of the CSV artifact", type=str,
                required=True),
            Opt("verdict", "verdict JSON path (euclid-pitfall; default "
                "sibling .verdict.json)", type=str),
            _OUT,
        ),
        _run_plots,
    ),
}

GROUP_HELP = {
    "pu": "fourth-order oscillator mechanics",
    "nonlocal": "delay-oscillator mode analysis",
    "sf": "special-function audits and eigenfunction tables",
    "propagator": "closed-form and split-step propagators",
    "lab": "finite-difference grid experiments",
}


# ---------------------------------------------------------------------------
# dispatch


def run(config: ExperimentConfig):
    """Validate a config against its command schema and run the experiment.

    Returns the process exit status; raises the taxonomy errors for the
    caller (or :func:`main`) to map onto exit codes.
    """
    key = tuple(config.command.split())
    if key not in COMMANDS:
        raise ConfigError(f"unknown command: {config.command!r}")
    cmd = COMMANDS[key]
    resolved = ExperimentConfig(config.command, _validated_options(cmd, config.options))
    return cmd.handler(resolved)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="pulab",
        description="numerical experiments on fourth-order and delay "
        "oscillators",
        epilog=f"artifacts land in ${OUTDIR_ENV} when that is set "
        "(current directory otherwise) unless --out gives a path",
    )
    ap.add_argument("--version", action="version", version=f"pulab {__version__}")
    top = ap.add_subparsers(dest="_group", metavar="group", required=True)
    group_subs = {}
    for key, cmd in sorted(COMMANDS.items()):
        if len(key) == 1:
            sp = top.add_parser(key[0], help=cmd.help, description=cmd.help)
        else:
            group, name = key
            if group not in group_subs:
                gp = top.add_parser(group, help=GROUP_HELP[group],
                                    description=GROUP_HELP[group])
                group_subs[group] = gp.add_subparsers(
                    dest="_name", metavar="command", required=True
                )
            sp = group_subs[group].add_parser(name, help=cmd.help,
                                              description=cmd.help)
        for o in cmd.opts:
            kwargs = {"help": o.help, "default": o.default}
            if o.flag:
                kwargs["action"] = "store_true"
            else:
                kwargs["type"] = o.type
                if o.nargs is not None:
                    kwargs["nargs"] = o.nargs
                if o.choices is not None:
                    kwargs["choices"] = o.choices
            if o.required:
                kwargs["required"] = True
            sp.add_argument("--" + o.name, **kwargs)
        sp.add_argument(
            "--config", metavar="FILE",
            help="JSON file whose values override the flags; either a flat "
            "option object or a full saved config document",
        )
        sp.set_defaults(_key=key)
    return ap


def _config_from_args(args):
    key = args._key
    cmd = COMMANDS[key]
    command_str = " ".join(key)
    options = {o.dest: getattr(args, o.dest) for o in cmd.opts}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config file {args.config} is not valid JSON: {exc}"
            ) from exc
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        if set(doc) == {"command", "options"}:
            if doc["command"] != command_str:
                raise ConfigError(
                    f"config file is for {doc['command']!r}, "
                    f"not {command_str!r}"
                )
            doc = doc["options"]
        options.update(doc)
    return ExperimentConfig(command_str, options)


def _err(exc):
    print(f"pulab: error: {exc}", file=sys.stderr)


def main(argv=None):
    """Entry point; returns the exit status instead of raising."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return 0 if code == 0 else 2
    try:
        return run(_config_from_args(args))
    except ConfigError as exc:
        _err(exc)
        return 2
    except (DegenerateModes, PoleHit, CausticError, FresnelError,
            OverflowGuard) as exc:
        _err(exc)
        return 3
    except (AccuracyLoss, ContourMiss) as exc:
        _err(exc)
        return 4
    except PulabError as exc:
        _err(exc)
        return 5
    except Exception as exc:
        traceback.print_exc()
        _err(exc)
        return 5


if __name__ == "__main__":
    sys.exit(main())
