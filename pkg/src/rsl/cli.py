"""Command-line front end: ``rsl <command> --config <path> --out <path> [--seed N] [--quiet]``.

The config is an INI file (sections ``manifold``, ``orbit``, ``numerics``,
``command``); unknown sections or keys are rejected. Every command writes a
JSON document {meta, results, residuals, pass} with sorted keys and floats
printed to 17 significant digits. Exit codes: 0 pass, 2 tolerance failure,
3 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from typing import Any, Callable, Dict, Optional

import numpy as np

from . import __version__
from ._util import I2
from .errors import ConfigError, RSLError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 2, 3

COMMANDS = ("check-triad", "orbits", "spectrum", "compare-formulas", "oracle",
            "perturb-split", "variation-fd", "b-solve", "flow")


def _floats(text: str):
    return [float(x) for x in text.replace(",", " ").split()]


# section -> key -> (parser, default)
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "manifold": {
        "kind": (str, "ellipsoid"),
        "a": (float, 1.0),
        "b": (float, math.sqrt(2.0)),
        "twist": (float, 0.0),
        "wavenumber": (float, 12.0),
    },
    "orbit": {
        "select": (str, "short"),
        "cover": (int, 1),
        "n": (int, 256),
    },
    "numerics": {
        "scheme": (str, "fourier"),
        "window": (float, 30.0),
        "gap_tol": (float, 1e-5),
        "tol": (float, 1e-8),
        "seed": (int, 42),
    },
    "command": {
        "points": (int, 100),
        "max_cover": (int, 2),
        "oracle_tol": (float, 1e-6),
        "cluster_mu": (float, 0.0),
        "s_list": (_floats, [1e-2, 1e-3]),
        "deviation_tol": (float, 0.1),
        "slope_min": (float, 0.8),
        "slope_max": (float, 1.2),
        "mu": (float, float("nan")),
        "substeps": (int, 8),
        "family": (str, "synthetic"),
        "s0": (float, -math.pi),
        "s1": (float, math.pi),
        "grid_n": (int, 32),
        "flow_n": (int, 64),
        "csv": (str, ""),
    },
}

POSITIVE = {("numerics", "window"), ("numerics", "gap_tol"), ("numerics", "tol"),
            ("command", "oracle_tol"), ("command", "deviation_tol"), ("orbit", "n"),
            ("orbit", "cover"), ("command", "grid_n"), ("command", "flow_n")}
CHOICES = {("manifold", "kind"): ("ellipsoid", "r3"), ("orbit", "select"): ("short", "long"),
           ("numerics", "scheme"): ("fourier", "fd2"),
           ("command", "family"): ("synthetic", "constant", "j_path")}


def load_config(path: str) -> Dict[str, Dict[str, Any]]:
    """Parse and validate a config file; raises ConfigError naming the offending key."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    cfg = {sec: {k: v[1] for k, v in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key '{key}' in [{sec}]")
            parser = SCHEMA[sec][key][0]
            try:
                val = parser(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"bad value for '{key}' in [{sec}]: {raw!r}") from exc
            if (sec, key) in CHOICES and val not in CHOICES[(sec, key)]:
                raise ConfigError(f"'{key}' in [{sec}] must be one of {CHOICES[(sec, key)]}")
            if (sec, key) in POSITIVE and not val > 0:
                raise ConfigError(f"'{key}' in [{sec}] must be positive")
            cfg[sec][key] = val
    return cfg


# --- canonical JSON -------------------------------------------------------

def _canon(obj) -> str:
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ", ".join(f"{_canon(k)}: {_canon(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _canon(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        return format(x, ".17g")
    if isinstance(obj, str):
        import json

        return json.dumps(obj, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc) -> str:
    return _canon(doc) + "\n"


# --- shared builders ------------------------------------------------------

def _triad(cfg):
    from .geometry import make_ellipsoid, make_standard_r3

    m = cfg["manifold"]
    if m["kind"] == "r3":
        return make_standard_r3()
    return make_ellipsoid(m["a"], m["b"], twist=m["twist"], wavenumber=m["wavenumber"])


def _orbit(cfg, triad=None):
    from .orbits import principal_orbits

    triad = triad or _triad(cfg)
    if triad.params.get("kind") != "ellipsoid":
        raise ConfigError("this command needs an ellipsoid manifold")
    o = cfg["orbit"]
    orbits = principal_orbits(triad, o["cover"], N=o["n"])
    idx = 2 * (o["cover"] - 1) + (0 if o["select"] == "short" else 1)
    return orbits[idx]


def _operator(cfg, formula="F1_triad"):
    from .frames import build_trivialization
    from .operator import assemble

    orbit = _orbit(cfg)
    triv = build_trivialization(orbit)
    return orbit, triv, assemble(orbit, triv, formula)


def _spectrum(cfg, op):
    from .spectral import discretize, eigensolve

    num = cfg["numerics"]
    disc = discretize(op, num["scheme"])
    return disc, eigensolve(disc, num["window"], gap_tol=num["gap_tol"])


# --- commands -------------------------------------------------------------

def cmd_check_triad(cfg):
    from .geometry import RESIDUAL_NAMES, sample_points, triad_residuals

    tr = _triad(cfg)
    pts = sample_points(tr, cfg["command"]["points"], cfg["numerics"]["seed"])
    res = triad_residuals(tr, pts)
    worst = {k: float(np.max(res[k])) for k in RESIDUAL_NAMES if k in res}
    fd_keys = {"lieJ_anticommute", "lieJ_symmetric"}
    ok = all(v <= (1e-6 if k in fd_keys else 1e-10) for k, v in worst.items())
    return {"triad": tr.name, "points": len(pts)}, worst, ok


def cmd_orbits(cfg):
    from .orbits import linearized_return_map, orbit_residuals, principal_orbits

    tr = _triad(cfg)
    out = []
    ok = True
    closure = 0.0
    for o in principal_orbits(tr, cfg["command"]["max_cover"], N=cfg["orbit"]["n"]):
        r = orbit_residuals(o)
        rm = linearized_return_map(o)
        closure = max(closure, r["closure"], r["isospeed"])
        ok &= r["closure"] <= 1e-7
        out.append({"label": o.label, "cover": o.cover, "action": o.action,
                    "return_map_trace": rm.trace, "nondegenerate": rm.nondegenerate})
    return {"orbits": out}, {"closure": closure}, ok


def cmd_spectrum(cfg):
    from .spectral import spectrum_residuals

    _, _, op = _operator(cfg)
    disc, sp = _spectrum(cfg, op)
    r = spectrum_residuals(disc, sp)
    res = {"asymmetry_defect": disc.defect, **r}
    ok = r["max_residual"] <= 1e-6 and r["orthonormality"] <= 1e-8
    return {"eigenvalues": sp.mus.tolist(),
            "clusters": [{"mu": c.mu, "multiplicity": c.multiplicity} for c in sp.clusters],
            "gap": sp.gap, "method": sp.method, "N": sp.N}, res, ok


def cmd_compare_formulas(cfg):
    from .operator import cross_formula_report

    orbit, triv, _ = _operator(cfg)
    rep = cross_formula_report(orbit, triv)
    ok = rep["F1_F2"] <= 1e-8 and rep["F1_F3"] <= 1e-6 and rep["asymmetry"] <= 1e-8
    return {"orbit": orbit.label, "action": orbit.action}, rep, ok


def cmd_oracle(cfg):
    from .spectral import compare_spectra, monodromy_oracle

    _, _, op = _operator(cfg)
    _, sp = _spectrum(cfg, op)
    roots = monodromy_oracle(op, cfg["numerics"]["window"])
    rep = compare_spectra(sp, roots)
    ok = rep.ok and rep.max_delta <= cfg["command"]["oracle_tol"]
    return {"roots": [{"mu": m, "multiplicity": k} for m, k in roots],
            "comparison": rep.as_dict()}, {"max_delta": rep.max_delta}, ok


def cmd_perturb_split(cfg):
    from .perturb import random_tangent, splitting_experiment

    orbit, _, op = _operator(cfg)
    _, sp = _spectrum(cfg, op)
    k = sp.nearest_cluster(cfg["command"]["cluster_mu"])
    B = random_tangent(orbit, cfg["numerics"]["seed"])
    rep = splitting_experiment(op, sp, k, B, cfg["command"]["s_list"])
    last = rep.rows[-1]
    ok = rep.restricted.distinct() and last["deviation"] <= cfg["command"]["deviation_tol"] \
        and last["simple"]
    return rep.as_dict(), {"restricted_asymmetry": rep.restricted.raw_asymmetry}, ok


def cmd_variation_fd(cfg):
    from .perturb import apply_raw, random_tangent, retract_J, variation_operator

    orbit, _, op = _operator(cfg)
    _, sp = _spectrum(cfg, op)
    eta = sp.vectors[int(np.argmin(np.abs(sp.mus)))]
    B = random_tangent(orbit, cfg["numerics"]["seed"])
    V = variation_operator(op, B).apply(eta)
    s_list = cfg["command"]["s_list"]
    if s_list == SCHEMA["command"]["s_list"][1]:
        s_list = [1e-2, 1e-3, 1e-4, 1e-5]
    base = op.apply(eta)
    defects = []
    for s in s_list:
        d = (apply_raw(op, retract_J(B, s=s), eta) - base) / s - V
        defects.append(float(np.sqrt(np.mean(np.sum(d ** 2, axis=-1)))))
    slope = float(np.polyfit(np.log(s_list), np.log(defects), 1)[0])
    c = cfg["command"]
    ok = c["slope_min"] <= slope <= c["slope_max"]
    return {"s": list(s_list), "defects": defects, "slope": slope}, {"min_defect": min(defects)}, ok


def cmd_b_solve(cfg):
    from .perturb import M_inverse, M_matrix, random_tangent, solve_B_ode

    orbit, _, op = _operator(cfg)
    mu = cfg["command"]["mu"]
    if not math.isfinite(mu):
        _, sp = _spectrum(cfg, op)
        mu = float(sp.mus[int(np.argmin(np.abs(sp.mus)))])
    rng = np.random.default_rng(cfg["numerics"]["seed"])
    L = random_tangent(orbit, cfg["numerics"]["seed"]).B
    B0 = rng.uniform(-1.0, 1.0, size=(2, 2))
    sub = cfg["command"]["substeps"]
    s1 = solve_B_ode(op, L, B0, mu, sub)
    s2 = solve_B_ode(op, L, B0, mu, 2 * sub)
    agree = float(np.max(np.abs(s1.B - s2.B[::2])))
    minv = float(np.max(np.abs(M_matrix(orbit.action) @ M_inverse(orbit.action) - I2)))
    res = {"plug_back": s1.residual, "h_vs_h2": agree, "M_Minv": minv}
    ok = s1.residual <= 1e-8 and agree <= 1e-6 and minv <= 1e-14
    return {"mu": mu, "steps": s1.steps, "B_end": s1.B[-1]}, res, ok


def cmd_flow(cfg, out_path):
    from .flow import j_path_family, spectral_flow, synthetic_family, write_branch_csv
    from .perturb import random_tangent

    c = cfg["command"]
    if c["family"] == "synthetic":
        fam = synthetic_family(lambda s: s * I2, c["s0"], c["s1"], c["flow_n"])
    elif c["family"] == "constant":
        fam = synthetic_family(lambda s: 0.5 * I2, c["s0"], c["s1"], c["flow_n"])
    else:
        orbit, _, op = _operator(cfg)
        fam = j_path_family(op, random_tangent(orbit, cfg["numerics"]["seed"], modes=1),
                            c["s0"], c["s1"])
    win = cfg["numerics"]["window"]
    res = spectral_flow(fam, win, c["grid_n"], cfg["numerics"]["tol"])
    rev = spectral_flow(fam.reversed(), win, c["grid_n"], cfg["numerics"]["tol"])
    if c["csv"]:
        path = c["csv"]
        if not os.path.isabs(path):
            path = os.path.join(os.path.dirname(os.path.abspath(out_path)), path)
        write_branch_csv(res.branches, path)
    ok = res.conservation_ok and rev.net_flow == -res.net_flow
    return res.as_dict(), {"reversal_sum": res.net_flow + rev.net_flow}, ok


HANDLERS: Dict[str, Callable] = {
    "check-triad": cmd_check_triad, "orbits": cmd_orbits, "spectrum": cmd_spectrum,
    "compare-formulas": cmd_compare_formulas, "oracle": cmd_oracle,
    "perturb-split": cmd_perturb_split, "variation-fd": cmd_variation_fd,
    "b-solve": cmd_b_solve, "flow": cmd_flow,
}


def run(command: str, config_path: str, out_path: str, seed: Optional[int] = None,
        quiet: bool = True) -> int:
    """Run one command and write its JSON document; returns the exit code."""
    if command not in HANDLERS:
        print(f"unknown command '{command}' (expected one of {', '.join(COMMANDS)})", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(config_path)
        if seed is not None:
            cfg["numerics"]["seed"] = int(seed)
        handler = HANDLERS[command]
        if command == "flow":
            results, residuals, ok = handler(cfg, out_path)
        else:
            results, residuals, ok = handler(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RSLError, ValueError) as exc:
        results, residuals, ok = {"error": f"{type(exc).__name__}: {exc}"}, {}, False
    doc = {"meta": {"command": command, "config_echo": cfg, "version": __version__},
           "results": results, "residuals": residuals, "pass": bool(ok)}
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(doc))
    if not quiet:
        print(f"{command}: {'pass' if ok else 'FAIL'} -> {out_path}")
    return EXIT_PASS if ok else EXIT_FAIL


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="rsl", description=__doc__.splitlines()[0])
    ap.add_argument("command")
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--quiet", action="store_true")
    args = ap.parse_args(argv)
    return run(args.command, args.config, args.out, args.seed, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
