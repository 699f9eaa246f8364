"""Command-line entry point: ``lattice-gramian <command> [--config cfg.json] [flags]``.

A run is described by one JSON document; command-line flags override its
fields. Exit codes: 0 ok, 2 I/O or bad configuration, 3 index outside the
finite lattice, 4 singular output Gramian, 5 quadrature failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

import numpy as np

from .control import (ControlProblem, MinimumEnergyControl, SingularGramianError, simulate)
from .gramian import (REL_ONLY_ABS_TOL, SpectralGramian, parallel_map, build_table, compare,
                      finite_gramian_closed, finite_gramian_ode, integrand,
                      output_gramian_infinite)
from .lattice import (FiniteLatticeSpec, LatticeParams, as_index, build_system,
                      check_output_controllability, flat_index)
from .quad import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, QuadratureError, integrate
from .serialize import table_to_csv, table_to_json, write_csv, write_json

EXIT_OK = 0
EXIT_IO = 2
EXIT_INDEX = 3
EXIT_SINGULAR = 4
EXIT_QUADRATURE = 5

DEFAULT_T_SWEEP = {"min": 0.5, "max": 10.0, "count": 20, "spacing": "log"}
DEFAULT_P_SWEEP = {"min": 4.1, "max": 10.0, "count": 20, "spacing": "linear"}
DEFAULT_TAU = {"min": 0.0, "max": 10.0, "count": 201, "spacing": "linear"}


class ConfigError(ValueError):
    pass


# --- config helpers ---------------------------------------------------------

def parse_nodes(text):
    """``"0,0;1,0"`` -> ``[[0, 0], [1, 0]]``."""
    return [[int(c) for c in part.split(",")] for part in text.split(";") if part.strip()]


def parse_pairs(text):
    """``"0,0:1,0;1,1:1,1"`` -> ``[[[0, 0], [1, 0]], [[1, 1], [1, 1]]]``."""
    out = []
    for part in text.split(";"):
        if part.strip():
            i, j = part.split(":")
            out.append([[int(c) for c in i.split(",")], [int(c) for c in j.split(",")]])
    return out


def parse_extents(text):
    return [int(e) for e in text.lower().split("x")]


def sweep_values(spec):
    """A sweep is a number, a list, or ``{min, max, count, spacing}``."""
    if isinstance(spec, (int, float)):
        return np.array([float(spec)])
    if isinstance(spec, list):
        return np.array(spec, dtype=float)
    lo, hi, count = float(spec["min"]), float(spec["max"]), int(spec.get("count", 1))
    if count < 1 or lo > hi:
        raise ConfigError("sweep needs count >= 1 and min <= max")
    if count == 1:
        return np.array([lo])
    spacing = spec.get("spacing", "linear")
    if spacing == "log":
        if lo <= 0:
            raise ConfigError("log spacing needs min > 0")
        return np.geomspace(lo, hi, count)
    if spacing == "linear":
        return np.linspace(lo, hi, count)
    raise ConfigError(f"unknown spacing {spacing!r}")


def _params(cfg):
    try:
        p = cfg["params"]
        return LatticeParams(p.get("d", 2), p["p"], p["s"])
    except KeyError as exc:
        raise ConfigError(f"missing lattice parameter {exc}") from None


def _drivers(cfg, d):
    return [as_index(a, d) for a in cfg.get("drivers", [[0] * d])]


def _tols(cfg):
    tol = cfg.get("tolerances", {})
    return float(tol.get("abs", DEFAULT_ABS_TOL)), float(tol.get("rel", DEFAULT_REL_TOL))


def _finite_spec(cfg, params, with_targets=True):
    if "extents" not in cfg:
        raise ConfigError("a finite lattice needs 'extents'")
    targets = cfg.get("targets", []) if with_targets else []
    return FiniteLatticeSpec(params, cfg["extents"], _drivers(cfg, params.d), targets)


def _pairs(cfg, d, spec=None):
    pairs = cfg.get("pairs")
    if pairs is None:
        targets = [as_index(x, d) for x in cfg.get("targets", [])]
        if not targets:
            raise ConfigError("no pairs or targets given")
        return [(a, b) for k, a in enumerate(targets) for b in targets[k:]]
    if isinstance(pairs, dict):
        if spec is None:
            raise ConfigError("pair modes need 'extents'")
        mode = pairs.get("mode")
        if mode == "column":
            node = as_index(pairs.get("node", [0] * d), d)
            return [(i, node) for i in spec.nodes()]
        if mode == "diagonal":
            return [(i, i) for i in spec.nodes()]
        raise ConfigError(f"unknown pair mode {mode!r}")
    return [(as_index(i, d), as_index(j, d)) for i, j in pairs]


def _out(cfg, default):
    return Path(cfg.get("out") or default)


def _sibling(path, suffix):
    """``run.csv`` -> ``run<suffix>``."""
    return path.with_name(path.stem + suffix)


def _log10(x):
    return math.log10(x) if x > 0 else -math.inf


# --- commands ---------------------------------------------------------------

def cmd_gramian(cfg):
    """Infinite-lattice entries, one row per pair; ``.json`` output switches format."""
    params = _params(cfg)
    abs_tol, rel_tol = _tols(cfg)
    pairs = _pairs(cfg, params.d)
    table = build_table(pairs, _drivers(cfg, params.d), params, float(cfg["t"]), abs_tol, rel_tol,
                        threads=cfg.get("threads"))
    out = _out(cfg, "gramian.csv")
    if out.suffix == ".json":
        table_to_json(table, out, cfg)
    else:
        table_to_csv(table, out, cfg)
    return EXIT_OK


def cmd_gramian_finite(cfg):
    """Finite-lattice entries (closed form, or ``"method": "ode"``)."""
    params = _params(cfg)
    spec = _finite_spec(cfg, params)
    A, B, _ = build_system(spec)
    t = float(cfg["t"])
    if cfg.get("method", "closed") == "ode":
        fg = finite_gramian_ode(A, B, t, float(cfg.get("ode_tol", 1e-10)), spec=spec)
    else:
        fg = finite_gramian_closed(A, B, t, spec=spec)
    pairs = _pairs(cfg, params.d, spec)
    d = params.d
    header = [f"i_{k}" for k in range(1, d + 1)] + [f"j_{k}" for k in range(1, d + 1)] + ["value"]
    rows = [list(i) + list(j) + [fg.entry(i, j)] for i, j in pairs]
    write_csv(_out(cfg, "gramian_finite.csv"), header, rows, cfg)
    return EXIT_OK


def cmd_compare(cfg):
    """Finite vs infinite entries per pair, plus a JSON summary next to the CSV."""
    params = _params(cfg)
    spec = _finite_spec(cfg, params, with_targets=False)
    A, B, _ = build_system(spec)
    t = float(cfg["t"])
    fg = finite_gramian_closed(A, B, t, spec=spec)
    pairs = _pairs(cfg, params.d, spec)
    for i, j in pairs:
        if not (spec.contains(i) and spec.contains(j)):
            raise IndexError(f"pair {(i, j)} lies outside extents {spec.extents}")
    _, rel_tol = _tols(cfg)
    abs_tol = float(cfg.get("tolerances", {}).get("abs", REL_ONLY_ABS_TOL))
    rep = compare(fg, params, spec.drivers, t, pairs, against=fg if cfg.get("self_compare") else None,
                  abs_tol=abs_tol, rel_tol=rel_tol, threads=cfg.get("threads"))
    d = params.d
    header = ([f"i_{k}" for k in range(1, d + 1)] + [f"j_{k}" for k in range(1, d + 1)]
              + ["finite", "infinite", "abs_error", "rel_error", "log10_abs_error", "log10_rel_error"])
    rows = []
    for key in rep.absolute_error:
        a, r = rep.absolute_error[key], rep.relative_error[key]
        rows.append(list(key[0]) + list(key[1]) + [rep.reference[key], rep.approximation[key], a, r,
                                                   _log10(a), _log10(r) if not math.isnan(r) else r])
    out = _out(cfg, "compare.csv")
    write_csv(out, header, rows, cfg)
    rel = {k: v for k, v in rep.relative_error.items() if not math.isnan(v)}
    summary = {
        "config": cfg,
        "pairs": len(rows),
        "max_abs": rep.max_abs,
        "max_abs_pair": list(map(list, max(rep.absolute_error, key=rep.absolute_error.get))),
        "max_rel": rep.max_rel,
        "max_rel_pair": list(map(list, max(rel, key=rel.get))) if rel else None,
        "min_rel": min(rel.values()) if rel else None,
        "min_rel_pair": list(map(list, min(rel, key=rel.get))) if rel else None,
    }
    write_json(_sibling(out, ".summary.json"), summary)
    return EXIT_OK


def cmd_energy_sweep(cfg):
    """Minimum output-Gramian eigenvalue, finite vs infinite, over a (t, p) grid."""
    base = _params(cfg)
    ts = sweep_values(cfg.get("t_sweep", cfg.get("t", DEFAULT_T_SWEEP)))
    ps = sweep_values(cfg.get("p_sweep", DEFAULT_P_SWEEP))
    spec = _finite_spec(cfg, base)
    if not spec.targets:
        raise ConfigError("energy-sweep needs targets")
    A, B, C = build_system(spec)
    abs_tol, rel_tol = _tols(cfg)
    # p only shifts A by a multiple of I: one eigendecomposition and one rank test serve the grid
    sg = SpectralGramian(A, B)
    controllable = check_output_controllability(A, B, C)

    def point(tp):
        t, p = tp
        params = LatticeParams(base.d, p, base.s)
        row = [t, p, math.nan, math.nan, math.nan, math.nan, 1 if controllable else 0]
        if not controllable:
            return row
        mu_f = float(np.linalg.eigvalsh(sg.shifted(base.p - p).output(C, t))[0])
        Wi = output_gramian_infinite(spec.targets, spec.drivers, params, t, abs_tol, rel_tol)
        mu_i = float(np.linalg.eigvalsh(Wi)[0])
        err = abs(mu_f - mu_i)
        row[2:6] = [mu_f, mu_i, err, err / abs(mu_f) if mu_f != 0 else math.nan]
        if not (mu_f > 0 and mu_i > 0):
            row[6] = 0
        return row

    grid = [(float(t), float(p)) for t in ts for p in ps]
    rows = parallel_map(point, grid, cfg.get("threads"))
    header = ["t", "p", "mu_min_finite", "mu_min_infinite", "abs_error", "rel_error", "controllable"]
    write_csv(_out(cfg, "energy_sweep.csv"), header, rows, cfg)
    return EXIT_OK


def _initial_state(cfg, spec):
    x0 = cfg.get("x0")
    state = np.zeros(spec.n)
    if x0 is None:
        return state
    if isinstance(x0, dict):
        for node, value in zip(x0["nodes"], x0["values"]):
            state[flat_index(as_index(node, spec.params.d), spec)] = float(value)
        return state
    state[:] = np.asarray(x0, dtype=float)
    return state


def cmd_synthesize(cfg):
    """Synthesise the minimum-energy input, simulate it, and report attainment."""
    params = _params(cfg)
    spec = _finite_spec(cfg, params)
    if not spec.targets:
        raise ConfigError("synthesize needs targets")
    A, B, C = build_system(spec)
    t_f = float(cfg["t"])
    y_f = np.asarray(cfg.get("y_f", [1.0] * len(spec.targets)), dtype=float)
    prob = ControlProblem(A, B, C, _initial_state(cfg, spec), y_f, t_f)
    which = cfg.get("gramian", "finite")
    if which == "infinite":
        abs_tol, rel_tol = _tols(cfg)
        W = output_gramian_infinite(spec.targets, spec.drivers, params, t_f, abs_tol, rel_tol)
    else:
        W = finite_gramian_closed(A, B, t_f, spec=spec)
    ctl = MinimumEnergyControl(prob, W)
    steps = int(cfg.get("steps", 4000))
    sim = simulate(prob, ctl, steps)
    every = max(1, int(cfg.get("sample_every", math.ceil(steps / 200))))
    idx = sorted(set(range(0, steps + 1, every)) | {steps})
    rows = []
    m, n, q = B.shape[1], A.shape[0], C.shape[0]
    for k in idx:
        t = sim.times[k]
        x = sim.trajectory[k]
        rows.append([t] + list(ctl(min(t, t_f))) + list(x) + list(C @ x))
    header = (["t"] + [f"u_{k}" for k in range(1, m + 1)] + [f"x_{k}" for k in range(1, n + 1)]
              + [f"y_{k}" for k in range(1, q + 1)])
    out = _out(cfg, "synthesize.csv")
    write_csv(out, header, rows, cfg)
    predicted = ctl.predicted_energy
    report = {
        "config": cfg,
        "gramian": which,
        "energy_predicted": predicted,
        "energy_realized": sim.realized_energy,
        "relative_energy_gap": abs(sim.realized_energy - predicted) / predicted if predicted else 0.0,
        "y_final": sim.y_final,
        "attainment_error": float(np.max(np.abs(sim.y_final - y_f))),
    }
    write_json(_sibling(out, ".report.json"), report)
    return EXIT_OK


def _default_keys(d):
    """Origin, one step along axis 1, one diagonal step, two steps along axis 1."""
    unit = [1] + [0] * (d - 1)
    keys = [[0] * d, unit]
    if d > 1:
        keys.append([1, 1] + [0] * (d - 2))
    keys.append([2] + [0] * (d - 1))
    return keys


def cmd_trace_integrand(cfg):
    """Integrand traces and their running integrals for diagonal keys."""
    params = _params(cfg)
    d = params.d
    keys = [as_index(k, d) for k in cfg.get("keys", _default_keys(d))]
    drivers = _drivers(cfg, d)
    taus = sweep_values(cfg.get("tau", DEFAULT_TAU))
    if np.any(taus < 0) or np.any(np.diff(taus) < 0):
        raise ConfigError("tau grid must be nonnegative and increasing")
    _, rel_tol = _tols(cfg)
    cols = [integrand(k, k, drivers, params, taus) for k in keys]

    def cumulative(k):
        f = lambda tau: integrand(k, k, drivers, params, tau)  # noqa: E731
        pieces = [0.0] + [integrate(f, a, b, REL_ONLY_ABS_TOL, rel_tol).value
                          for a, b in zip(taus[:-1], taus[1:])]
        return np.cumsum(pieces) + (integrate(f, 0.0, taus[0], REL_ONLY_ABS_TOL, rel_tol).value
                                    if taus[0] > 0 else 0.0)

    cums = parallel_map(cumulative, keys, cfg.get("threads"))
    names = ["tau"] + ["W_" + "_".join(str(c) for c in k + k) for k in keys]
    out = _out(cfg, "integrand.csv")
    write_csv(out, names, ([t] + [c[r] for c in cols] for r, t in enumerate(taus)), cfg)
    write_csv(_sibling(out, "_cumulative.csv"), names,
              ([t] + [c[r] for c in cums] for r, t in enumerate(taus)), cfg)
    return EXIT_OK


COMMANDS = {
    "gramian": cmd_gramian,
    "gramian-finite": cmd_gramian_finite,
    "compare": cmd_compare,
    "energy-sweep": cmd_energy_sweep,
    "synthesize": cmd_synthesize,
    "trace-integrand": cmd_trace_integrand,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", help="output file")
    common.add_argument("--d", type=int)
    common.add_argument("--p", type=float)
    common.add_argument("--s", type=float)
    common.add_argument("--t", type=float)
    common.add_argument("--drivers", help='e.g. "0,0;2,1"')
    common.add_argument("--targets", help='e.g. "0,0;1,0;1,1"')
    common.add_argument("--pairs", help='e.g. "0,0:0,0;1,0:0,0"')
    common.add_argument("--extents", help='e.g. "21x21"')
    common.add_argument("--tol-abs", type=float)
    common.add_argument("--tol-rel", type=float)
    common.add_argument("--threads", type=int)
    parser = argparse.ArgumentParser(prog="lattice-gramian", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__.splitlines()[0])
    return parser


def resolve_config(args):
    """Config file contents with command-line overrides applied."""
    cfg = {}
    if args.config is not None:
        cfg = json.loads(Path(args.config).read_text())
    cfg = copy.deepcopy(cfg)
    cfg["command"] = args.command
    params = cfg.setdefault("params", {})
    for key in ("d", "p", "s"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    if args.t is not None:
        cfg["t"] = args.t
    if args.drivers is not None:
        cfg["drivers"] = parse_nodes(args.drivers)
    if args.targets is not None:
        cfg["targets"] = parse_nodes(args.targets)
    if args.pairs is not None:
        cfg["pairs"] = parse_pairs(args.pairs)
    if args.extents is not None:
        cfg["extents"] = parse_extents(args.extents)
    if args.tol_abs is not None:
        cfg.setdefault("tolerances", {})["abs"] = args.tol_abs
    if args.tol_rel is not None:
        cfg.setdefault("tolerances", {})["rel"] = args.tol_rel
    if args.threads is not None:
        cfg["threads"] = args.threads
    if args.out is not None:
        cfg["out"] = args.out
    return cfg


def run(cfg):
    """Execute a resolved config; returns the process exit code."""
    try:
        return COMMANDS[cfg["command"]](cfg)
    except IndexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INDEX
    except SingularGramianError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
