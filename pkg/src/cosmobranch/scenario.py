"""Scenario configs and the batch runner behind the ``sim`` command.

Config files are TOML. Top-level keys::

    name        string, default "scenario"
    command     one of COMMANDS; may instead be given on the command line
    seed        integer in [0, 2**64), default 0
    output_dir  path, default $SIM_OUTPUT_DIR/<name> or ./sim-output/<name>
    state       list of [re, im] pairs
    K           integer, optional; must equal the number of amplitudes
    N           integer >= 1
    N_list      strictly increasing list of integers >= 1
    outcome     1-based outcome for ``frequency``, default 1
    trials      integer >= 100 for ``frequency``, default 10000
    mode        "correlated" | "independent" for ``collapse-sim``, default "correlated"
    cutoff_J    integer >= 10 for ``products``

Tables::

    [cosmology]   h0, omega_m, omega_r, omega_lambda, light_speed (default 1),
                  a_max (default 1000), t_i, t_f, a_i,
                  times (list) or n_times (default 50, log-spaced over [t_i, t_f])
    [bound]       entropy_density, planck_length
    [[sequences]] kind, value (for kind = "constant")
    [tolerances]  rtol, atol, knot_tol, residual_tol, quad_rtol,
                  enumeration_cap, table_cap

Unknown keys anywhere are errors.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.stats import chisquare

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import _kernels, branches, cosmology, frequency, io
from .errors import ConfigInvalid, CosmobranchError, ValidationError
from .quantum import born_probabilities, make_state, state_literal
from .rng import make_stream

COMMANDS = ("horizon", "bound", "branches", "decay", "collapse-sim", "frequency", "products")

_REQUIRED = {
    "horizon": ("cosmology",),
    "bound": ("cosmology", "bound"),
    "branches": ("state", "N"),
    "decay": ("state", "N_list"),
    "collapse-sim": ("state", "N"),
    "frequency": ("state", "N_list"),
    "products": ("sequences", "cutoff_J"),
}

_TOP_KEYS = {
    "name", "command", "seed", "output_dir", "state", "K", "N", "N_list", "outcome",
    "trials", "mode", "cutoff_J", "cosmology", "bound", "sequences", "tolerances",
}
_COSMO_KEYS = {
    "h0", "omega_m", "omega_r", "omega_lambda", "light_speed", "a_max",
    "t_i", "t_f", "a_i", "times", "n_times",
}
_COSMO_REQUIRED = ("h0", "omega_m", "omega_r", "omega_lambda", "t_i", "t_f", "a_i")
_BOUND_KEYS = {"entropy_density", "planck_length"}
_SEQ_KEYS = {"kind", "value"}
_TOL_KEYS = {"rtol", "atol", "knot_tol", "residual_tol", "quad_rtol", "enumeration_cap", "table_cap"}

OUTPUT_ENV = "SIM_OUTPUT_DIR"


@dataclass(frozen=True)
class Scenario:
    name: str
    command: str
    seed: int
    output_dir: Path
    cosmology: dict | None = None
    state: object = None
    N: int | None = None
    N_list: tuple | None = None
    outcome: int = 1
    trials: int = 10_000
    mode: str = "correlated"
    cutoff_J: int | None = None
    bound: dict | None = None
    sequences: tuple = ()
    tolerances: dict = field(default_factory=dict)

    @property
    def K(self):
        return None if self.state is None else self.state.K


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _default_output_dir(name):
    return Path(os.environ.get(OUTPUT_ENV, "sim-output")) / name


def validate_config(raw_text, command=None, seed=None, output_dir=None):
    """Parse and check a TOML scenario.

    Returns a :class:`Scenario`, or the list of every violation found, each
    prefixed by the offending field path. ``command``, ``seed`` and
    ``output_dir`` override the file's values when given.
    """
    try:
        raw = tomllib.loads(raw_text)
    except tomllib.TOMLDecodeError as exc:
        return [f"<toml>: {exc}"]
    errors = []

    def err(path, msg):
        errors.append(f"{path}: {msg}")

    for key in sorted(set(raw) - _TOP_KEYS):
        err(key, "unknown key")

    name = raw.get("name", "scenario")
    if not isinstance(name, str) or not name:
        err("name", "must be a nonempty string")
        name = "scenario"

    cfg_command = raw.get("command")
    if command is not None and cfg_command is not None and command != cfg_command:
        err("command", f"config says {cfg_command!r} but {command!r} was requested")
    command = command or cfg_command
    if command is None:
        err("command", "missing")
    elif command not in COMMANDS:
        err("command", f"must be one of {', '.join(COMMANDS)}")
        command = None

    if seed is None:
        seed = raw.get("seed", 0)
    if not _is_int(seed) or not 0 <= seed < 2**64:
        err("seed", "must be an integer in [0, 2**64)")
        seed = 0

    if output_dir is None:
        output_dir = raw.get("output_dir")
    if output_dir is None:
        output_dir = _default_output_dir(name)
    elif not isinstance(output_dir, (str, Path)):
        err("output_dir", "must be a path string")
        output_dir = _default_output_dir(name)

    if command is not None:
        for group in _REQUIRED[command]:
            if group not in raw:
                err(group, f"required for command {command!r}")

    state = None
    if "state" in raw:
        lit = raw["state"]
        if not isinstance(lit, list) or not all(
            isinstance(x, list) and len(x) == 2 and all(_is_num(v) for v in x) for x in lit
        ):
            err("state", "must be a list of [re, im] number pairs")
        else:
            try:
                state = make_state(lit)
            except ValidationError as exc:
                err("state", f"{type(exc).__name__}: {exc}")
    if "K" in raw:
        if not _is_int(raw["K"]) or raw["K"] < 2:
            err("K", "must be an integer >= 2")
        elif state is not None and raw["K"] != state.K:
            err("K", f"is {raw['K']} but state has {state.K} amplitudes")

    def positive_int(key, minimum=1):
        v = raw.get(key)
        if v is not None and (not _is_int(v) or v < minimum):
            err(key, f"must be an integer >= {minimum}")
            return None
        return v

    N = positive_int("N")
    cutoff_J = positive_int("cutoff_J", branches.MIN_CUTOFF)
    trials = positive_int("trials", 100)
    outcome = positive_int("outcome")
    if outcome is not None and state is not None and outcome > state.K:
        err("outcome", f"must be <= K = {state.K}")

    N_list = raw.get("N_list")
    if N_list is not None:
        if (
            not isinstance(N_list, list) or not N_list
            or not all(_is_int(n) and n >= 1 for n in N_list)
            or any(b <= a for a, b in zip(N_list, N_list[1:]))
        ):
            err("N_list", "must be a nonempty, strictly increasing list of integers >= 1")
            N_list = None
        else:
            N_list = tuple(N_list)

    mode = raw.get("mode", "correlated")
    if mode not in ("correlated", "independent"):
        err("mode", "must be 'correlated' or 'independent'")

    cosmo = None
    if "cosmology" in raw:
        cosmo = _check_cosmology(raw["cosmology"], err)

    bound = None
    if "bound" in raw:
        b = raw["bound"]
        if not isinstance(b, dict):
            err("bound", "must be a table")
        else:
            for key in sorted(set(b) - _BOUND_KEYS):
                err(f"bound.{key}", "unknown key")
            for key in sorted(_BOUND_KEYS):
                if key not in b:
                    err(f"bound.{key}", "missing")
                elif not _is_num(b[key]):
                    err(f"bound.{key}", "must be a number")
            if "entropy_density" in b and _is_num(b["entropy_density"]) and b["entropy_density"] < 0:
                err("bound.entropy_density", "must be >= 0")
            if "planck_length" in b and _is_num(b["planck_length"]) and b["planck_length"] <= 0:
                err("bound.planck_length", "must be > 0")
            bound = dict(b)

    sequences = ()
    if "sequences" in raw:
        seqs = raw["sequences"]
        if not isinstance(seqs, list) or not seqs or not all(isinstance(s, dict) for s in seqs):
            err("sequences", "must be a nonempty array of tables")
        else:
            for i, s in enumerate(seqs):
                path = f"sequences[{i}]"
                for key in sorted(set(s) - _SEQ_KEYS):
                    err(f"{path}.{key}", "unknown key")
                kind = s.get("kind")
                if kind not in branches.SEQUENCE_KINDS:
                    err(f"{path}.kind", f"must be one of {', '.join(branches.SEQUENCE_KINDS)}")
                elif kind == "constant":
                    v = s.get("value")
                    if not _is_num(v) or not 0 < v <= 1:
                        err(f"{path}.value", "constant factor must be a number in (0, 1]")
                elif kind == "uniform_symmetric" and "state" not in raw:
                    err("state", "required by uniform_symmetric sequence")
            sequences = tuple(dict(s) for s in seqs)

    tolerances = {}
    if "tolerances" in raw:
        t = raw["tolerances"]
        if not isinstance(t, dict):
            err("tolerances", "must be a table")
        else:
            for key in sorted(set(t) - _TOL_KEYS):
                err(f"tolerances.{key}", "unknown key")
            for key in sorted(set(t) & _TOL_KEYS):
                if not _is_num(t[key]) or t[key] <= 0:
                    err(f"tolerances.{key}", "must be a positive number")
            tolerances = dict(t)

    if errors:
        return errors
    return Scenario(
        name=name,
        command=command,
        seed=int(seed),
        output_dir=Path(output_dir),
        cosmology=cosmo,
        state=state,
        N=N,
        N_list=N_list,
        outcome=outcome or 1,
        trials=trials or 10_000,
        mode=mode,
        cutoff_J=cutoff_J,
        bound=bound,
        sequences=sequences,
        tolerances=tolerances,
    )


def _check_cosmology(c, err):
    if not isinstance(c, dict):
        err("cosmology", "must be a table")
        return None
    ok = True
    for key in sorted(set(c) - _COSMO_KEYS):
        err(f"cosmology.{key}", "unknown key")
        ok = False
    for key in _COSMO_REQUIRED:
        if key not in c:
            err(f"cosmology.{key}", "missing")
            ok = False
    for key in sorted(set(c) & (_COSMO_KEYS - {"times", "n_times"})):
        if not _is_num(c[key]):
            err(f"cosmology.{key}", "must be a number")
            ok = False
    if "times" in c and "n_times" in c:
        err("cosmology.times", "give either times or n_times, not both")
        ok = False
    if "times" in c and (not isinstance(c["times"], list) or not all(_is_num(t) for t in c["times"])):
        err("cosmology.times", "must be a list of numbers")
        ok = False
    if "n_times" in c and (not _is_int(c["n_times"]) or c["n_times"] < 2):
        err("cosmology.n_times", "must be an integer >= 2")
        ok = False
    if not ok:
        return None
    try:
        cosmology.build_model(
            c["h0"], c["omega_m"], c["omega_r"], c["omega_lambda"],
            c.get("light_speed", 1.0), c.get("a_max", 1e3),
        )
    except ValidationError as exc:
        err("cosmology", f"{type(exc).__name__}: {exc}")
        return None
    if not c["t_i"] < c["t_f"]:
        err("cosmology.t_f", "must exceed t_i")
        return None
    if not c["a_i"] > 0:
        err("cosmology.a_i", "must be > 0")
        return None
    return dict(c)


def load_scenario(path, **overrides):
    """Read and validate a config file; raises :class:`ConfigInvalid`."""
    text = Path(path).read_text(encoding="utf-8")
    result = validate_config(text, **overrides)
    if isinstance(result, list):
        raise ConfigInvalid(result)
    return result


# --- runner ----------------------------------------------------------------


@dataclass(frozen=True)
class ReportBundle:
    output_dir: Path
    files: tuple
    manifest: Path


def _grid(scenario):
    t = scenario.tolerances
    base = cosmology.GridControl()
    return replace(
        base,
        **{k: float(t[k]) for k in ("rtol", "atol", "knot_tol", "residual_tol", "quad_rtol") if k in t},
    )


def _curve(scenario):
    c = scenario.cosmology
    model = cosmology.build_model(
        c["h0"], c["omega_m"], c["omega_r"], c["omega_lambda"],
        c.get("light_speed", 1.0), c.get("a_max", 1e3),
    )
    curve = cosmology.solve_scale_factor(model, c["t_i"], c["t_f"], c["a_i"], _grid(scenario))
    if "times" in c:
        times = np.asarray(c["times"], dtype=float)
    else:
        times = np.geomspace(c["t_i"], c["t_f"], c.get("n_times", 50))
        times[0], times[-1] = c["t_i"], c["t_f"]
    return model, curve, times


def _run_horizon(sc):
    model, curve, times = _curve(sc)
    R, chi, err = cosmology.particle_horizons(curve, times)
    return {
        "horizon.csv": io.csv_text(["t", "R_P", "chi", "err_est"], zip(times, R, chi, err)),
        "curve.csv": io.csv_text(["t", "a", "H"], cosmology.export_curve_rows(curve)),
    }


def _run_bound(sc):
    model, curve, times = _curve(sc)
    R, chi, _ = cosmology.particle_horizons(curve, times)
    volume = np.atleast_1d(cosmology.comoving_volume(model, chi))
    ratio = np.atleast_1d(cosmology.holographic_ratio(
        model, curve, times, sc.bound["entropy_density"], sc.bound["planck_length"],
    ))
    rows = [(t, r, x, v, q, bool(q <= 1.0)) for t, r, x, v, q in zip(times, R, chi, volume, ratio)]
    return {
        "bound.csv": io.csv_text(["t", "R_P", "chi", "volume", "ratio", "satisfied"], rows),
        "curve.csv": io.csv_text(["t", "a", "H"], cosmology.export_curve_rows(curve)),
    }


def _caps(sc):
    t = sc.tolerances
    return int(t.get("enumeration_cap", branches.ENUMERATION_CAP)), int(t.get("table_cap", branches.TABLE_CAP))


def _run_branches(sc):
    enum_cap, table_cap = _caps(sc)
    ens = branches.compress_branches(sc.state, sc.N, cap=table_cap)
    header = [f"c{k}" for k in range(1, sc.K + 1)] + ["log_multiplicity", "log_prob"]
    rows = [(*c, lm, lp) for c, lm, lp in ens.rows()]
    brute = None
    if sc.K**sc.N <= enum_cap:
        brute = branches.branch_probability_sum(sc.state, sc.N, method="brute", cap=enum_cap)
    best = branches.max_branch_probability(sc.state, sc.N)
    summary = {
        "K": sc.K,
        "N": sc.N,
        "state": state_literal(sc.state),
        "table_size": len(ens),
        "total_probability_compressed": ens.total_probability(),
        "total_probability_brute_force": brute,
        "log10_max_branch_prob": best.log10_probability,
        "backend": _kernels.BACKEND,
    }
    return {"ensemble.csv": io.csv_text(header, rows), "summary.json": io.json_text(summary)}


def _run_decay(sc):
    rows = branches.collapse_decay_curve(sc.state, sc.N_list)
    slope = math.log10(float(np.max(born_probabilities(sc.state).probabilities)))
    return {"decay.csv": io.csv_text(["N", "log10_max_branch_prob", "slope"], [(n, v, slope) for n, v in rows])}


def _run_collapse(sc):
    rng = make_stream(sc.seed)
    outcomes = branches.simulate_finite_collapse(sc.state, sc.N, rng, sc.mode)
    counts = np.bincount(outcomes - 1, minlength=sc.K)
    summary = {
        "mode": sc.mode,
        "N": sc.N,
        "seed": sc.seed,
        "counts": counts.tolist(),
        "all_equal": bool(np.all(outcomes == outcomes[0])),
    }
    if sc.mode == "independent":
        p = born_probabilities(sc.state).probabilities
        support = p > 0
        stat, pval = chisquare(counts[support], p[support] * sc.N)
        summary["chi2_statistic"] = float(stat)
        summary["chi2_p_value"] = float(pval)
    return {
        "outcomes.csv": io.csv_text(["observer", "outcome"], zip(range(1, sc.N + 1), outcomes.tolist())),
        "summary.json": io.json_text(summary),
    }


def _run_frequency(sc):
    rows = frequency.born_convergence_table(sc.state, sc.N_list, sc.trials, make_stream(sc.seed), k=sc.outcome)
    return {
        "frequency.csv": io.csv_text(
            ["N", "analytic_var", "empirical_var", "trials", "seed"],
            [(n, a, e, sc.trials, sc.seed) for n, a, e in rows],
        )
    }


def _run_products(sc):
    records = []
    columns = []
    for spec in sc.sequences:
        seq = branches.sequence_from_spec(spec, sc.state)
        analysis = branches.infinite_product_classify(seq, sc.cutoff_J)
        rec = analysis.to_record()
        rec["sequence"] = seq.name
        records.append(rec)
        columns.append(analysis.partial_log_products)
    header = ["j"] + [f"log_partial_product_{i}" for i in range(len(columns))]
    rows = zip(range(1, sc.cutoff_J + 1), *columns)
    return {"products.json": io.json_text(records), "partial_products.csv": io.csv_text(header, rows)}


_RUNNERS = {
    "horizon": _run_horizon,
    "bound": _run_bound,
    "branches": _run_branches,
    "decay": _run_decay,
    "collapse-sim": _run_collapse,
    "frequency": _run_frequency,
    "products": _run_products,
}


def run_scenario(scenario):
    """Run one scenario and write its outputs plus ``manifest.json``.

    All results are computed before anything is written, so a numeric failure
    leaves no partial output behind.
    """
    out = Path(scenario.output_dir)
    contents = _RUNNERS[scenario.command](scenario)
    files = [io.atomic_write(out / fname, text) for fname, text in sorted(contents.items())]
    meta = {"name": scenario.name, "command": scenario.command, "seed": scenario.seed}
    manifest = io.write_manifest(out, meta, files)
    return ReportBundle(out, tuple(files), manifest)


__all__ = [
    "COMMANDS", "ConfigInvalid", "CosmobranchError", "ReportBundle", "Scenario",
    "load_scenario", "run_scenario", "validate_config",
]
