"""Batch front end: scenario files in, CSV files out.

A scenario is an INI-style file::

    # comments start with '#'
    [grid]
    length = 1.0          # optional, default 1
    n = 256

    [params]
    m = 1
    s_plus = 1
    s_minus = 1
    mu0_plus = 1
    tau_half = inf        # 'inf' makes the upper fluid Newtonian (p > 1)
    p = 2
    tau = 1               # optional

    [initial]
    f = 1.0
    g = 1.0
    f_modes = 1:1e-4, 3:2e-5   # optional: mode:amplitude of cos(mode pi x / L)
    g_modes =                  # optional

    [stepping]
    t_end = 0.5           # required unless mode = stability
    scheme = implicit_newton
    dt0 = 1e-4
    dt_min = 1e-14
    dt_max = 1e-2
    newton_tol = 1e-10
    newton_max_iter = 25
    rupture_floor =       # optional; default 1e-8 * min(f0, g0)
    blowup_factor = 1e8

    [output]
    directory = out
    mode = simulate       # simulate | stability | sweep
    every = 1             # diagnostics cadence, in accepted steps
    profile_every = 0     # write a profile every k diagnostics rows; 0 = first and last only
    n_modes = 5

    [sweep]               # only for mode = sweep
    parameter = params.p
    values = 1.5, 2, 3
    workers = 1

Exit codes: 0 ok, 1 configuration error, 2 rupture, 3 blow-up, 4 step failure.
"""

import argparse
import configparser
import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import List, Optional, Tuple

import numpy as np

from .diagnostics import fit_decay_rate
from .grid import Grid, State, d2, integrate
from .model import pressures
from .rheology import FluidParams
from .stability import stability_report
from .stepper import Status, StepConfig, advance

__all__ = ["ScenarioError", "Scenario", "parse_scenario", "run", "main", "EXIT_CODES"]

log = logging.getLogger(__name__)

EXIT_CODES = {
    Status.OK: 0,
    Status.RUPTURE: 2,
    Status.BLOWUP: 3,
    Status.STEP_FAILURE: 4,
}
CONFIG_ERROR = 1
MODES = ("simulate", "stability", "sweep")

DIAGNOSTIC_COLUMNS = ["t", "mass_f", "mass_g", "energy", "dissipation", "min_f", "min_g", "perturbation_norm", "dt"]
PROFILE_COLUMNS = ["x", "f", "g", "p_minus", "p_plus"]
STABILITY_COLUMNS = [
    "mode", "rate_minus", "rate_plus", "lambda_minus", "lambda_plus",
    "kappa_pred", "epsilon_ellipticity", "f_star", "g_star",
]
SUMMARY_COLUMNS = [
    "index", "parameter", "value", "status", "exit_code", "t_final",
    "energy_initial", "energy_final", "max_mass_drift", "kappa_pred", "fitted_rate",
]

_PARAM_KEYS = [f.name for f in fields(FluidParams)]
_STEP_KEYS = ["scheme", "dt0", "dt_min", "dt_max", "newton_tol", "newton_max_iter", "rupture_floor", "blowup_factor"]
_ALLOWED = {
    "grid": {"length", "n"},
    "params": set(_PARAM_KEYS),
    "initial": {"f", "g", "f_modes", "g_modes"},
    "stepping": set(_STEP_KEYS) | {"t_end"},
    "output": {"directory", "mode", "every", "profile_every", "n_modes"},
    "sweep": {"parameter", "values", "workers"},
}
_REQUIRED = {
    "grid": {"n"},
    "params": set(_PARAM_KEYS) - {"tau"},
    "initial": {"f", "g"},
    "output": {"directory"},
}


class ScenarioError(ValueError):
    """Malformed or invalid scenario file."""


@dataclass
class Scenario:
    grid: Grid
    params: FluidParams
    f0: float
    g0: float
    f_modes: List[Tuple[int, float]] = field(default_factory=list)
    g_modes: List[Tuple[int, float]] = field(default_factory=list)
    stepping: StepConfig = field(default_factory=StepConfig)
    t_end: Optional[float] = None
    directory: str = "out"
    mode: str = "simulate"
    profile_every: int = 0
    n_modes: int = 5
    sweep_parameter: Optional[str] = None
    sweep_values: List[float] = field(default_factory=list)
    workers: int = 1

    def initial_state(self):
        x = self.grid.x
        f = np.full(self.grid.n, float(self.f0))
        g = np.full(self.grid.n, float(self.g0))
        for mode, amp in self.f_modes:
            f += amp * np.cos(mode * np.pi * x / self.grid.length)
        for mode, amp in self.g_modes:
            g += amp * np.cos(mode * np.pi * x / self.grid.length)
        return State(0.0, f, g, self.grid)

    def validate(self):
        if self.mode not in MODES:
            raise ScenarioError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.mode != "stability" and not (self.t_end is not None and self.t_end > 0):
            raise ScenarioError("stepping.t_end must be given and positive")
        if self.profile_every < 0 or self.n_modes < 1 or self.workers < 1:
            raise ScenarioError("profile_every must be >= 0, n_modes and workers >= 1")
        state = self.initial_state()
        if not (np.min(state.f) > 0 and np.min(state.g) > 0):
            raise ScenarioError(
                "initial heights must be positive at every node "
                f"(min f = {np.min(state.f):.6g}, min g = {np.min(state.g):.6g})"
            )
        if self.mode == "sweep":
            if not self.sweep_parameter or not self.sweep_values:
                raise ScenarioError("sweep mode needs sweep.parameter and sweep.values")
            for value in self.sweep_values:
                replace(with_value(self, self.sweep_parameter, value), mode="simulate").validate()
        return self


def _line_of(text, section, key):
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current == section and "=" in line and line.split("=", 1)[0].strip() == key:
            return number
    return None


def _modes(text):
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        mode, sep, amp = item.partition(":")
        if not sep:
            raise ValueError(f"expected mode:amplitude, got {item!r}")
        n = int(mode)
        if n < 0:
            raise ValueError("mode numbers must be >= 0")
        out.append((n, float(amp)))
    return out


def parse_scenario(path):
    """Read and validate a scenario file.

    Raises
    ------
    ScenarioError
        On syntax errors (with the line number), unknown or missing keys,
        unparsable values, or violated invariants.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    return parse_scenario_text(text, source=str(path))


def parse_scenario_text(text, source="<string>"):
    cp = configparser.ConfigParser(
        inline_comment_prefixes=("#",), comment_prefixes=("#",), interpolation=None, default_section="__none__"
    )
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.ParsingError as exc:
        lines = ", ".join(str(lineno) for lineno, _ in exc.errors)
        raise ScenarioError(f"{source}: syntax error on line {lines}") from exc
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = f" line {lineno}:" if lineno else ""
        raise ScenarioError(f"{source}:{where} {exc.message if hasattr(exc, 'message') else exc}") from exc

    for section in cp.sections():
        if section not in _ALLOWED:
            raise ScenarioError(f"{source}: line {_line_of(text, section, '') or '?'}: unknown section [{section}]")
        for key in cp[section]:
            if key not in _ALLOWED[section]:
                raise ScenarioError(f"{source}: line {_line_of(text, section, key)}: unknown key {section}.{key}")
    for section, keys in _REQUIRED.items():
        for key in sorted(keys):
            if not cp.has_section(section) or key not in cp[section] or cp[section][key].strip() == "":
                raise ScenarioError(f"{source}: missing required key {section}.{key}")

    def get(section, key, convert, default=None):
        if not cp.has_section(section) or key not in cp[section]:
            return default
        raw = cp[section][key].strip()
        if raw == "":
            return default
        try:
            return convert(raw)
        except ValueError as exc:
            raise ScenarioError(
                f"{source}: line {_line_of(text, section, key)}: bad value for {section}.{key} ({raw!r}): {exc}"
            ) from exc

    def integer(raw):
        value = float(raw)
        if not value.is_integer():
            raise ValueError("expected an integer")
        return int(value)

    try:
        grid = Grid(get("grid", "length", float, 1.0), get("grid", "n", integer))
        params = FluidParams(**{k: get("params", k, float) for k in _PARAM_KEYS if get("params", k, float) is not None})
        step_kwargs = {}
        for key in _STEP_KEYS:
            convert = {"scheme": str, "newton_max_iter": integer}.get(key, float)
            value = get("stepping", key, convert)
            if value is not None:
                step_kwargs[key] = value
        stepping = StepConfig(**step_kwargs)
        scenario = Scenario(
            grid=grid,
            params=params,
            f0=get("initial", "f", float),
            g0=get("initial", "g", float),
            f_modes=get("initial", "f_modes", _modes, []),
            g_modes=get("initial", "g_modes", _modes, []),
            stepping=replace(stepping, observe_every=get("output", "every", integer, 1)),
            t_end=get("stepping", "t_end", float),
            directory=get("output", "directory", str),
            mode=get("output", "mode", str, "simulate"),
            profile_every=get("output", "profile_every", integer, 0),
            n_modes=get("output", "n_modes", integer, 5),
            sweep_parameter=get("sweep", "parameter", str),
            sweep_values=get("sweep", "values", lambda s: [float(v) for v in s.split(",") if v.strip()], []),
            workers=get("sweep", "workers", integer, 1),
        )
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{source}: {exc}") from exc
    try:
        return scenario.validate()
    except ValueError as exc:
        raise ScenarioError(f"{source}: {exc}") from exc


def with_value(scenario, parameter, value):
    """Copy of `scenario` with one numeric setting replaced (``section.key``)."""
    section, _, key = parameter.partition(".")
    if section == "params" and key in _PARAM_KEYS:
        return replace(scenario, params=replace(scenario.params, **{key: value}))
    if section == "stepping" and key in _STEP_KEYS and key != "scheme":
        return replace(scenario, stepping=replace(scenario.stepping, **{key: value}))
    if section == "stepping" and key == "t_end":
        return replace(scenario, t_end=value)
    if section == "initial" and key in ("f", "g"):
        return replace(scenario, **{key + "0": value})
    raise ScenarioError(f"cannot sweep over {parameter!r}")


def _fmt(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    return "%.17g" % value


class _CsvWriter:
    def __init__(self, path, columns):
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(columns)

    def row(self, values):
        self._writer.writerow([_fmt(v) for v in values])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _write_profile(path, state, params, grid):
    h = state.f + state.g
    p_minus, p_plus = pressures(d2(state.f, grid), d2(h, grid), params)
    with _CsvWriter(path, PROFILE_COLUMNS) as out:
        for row in zip(grid.x, state.f, state.g, p_minus, p_plus):
            out.row(row)


def _write_stability(path, scenario):
    state = scenario.initial_state()
    f_star = integrate(state.f, scenario.grid) / scenario.grid.length
    g_star = integrate(state.g, scenario.grid) / scenario.grid.length
    report = stability_report(f_star, g_star, scenario.params, scenario.grid.length, scenario.n_modes)
    with _CsvWriter(path, STABILITY_COLUMNS) as out:
        for mode, rate_minus, rate_plus in report.mode_rates:
            out.row([
                mode, rate_minus, rate_plus, report.lambda_minus, report.lambda_plus,
                report.kappa_pred, report.epsilon_ellipticity, f_star, g_star,
            ])
    return report


def _simulate(scenario):
    os.makedirs(scenario.directory, exist_ok=True)
    grid, params = scenario.grid, scenario.params
    report = _write_stability(os.path.join(scenario.directory, "stability.csv"), scenario)
    count = {"rows": 0, "profiles": 0}
    last_profile = {"t": None}

    def profile(state):
        path = os.path.join(scenario.directory, "profiles_%06d.csv" % count["profiles"])
        _write_profile(path, state, params, grid)
        count["profiles"] += 1
        last_profile["t"] = state.t

    with _CsvWriter(os.path.join(scenario.directory, "diagnostics.csv"), DIAGNOSTIC_COLUMNS) as diag:

        def observer(state, rec):
            diag.row([getattr(rec, c) for c in DIAGNOSTIC_COLUMNS])
            if count["rows"] == 0 or (scenario.profile_every and count["rows"] % scenario.profile_every == 0):
                profile(state)
            count["rows"] += 1

        outcome, records = advance(
            scenario.initial_state(), scenario.t_end, scenario.stepping, params, grid, observer
        )
    if last_profile["t"] != outcome.state.t:
        profile(outcome.state)
    log.info("finished at t=%g with status %s", outcome.state.t, outcome.status.value)
    return outcome, records, report


def _sweep_one(args):
    index, scenario, parameter, value = args
    variant = with_value(scenario, parameter, value)
    variant = replace(variant, mode="simulate", directory=os.path.join(scenario.directory, "run_%03d" % index))
    outcome, records, report = _simulate(variant)
    first, last = records[0], records[-1]
    drift = max(
        max(abs(r.mass_f - first.mass_f) / abs(first.mass_f), abs(r.mass_g - first.mass_g) / abs(first.mass_g))
        for r in records
    )
    usable = [(r.t, r.perturbation_norm) for r in records if r.perturbation_norm > 0]
    try:
        rate, _ = fit_decay_rate(*zip(*usable)) if len(usable) >= 10 else (math.nan, math.nan)
    except ValueError:
        rate = math.nan
    return [
        index, parameter, value, outcome.status.value, EXIT_CODES[outcome.status], outcome.state.t,
        first.energy, last.energy, drift, report.kappa_pred, rate,
    ]


def _sweep(scenario):
    os.makedirs(scenario.directory, exist_ok=True)
    jobs = [(i, scenario, scenario.sweep_parameter, v) for i, v in enumerate(scenario.sweep_values)]
    if scenario.workers > 1:
        with ProcessPoolExecutor(max_workers=scenario.workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(job) for job in jobs]
    rows.sort(key=lambda r: r[0])
    with _CsvWriter(os.path.join(scenario.directory, "summary.csv"), SUMMARY_COLUMNS) as out:
        for row in rows:
            out.row(row)
    codes = [row[4] for row in rows]
    return max(codes) if codes else 0


def run(scenario):
    """Execute a validated scenario and return the process exit code."""
    try:
        if scenario.mode == "stability":
            os.makedirs(scenario.directory, exist_ok=True)
            _write_stability(os.path.join(scenario.directory, "stability.csv"), scenario)
            return 0
        if scenario.mode == "sweep":
            return _sweep(scenario)
        outcome, _, _ = _simulate(scenario)
        return EXIT_CODES[outcome.status]
    except ScenarioError as exc:
        log.error("%s", exc)
        return CONFIG_ERROR


def main(argv=None):
    parser = argparse.ArgumentParser(prog="ellisfilm", description="Run a two-layer thin-film scenario.")
    parser.add_argument("scenario", help="path to the scenario (.ini) file")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        scenario = parse_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"ellisfilm: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    return run(scenario)


if __name__ == "__main__":
    sys.exit(main())
