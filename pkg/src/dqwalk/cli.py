"""Command line front end.

    dqwalk price       --config run.cfg --out prices.csv
    dqwalk compare     --config run.cfg --out errors.csv
    dqwalk rate-study  --config run.cfg --out rate.csv --sizes 100,200,400,800
    dqwalk greeks      --config run.cfg --out greeks.csv
    dqwalk cdo-spread  --config cdo.cfg --out spreads.csv

Exit status: 0 success, 2 configuration error, 3 numerical failure,
4 no applicable reference method.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dqwalk.cdo import DEFAULT_T_NODES, DEFAULT_U_NODES, PortfolioSpec, TrancheSpec, expected_loss_curve, spread_from_curve
from dqwalk.config import get_bool, get_float, get_int, read_kv
from dqwalk.errors import ConfigError, NumericalError, OracleUnavailableError
from dqwalk.greeks import greeks_report
from dqwalk.grids import GridCache
from dqwalk.oracles import brute_force_law, gaussian_baseline, lattice_tree_law, poisson_baseline
from dqwalk.pricing import price_table, romberg_price
from dqwalk.propagate import PropagationConfig, propagate_walk
from dqwalk.report import atomic_write, csv_document, gnuplot_script
from dqwalk.walk import ScenarioConfig, generate_scenario

COMMANDS = ("price", "compare", "rate-study", "greeks", "cdo-spread")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ORACLE = 0, 2, 3, 4
FLOOR = 1e-12
BRUTE_FORCE_MAX_N = 20


@dataclass
class RunConfig:
    command: str
    entries: dict
    engine: PropagationConfig
    output_path: Path
    scenario: ScenarioConfig | None = None
    portfolio: PortfolioSpec | None = None
    tranches: list = field(default_factory=list)
    romberg: tuple | None = None
    strikes: np.ndarray | None = None
    threads: int = 1

    @property
    def echo(self) -> dict:
        """Effective configuration for the CSV header."""
        out = dict(self.entries)
        if self.scenario is not None:
            out.update(self.scenario.to_mapping())
        out.update({
            "grid_size": str(self.engine.grid_size),
            "aggregation": str(self.engine.aggregation),
            "exact_support": str(self.engine.exact_support).lower(),
        })
        out.pop("command", None)
        return out


def _strikes(entries):
    lo = get_float(entries, "strike_lo", 0.0)
    hi = get_float(entries, "strike_hi", 50.0)
    step = get_float(entries, "strike_step", 1.0)
    if step <= 0.0 or hi < lo:
        raise ConfigError("strike range needs strike_step > 0 and strike_hi >= strike_lo")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def _tranches(entries):
    maturity = get_float(entries, "maturity", 5.0)
    rate = get_float(entries, "rate", 0.0)
    spec = entries.get("tranches")
    if not spec:
        raise ConfigError("cdo-spread needs 'tranches = a-b, c-d, ...'")
    out = []
    for item in spec.split(","):
        try:
            a, b = (float(v) for v in item.strip().split("-"))
        except ValueError:
            raise ConfigError(f"bad tranche {item.strip()!r}, expected 'a-b'") from None
        out.append(TrancheSpec(a, b, maturity, rate))
    return out


def build_run_config(command, entries, out, seed=None, threads=1) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if entries.get("command", command) != command:
        raise ConfigError(f"config is for {entries['command']!r}, not {command!r}")
    try:
        engine = PropagationConfig(
            grid_size=get_int(entries, "grid_size", 500),
            aggregation=get_int(entries, "aggregation", 1),
            track_distortion=command != "cdo-spread",
            exact_support=get_bool(entries, "exact_support", True),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    run = RunConfig(command, dict(entries), engine, Path(out), threads=max(1, threads))
    if "romberg_n1" in entries or "romberg_n2" in entries:
        n1, n2 = get_int(entries, "romberg_n1"), get_int(entries, "romberg_n2")
        if n1 == n2 or min(n1, n2) < 1:
            raise ConfigError("romberg_n1 and romberg_n2 must be distinct sizes >= 1")
        run.romberg = (n1, n2)
    if command == "cdo-spread":
        run.portfolio = PortfolioSpec.from_mapping(entries)
        run.tranches = _tranches(entries)
        return run
    if "n" not in entries or "p0" not in entries:
        raise ConfigError(f"{command} needs a scenario (keys n, p0, ...)")
    if seed is not None:
        entries = dict(entries, seed=str(seed))
    run.scenario = ScenarioConfig.from_mapping(entries)
    if command == "greeks":
        run.strikes = np.array([get_float(entries, "strike")])
    else:
        run.strikes = _strikes(entries)
    return run


# --- commands ------------------------------------------------------------------


def _prices(spec, strikes, size, engine, cache):
    cfg = PropagationConfig(size, engine.aggregation, engine.track_distortion, engine.exact_support)
    return price_table(propagate_walk(spec, cfg, cache).final, strikes).values


def _romberg(spec, strikes, pair, engine, cache):
    n1, n2 = pair
    p1 = _prices(spec, strikes, n1, engine, cache)
    p2 = _prices(spec, strikes, n2, engine, cache)
    return np.array([romberg_price(a, n1, b, n2) for a, b in zip(p1, p2)])


def reference_prices(run, spec, cache):
    """Reference call prices and a description of how they were obtained."""
    mode = run.entries.get("reference", "auto")
    if mode not in ("auto", "lattice", "brute-force", "self"):
        raise ConfigError(f"unknown reference mode {mode!r}")
    u = get_float(run.entries, "lattice_u", 1.0)
    if mode in ("auto", "lattice"):
        try:
            law = lattice_tree_law(spec, u).to_distribution()
            return price_table(law, run.strikes).values, [f"reference: recombining lattice, u = {u!r}"]
        except OracleUnavailableError:
            if mode == "lattice":
                raise OracleUnavailableError(
                    "coefficients are not on the lattice; set lattice_u to their common "
                    "pitch, or use reference = brute-force (n <= 20) or reference = self"
                ) from None
    if mode == "brute-force" or (mode == "auto" and spec.n <= BRUTE_FORCE_MAX_N):
        if spec.n > BRUTE_FORCE_MAX_N:
            raise OracleUnavailableError(
                f"brute force needs n <= {BRUTE_FORCE_MAX_N}; use reference = self"
            )
        return price_table(brute_force_law(spec), run.strikes).values, ["reference: exact enumeration"]
    size = get_int(run.entries, "reference_size", 10000)
    notes = [
        f"reference: self-reference quantization with N = {size}",
        "caveat: the self-reference is itself an approximation; on lattice scenarios "
        "N = 10000 was observed accurate well below the errors reported here, but its "
        "own error is not controlled by this run",
    ]
    return _prices(spec, run.strikes, size, run.engine, cache), notes


def run_price(run, cache):
    spec = generate_scenario(run.scenario)
    strikes = run.strikes
    columns, data = ["K", "dq_N"], [strikes, _prices(spec, strikes, run.engine.grid_size, run.engine, cache)]
    if run.romberg:
        columns.append("dq_romberg")
        data.append(_romberg(spec, strikes, run.romberg, run.engine, cache))
    text = csv_document(run.command, run.echo, columns, zip(*data))
    atomic_write(run.output_path, text)
    return text


def run_compare(run, cache):
    spec = generate_scenario(run.scenario)
    strikes = run.strikes
    ref, notes = reference_prices(run, spec, cache)
    methods = {"dq_N": _prices(spec, strikes, run.engine.grid_size, run.engine, cache)}
    if run.romberg:
        methods["dq_romberg"] = _romberg(spec, strikes, run.romberg, run.engine, cache)
    methods["gaussian"] = np.array([gaussian_baseline(spec, k) for k in strikes])
    try:
        methods["poisson"] = np.array([poisson_baseline(spec, k) for k in strikes])
    except OracleUnavailableError:
        notes.append("poisson baseline omitted: coefficients are not all equal")
    columns = ["K", "reference"] + list(methods) + [f"abs_err_{m}" for m in methods]
    errors = [np.abs(v - ref) for v in methods.values()]
    rows = zip(strikes, ref, *methods.values(), *errors)
    text = csv_document(run.command, run.echo, columns, rows, notes)
    atomic_write(run.output_path, text)
    script = gnuplot_script(run.output_path, "K", [f"abs_err_{m}" for m in methods],
                            "Absolute errors of call prices", "strike K", "absolute error")
    atomic_write(run.output_path.with_suffix(".gp"), script)
    return text


def loglog_slope(sizes, errors) -> float:
    return float(np.polyfit(np.log(sizes), np.log(errors), 1)[0])


def run_rate_study(run, cache, sizes):
    if sizes is None:
        raw = run.entries.get("sizes", "")
        sizes = [int(v) for v in raw.split(",") if v.strip()]
    sizes = sorted(set(sizes))
    if len(sizes) < 3:
        raise ConfigError("rate-study needs at least three distinct grid sizes")
    spec = generate_scenario(run.scenario)
    ref, notes = reference_prices(run, spec, cache)
    errs = [float(np.max(np.abs(_prices(spec, run.strikes, n, run.engine, cache) - ref)))
            for n in sizes]
    if max(errs) <= FLOOR:
        footer = ["slope: skipped, every error is at the rounding floor "
                  "(layers were propagated on their exact support)"]
    else:
        footer = [f"slope: {loglog_slope(sizes, errs):.6f}"]
    text = csv_document(run.command, run.echo, ["N", "max_abs_err"], zip(sizes, errs),
                        notes, footer)
    atomic_write(run.output_path, text)
    script = gnuplot_script(run.output_path, "N", ["max_abs_err"], "Max error over strikes",
                            "grid size N", "max absolute error", logscale="xy")
    atomic_write(run.output_path.with_suffix(".gp"), script)
    return text


def run_greeks(run, cache):
    spec = generate_scenario(run.scenario)
    engine = PropagationConfig(run.engine.grid_size, 1, False, run.engine.exact_support)
    report = greeks_report(spec, float(run.strikes[0]), engine, cache)
    rows = zip(range(1, spec.n + 1), report.alphas, report.probs, report.dp, report.dalpha)
    text = csv_document(run.command, run.echo, ["l", "alpha_l", "p_l", "dp", "dalpha"], rows,
                        [f"strike: {report.strike!r}"])
    atomic_write(run.output_path, text)
    return text


def run_cdo_spread(run, cache):
    u_nodes = get_int(run.entries, "u_nodes", DEFAULT_U_NODES)
    t_nodes = get_int(run.entries, "t_nodes", DEFAULT_T_NODES)
    rows = []
    for tranche in run.tranches:
        times, losses = expected_loss_curve(run.portfolio, tranche, run.engine, u_nodes,
                                            t_nodes, cache, run.threads)
        rows.append((tranche.label, spread_from_curve(times, losses, tranche), losses[-1]))
    text = csv_document(run.command, run.echo, ["tranche", "spread", "EL_at_T"], rows)
    atomic_write(run.output_path, text)
    return text


def execute(run, sizes=None, cache=None):
    cache = GridCache() if cache is None else cache
    if run.command == "price":
        return run_price(run, cache)
    if run.command == "compare":
        return run_compare(run, cache)
    if run.command == "rate-study":
        return run_rate_study(run, cache, sizes)
    if run.command == "greeks":
        return run_greeks(run, cache)
    return run_cdo_spread(run, cache)


def _parse_sizes(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("sizes must be comma-separated integers") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="dqwalk", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="flat key = value config file")
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--sizes", type=_parse_sizes, help="grid sizes for rate-study, e.g. 100,200,400")
    parser.add_argument("--seed", type=int, help="override the scenario seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (cdo-spread)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = build_run_config(args.command, read_kv(args.config), args.out, args.seed, args.threads)
        execute(run, args.sizes)
    except ConfigError as exc:
        print(f"dqwalk: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleUnavailableError as exc:
        print(f"dqwalk: no reference available: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except NumericalError as exc:
        print(f"dqwalk: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
