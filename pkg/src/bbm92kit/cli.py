"""Command-line front end emitting machine-readable tables for every computation.

Commands: tau, keyrate, tradeoff, attack, simulate, selftest.  Output is CSV
(default) or JSON (--format json); grids use inclusive start:stop:count
specs.  Exit codes: 0 success, 2 invalid arguments, 3 infeasible inputs,
4 internal numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__, attack, povm, rates, selfcheck, sim
from .errors import InfeasibleError, NumericalError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

OUT_DIR_ENV = "BBM92KIT_OUT_DIR"

_DEFAULTS = {
    "format": "csv",
    "f": 1.0,
    "seed": 12345,
    "resolution": 2000,
    "points": 200,
    "samples": 1000,
    "events": 100000,
    "sweep": None,
}


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def parse_grid(spec: str) -> np.ndarray:
    """Inclusive-endpoint grid from a start:stop:count spec."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid spec must be start:stop:count, got {spec!r}")
    start, stop = float(parts[0]), float(parts[1])
    count = int(parts[2])
    if count < 1:
        raise ValueError(f"grid count must be >= 1, got {count}")
    return np.linspace(start, stop, count)


def _read_config(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(args: argparse.Namespace) -> None:
    """Fill unset flags from the config file, then from built-in defaults."""
    config = _read_config(args.config) if args.config else {}
    for key, raw in config.items():
        if not hasattr(args, key):
            raise ValueError(f"unknown config key {key!r}")
        if getattr(args, key) is None:
            default = _DEFAULTS.get(key)
            if isinstance(default, float) or key in ("delta", "eps", "f", "alpha", "beta", "xi", "visibility"):
                value = float(raw)
            elif isinstance(default, int) or key in ("seed", "events", "points", "samples", "sweep", "na", "nb", "resolution"):
                value = int(raw)
            else:
                value = raw
            setattr(args, key, value)
    for key, default in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, default)


def _resolve_out(path: str | None) -> str | None:
    if path is None:
        return None
    out_dir = os.environ.get(OUT_DIR_ENV)
    if out_dir and not os.path.isabs(path):
        return os.path.join(out_dir, path)
    return path


def _emit(args, columns, rows, meta_extra=None, summary_lines=()) -> None:
    meta = {
        "version": __version__,
        "command": args.command,
        "flags": {
            k: v
            for k, v in sorted(vars(args).items())
            if k not in ("command", "func") and v is not None
        },
    }
    if meta_extra:
        meta.update(meta_extra)
    if args.format == "json":
        clean = [
            {
                k: (None if isinstance(v, float) and math.isnan(v) else v)
                for k, v in row.items()
            }
            for row in rows
        ]
        payload = {"meta": meta, "rows": clean}
        text = json.dumps(payload, indent=2, sort_keys=False, allow_nan=False) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt_cell(row.get(col)) for col in columns])
        text = buf.getvalue()
        for line in summary_lines:
            print(f"# {line}", file=sys.stderr)
    out = _resolve_out(args.out)
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def read_table(text: str) -> tuple[list[str], list[dict]]:
    """Parse a CSV table produced by this tool back into typed rows."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = []
    for record in reader:
        row = {}
        for key, cell in zip(header, record):
            if cell == "":
                row[key] = None
            elif cell in ("true", "false"):
                row[key] = cell == "true"
            else:
                try:
                    row[key] = int(cell) if cell.lstrip("+-").isdigit() else float(cell)
                except ValueError:
                    row[key] = cell
        rows.append(row)
    return header, rows


def _grid_values(scalar, grid_spec, name: str) -> np.ndarray:
    if scalar is not None and grid_spec is not None:
        raise ValueError(f"give either --{name} or --{name}-grid, not both")
    if grid_spec is not None:
        return parse_grid(grid_spec)
    if scalar is None:
        raise ValueError(f"missing --{name} or --{name}-grid")
    return np.array([float(scalar)])


def _tau_row(stats: rates.ObservedStats, resolution: int) -> dict:
    result = rates.tau_closed_form(stats)
    row = {
        "delta": stats.delta,
        "eps": stats.eps,
        "tau_closed": result.tau if result.feasible else float("nan"),
        "tau_numeric": float("nan"),
        "tau_low": float("nan"),
        "region": result.region,
    }
    if result.feasible:
        row["tau_numeric"] = rates.tau_numeric(stats, resolution)
        row["tau_low"] = rates.tau_low(stats)
    return row


def _cmd_tau(args) -> int:
    deltas = _grid_values(args.delta, args.delta_grid, "delta")
    epss = _grid_values(args.eps, args.eps_grid, "eps")
    scalar_call = args.delta_grid is None and args.eps_grid is None
    rows = []
    for d in deltas:
        for e in epss:
            stats = rates.ObservedStats(float(d), float(e))
            if scalar_call and not stats.feasible:
                raise InfeasibleError(
                    f"(delta={d}, eps={e}) lies outside regions (a)-(c)"
                )
            rows.append(_tau_row(stats, args.resolution))
    _emit(args, ["delta", "eps", "tau_closed", "tau_numeric", "tau_low", "region"], rows)
    return EXIT_OK


def _cmd_keyrate(args) -> int:
    deltas = _grid_values(args.delta, args.delta_grid, "delta")
    epss = _grid_values(args.eps, args.eps_grid, "eps")
    scalar_call = args.delta_grid is None and args.eps_grid is None
    if args.f < 1.0:
        raise ValueError(f"--f must be >= 1, got {args.f}")
    rows = []
    for d in deltas:
        for e in epss:
            stats = rates.ObservedStats(float(d), float(e))
            row = {
                "delta": stats.delta,
                "eps": stats.eps,
                "region": "infeasible",
                "tau": float("nan"),
                "r_key": float("nan"),
                "r_upper": float("nan"),
                "r_conjectured_random_assignment": float("nan"),
                "has_key": None,
            }
            if stats.feasible:
                result = rates.key_rate(stats, args.f)
                shrink = (1.0 - stats.delta) * (
                    1.0 - args.f * rates.binary_entropy(stats.eps / (1.0 - stats.delta))
                )
                row.update(
                    region=result.region,
                    tau=result.tau,
                    r_key=result.r_key,
                    r_upper=shrink - rates.tau_low(stats),
                    r_conjectured_random_assignment=rates.conjectured_random_assignment_rate(
                        stats
                    ),
                    has_key=result.has_key,
                )
            elif scalar_call:
                raise InfeasibleError(
                    f"(delta={d}, eps={e}) lies outside regions (a)-(c)"
                )
            rows.append(row)
    _emit(
        args,
        [
            "delta",
            "eps",
            "region",
            "tau",
            "r_key",
            "r_upper",
            "r_conjectured_random_assignment",
            "has_key",
        ],
        rows,
    )
    return EXIT_OK


def _cmd_tradeoff(args) -> int:
    pair = povm.PhotonPair(args.na, args.nb)
    if pair.n_a % 2 == 1 and pair.n_b % 2 == 1:
        value = povm.min_double_click(pair)
        l_sum = (pair.n_a - 1) // 2 + (pair.n_b - 1) // 2
        closed = 0.5 * (1.0 - 2.0 ** (-l_sum))
        rows = [
            {
                "n_a": pair.n_a,
                "n_b": pair.n_b,
                "min_double_click": value,
                "closed_form": closed,
            }
        ]
        _emit(
            args,
            ["n_a", "n_b", "min_double_click", "closed_form"],
            rows,
            meta_extra={"summary": {"min_double_click": value}},
            summary_lines=[f"odd-odd pair: min double-click fraction = {value:.12g}"],
        )
        return EXIT_OK
    points = povm.trace_boundary(pair, num_points=args.points)
    rows = []
    max_dev = 0.0
    for p in points:
        on_curve = p.delta_m <= 1.0 / 3.0 + 1e-12
        bound = float(rates.g(min(p.delta_m, 1.0 / 3.0))) if on_curve else None
        dev = p.eps_m - bound if bound is not None else None
        if dev is not None:
            max_dev = max(max_dev, abs(dev))
        rows.append(
            {
                "delta_m": p.delta_m,
                "eps_m": p.eps_m,
                "g_bound": bound,
                "eps_minus_bound": dev,
            }
        )
    rng = np.random.default_rng(args.seed)
    states = rng.standard_normal((args.samples, pair.joint_dim))
    states /= np.linalg.norm(states, axis=1, keepdims=True)
    fd = povm.f_dbl(pair).entries
    fe = povm.f_err(pair).entries
    inside = 0
    for vec in states:
        point = povm.TradeoffPoint(float(vec @ fd @ vec), float(vec @ fe @ vec))
        inside += povm.region_membership(point, tol=1e-8)
    summary = {
        "max_abs_eps_minus_bound": max_dev,
        "random_states_inside": inside,
        "random_states_total": args.samples,
    }
    _emit(
        args,
        ["delta_m", "eps_m", "g_bound", "eps_minus_bound"],
        rows,
        meta_extra={"summary": summary},
        summary_lines=[
            f"max |eps_m - g(delta_m)| over traced points with delta_m <= 1/3: {max_dev:.12g}",
            f"random-state region membership: {inside}/{args.samples} inside",
        ],
    )
    return EXIT_OK


def _attack_row(alpha: float, beta: float) -> dict:
    result = attack.run_attack(attack.boundary_state(alpha, beta))
    on_curve = result.delta_m <= 1.0 / 3.0 + 1e-12
    bound = float(rates.g(min(result.delta_m, 1.0 / 3.0))) if on_curve else None
    return {
        "alpha": alpha,
        "beta": beta,
        "delta_m": result.delta_m,
        "eps_m": result.eps_m,
        "g_bound": bound,
        "on_boundary": bool(bound is not None and abs(result.eps_m - bound) <= 1e-9),
        "eve_bit_accuracy": result.eve_bit_accuracy,
    }


def _cmd_attack(args) -> int:
    columns = [
        "alpha",
        "beta",
        "delta_m",
        "eps_m",
        "g_bound",
        "on_boundary",
        "eve_bit_accuracy",
    ]
    if args.sweep is None:
        if args.alpha is None or args.beta is None:
            raise ValueError("need --alpha and --beta, or --sweep N")
        rows = [_attack_row(args.alpha, args.beta)]
        _emit(args, columns, rows)
        return EXIT_OK
    rows = [
        {
            "alpha": p.alpha,
            "beta": p.beta,
            "delta_m": p.result.delta_m,
            "eps_m": p.result.eps_m,
            "g_bound": float(rates.g(min(p.result.delta_m, 1.0 / 3.0)))
            if p.result.delta_m <= 1.0 / 3.0 + 1e-12
            else None,
            "on_boundary": None,
            "eve_bit_accuracy": p.result.eve_bit_accuracy,
        }
        for p in attack.boundary_sweep(args.sweep)
    ]
    for row in rows:
        row["on_boundary"] = bool(
            row["g_bound"] is not None and abs(row["eps_m"] - row["g_bound"]) <= 1e-9
        )
    on_curve = sorted(row["delta_m"] for row in rows if row["on_boundary"])
    coverage = {
        "boundary_points": len(on_curve),
        "delta_min": on_curve[0] if on_curve else None,
        "delta_max": on_curve[-1] if on_curve else None,
        "max_gap": max(
            (b - a for a, b in zip(on_curve, on_curve[1:])), default=None
        ),
    }
    _emit(
        args,
        columns,
        rows,
        meta_extra={"summary": coverage},
        summary_lines=[
            f"boundary coverage: delta_m in [{coverage['delta_min']:.12g}, "
            f"{coverage['delta_max']:.12g}] over {coverage['boundary_points']} points, "
            f"max gap {coverage['max_gap']:.12g}"
        ],
    )
    return EXIT_OK


def parse_source(spec: str) -> sim.SourceModel:
    """Source spec: 'ideal', 'werner:V', or 'attack:ALPHA,BETA,XI'."""
    kind, _, rest = spec.partition(":")
    if kind == "ideal":
        if rest:
            raise ValueError("ideal source takes no parameters")
        return sim.SourceModel.ideal_pair()
    if kind == "werner":
        return sim.SourceModel.werner(float(rest))
    if kind == "attack":
        parts = rest.split(",")
        if len(parts) != 3:
            raise ValueError("attack source spec must be attack:ALPHA,BETA,XI")
        alpha, beta, xi = (float(p) for p in parts)
        return sim.SourceModel.eve_attack(attack.boundary_state(alpha, beta), xi)
    raise ValueError(f"unknown source kind {kind!r}")


def _cmd_simulate(args) -> int:
    source = parse_source(args.source)
    if args.events < 1:
        raise ValueError(f"--events must be >= 1, got {args.events}")
    if args.f < 1.0:
        raise ValueError(f"--f must be >= 1, got {args.f}")
    report = sim.end_to_end(source, args.events, f=args.f, seed=args.seed)
    row = {
        "source": args.source,
        "seed": report.seed,
        "events": report.num_events,
        "n_sifted_basis": report.tally.n,
        "n_dbl": report.tally.n_dbl,
        "n_err": report.tally.n_err,
        "n_cor": report.tally.n_cor,
        "delta_hat": report.delta_hat,
        "eps_hat": report.eps_hat,
        "delta_se": report.delta_se,
        "eps_se": report.eps_se,
        "region": report.sampled.region if report.sampled else "infeasible",
        "r_key": report.sampled.r_key if report.sampled else None,
        "delta_analytic": report.analytic_delta,
        "eps_analytic": report.analytic_eps,
        "r_key_analytic": report.analytic.r_key if report.analytic else None,
        "r_key_gap": report.r_key_gap,
        "r_conjectured_random_assignment": report.conjectured_rate_sampled,
        "f_ec": report.f_ec,
    }
    _emit(args, list(row.keys()), [row])
    return EXIT_OK


def _cmd_selftest(args) -> int:
    results = selfcheck.run_all()
    failed = 0
    for check in results:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.detail}")
        failed += not check.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbm92kit",
        description=(
            "Security analysis for entanglement-based QKD with threshold "
            "detectors and discarded double clicks"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--config", help="key=value file supplying flag defaults")

    p_tau = sub.add_parser("tau", help="privacy-amplification fraction table")
    p_tau.add_argument("--delta", type=float)
    p_tau.add_argument("--delta-grid", dest="delta_grid")
    p_tau.add_argument("--eps", type=float)
    p_tau.add_argument("--eps-grid", dest="eps_grid")
    p_tau.add_argument("--resolution", type=int, help="search resolution for tau_numeric")
    common(p_tau)
    p_tau.set_defaults(func=_cmd_tau)

    p_key = sub.add_parser("keyrate", help="final key fraction table")
    p_key.add_argument("--delta", type=float)
    p_key.add_argument("--delta-grid", dest="delta_grid")
    p_key.add_argument("--eps", type=float)
    p_key.add_argument("--eps-grid", dest="eps_grid")
    p_key.add_argument("--f", type=float, help="error-correction inefficiency >= 1")
    common(p_key)
    p_key.set_defaults(func=_cmd_keyrate)

    p_trade = sub.add_parser("tradeoff", help="double-click/error trade-off boundary")
    p_trade.add_argument("--na", type=int, required=True)
    p_trade.add_argument("--nb", type=int, required=True)
    p_trade.add_argument("--points", type=int, help="supporting-hyperplane sweep size")
    p_trade.add_argument("--samples", type=int, help="random states for membership check")
    p_trade.add_argument("--seed", type=int)
    common(p_trade)
    p_trade.set_defaults(func=_cmd_tradeoff)

    p_att = sub.add_parser("attack", help="explicit attack points and boundary sweep")
    p_att.add_argument("--alpha", type=float)
    p_att.add_argument("--beta", type=float)
    p_att.add_argument("--sweep", type=int, help="number of sweep angles")
    common(p_att)
    p_att.set_defaults(func=_cmd_attack)

    p_sim = sub.add_parser("simulate", help="Monte Carlo protocol run")
    p_sim.add_argument(
        "--source", required=True, help="ideal | werner:V | attack:ALPHA,BETA,XI"
    )
    p_sim.add_argument("--events", type=int)
    p_sim.add_argument("--f", type=float)
    p_sim.add_argument("--seed", type=int)
    common(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_self = sub.add_parser("selftest", help="run the built-in invariant suite")
    common(p_self)
    p_self.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
