"""``cashkit`` command line: ingest corpora, optimize defenses, emit curves, simulate logins."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from contextlib import contextmanager
from typing import Sequence

from . import __version__
from .adversary import CashDistribution
from .distribution import load_corpus, read_distribution, write_distribution
from .experiments import (DEFAULT_V_GRID, cost_cdf, generate_curves, simulate_logins,
                          standard_defenses, write_curves_csv)
from .mechanism import DEFAULT_SALT_BITS, iterations_for_cost
from .optimizer import OptimizerConfig, find_cash_distribution, read_cash, write_cash

log = logging.getLogger("cashkit")


class UsageError(Exception):
    pass


def parse_float_list(text: str) -> list[float]:
    """Comma-separated numbers; ``a,b,...,z`` continues the ratio ``b/a`` up to ``z``."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if "..." not in parts:
        return [float(p) for p in parts]
    i = parts.index("...")
    if i < 2 or i != len(parts) - 2:
        raise UsageError(f"bad range {text!r}: expected a,b,...,z")
    head = [float(p) for p in parts[:i]]
    end = float(parts[-1])
    if head[-2] <= 0 or head[-1] <= head[-2]:
        raise UsageError(f"bad range {text!r}: need 0 < a < b")
    ratio = head[-1] / head[-2]
    values = head[:]
    while True:
        nxt = values[-1] * ratio
        if nxt > end * (1 + 1e-9):
            break
        # snap to the endpoint to avoid printing 1e8 as 99999999.99999
        values.append(end if math.isclose(nxt, end, rel_tol=1e-9) else nxt)
    if not math.isclose(values[-1], end, rel_tol=1e-9):
        values.append(end)
    return values


def parse_int_list(text: str) -> list[int]:
    return [int(round(x)) for x in parse_float_list(text)]


@contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _config(args) -> OptimizerConfig:
    return OptimizerConfig(
        epsilon=args.eps,
        k_set=parse_float_list(args.kset) if args.kset else None,
        threshold_set=parse_int_list(args.bset) if args.bset else None,
        m=args.m,
        max_cut_rounds=args.max_rounds,
        threshold_units=args.threshold_units,
    )


def _check_common(args) -> None:
    if not 0.0 <= args.alpha <= 1.0:
        raise UsageError("--alpha must lie in [0, 1]")
    if args.cmax <= 0:
        raise UsageError("--cmax must be positive")
    if args.m < 1:
        raise UsageError("--m must be at least 1")
    if args.eps <= 0:
        raise UsageError("--eps must be positive")


def cmd_ingest(args) -> int:
    path, plaintext = (args.plaintext, True) if args.plaintext else (args.freq, False)
    dist = load_corpus(path, plaintext=plaintext)
    write_distribution(dist, args.out)
    print(f"{dist.num_classes} classes, {dist.num_passwords} passwords, "
          f"{dist.total_users} users -> {args.out}", file=sys.stderr)
    return 0


def cmd_optimize(args) -> int:
    _check_common(args)
    dist = read_distribution(args.dist)
    v_hat = args.vhat * args.cmax
    defense = find_cash_distribution(dist, v_hat, args.cmax, args.alpha, _config(args),
                                     workers=args.threads)
    if args.out:
        write_cash(args.out, defense, alpha=args.alpha, c_max=args.cmax, epsilon=args.eps,
                   v_hat=v_hat)
    print(f"k={defense.k:.9g} source_threshold={defense.source_threshold} "
          f"predicted_cracked={defense.predicted_cracked:.9g} "
          f"uniform_cracked={defense.uniform_cracked:.9g}")
    return 0


def cmd_curves(args) -> int:
    _check_common(args)
    dist = read_distribution(args.dist)
    grid = parse_float_list(args.vgrid) if args.vgrid else list(DEFAULT_V_GRID)
    v_hat = "match" if args.vhat in (None, "match") else float(args.vhat)
    rows = generate_curves(dist, args.alpha, args.cmax, args.m, grid, v_hat, _config(args),
                           workers=args.threads)
    with _output(args.out) as fh:
        write_curves_csv(rows, fh)
    return 0


def _load_defense(args) -> tuple[CashDistribution, float, float, float]:
    """``(cash, k, alpha, c_max)`` from a CASH file, with flags overriding its header."""
    cash, meta = read_cash(args.cash)
    try:
        k = args.k if args.k is not None else float(meta["k"])
        alpha = args.alpha if args.alpha is not None else float(meta.get("alpha", 1.0))
        c_max = args.cmax if args.cmax is not None else float(meta.get("c_max", 1.0))
    except KeyError:
        raise UsageError(f"{args.cash} has no '# k' header; pass --k") from None
    return cash, k, alpha, c_max


def cmd_costcdf(args) -> int:
    cash, k, alpha, c_max = _load_defense(args)
    grid, cdfs = cost_cdf(standard_defenses(cash, k, c_max, alpha), alpha)
    names = list(cdfs)
    with _output(args.out) as fh:
        fh.write("x," + ",".join(names) + "\n")
        for i, x in enumerate(grid):
            fh.write(f"{x / c_max:.9g}," + ",".join(f"{cdfs[n][i]:.9g}" for n in names) + "\n")
    return 0


def cmd_simulate(args) -> int:
    if args.cash:
        cash, k, _, _ = _load_defense(args)
    elif args.weights:
        cash = CashDistribution(parse_float_list(args.weights))
        k = args.k if args.k is not None else 1.0
    else:
        raise UsageError("simulate needs --cash or --weights")
    k_iter = args.kiter if args.kiter is not None else iterations_for_cost(k)
    login_alpha = args.alpha if args.alpha is not None else 1.0
    report = simulate_logins(cash, k_iter, args.accounts, login_alpha, seed=args.seed,
                             salt_bits=args.salt_bits)
    with _output(args.out) as fh:
        fh.write(f"accounts {report.accounts}\n")
        fh.write(f"k_iter {k_iter}\n")
        fh.write(f"correct_logins {report.correct_logins}\n")
        fh.write(f"wrong_logins {report.wrong_logins}\n")
        fh.write(f"correct_failures {report.correct_failures}\n")
        fh.write(f"false_accepts {report.false_accepts}\n")
        fh.write(f"correct_cost empirical {report.mean_correct_hashes:.9g} "
                 f"analytic {report.analytic_correct_hashes:.9g}\n")
        fh.write(f"wrong_cost empirical {report.mean_wrong_hashes:.9g} "
                 f"analytic {report.analytic_wrong_hashes:.9g}\n")
        analytic = (login_alpha * report.analytic_correct_hashes
                    + (1 - login_alpha) * report.analytic_wrong_hashes)
        fh.write(f"mean_cost empirical {report.mean_hashes:.9g} analytic {analytic:.9g}\n")
    return 0


def _optimizer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dist", required=True, help="class file written by 'ingest'")
    p.add_argument("--alpha", type=float, default=1.0, help="fraction of logins that are correct")
    p.add_argument("--cmax", type=float, default=1.0, help="amortized server cost cap")
    p.add_argument("--m", type=int, default=50, help="number of runtime values")
    p.add_argument("--eps", type=float, default=0.02, help="cutting-plane slack tolerance")
    p.add_argument("--kset", help="hash costs to sweep (default: 20 up to the feasible maximum)")
    p.add_argument("--bset", help="attacker thresholds (default: scaled by --cmax)")
    p.add_argument("--threshold-units", choices=("cost", "guesses"), default="cost",
                   help="whether thresholds are cost budgets or guess counts")
    p.add_argument("--max-rounds", type=int, default=200, help="cut rounds per (k, B)")
    p.add_argument("--threads", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cashkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a frequency or plaintext corpus")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--freq", help="lines of 'f c': c distinct passwords each used by f accounts")
    src.add_argument("--plaintext", help="one password per line")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("optimize", help="choose a CASH distribution for an estimated attacker value")
    _optimizer_flags(p)
    p.add_argument("--vhat", type=float, required=True, help="attacker value in units of --cmax")
    p.add_argument("--seed", type=int, help="accepted for uniformity; optimization is deterministic")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("curves", help="fraction cracked versus attacker value")
    _optimizer_flags(p)
    p.add_argument("--vgrid", help="v/c_max points, e.g. 1e2,1e3,...,1e8")
    p.add_argument("--vhat", default="match",
                   help="'match' (defender knows v) or a fixed value in units of --cmax")
    p.add_argument("--seed", type=int, help="accepted for uniformity; curves are deterministic")
    p.add_argument("--out")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("costcdf", help="server cost distribution of CASH, uniform and deterministic")
    p.add_argument("--cash", required=True, help="file written by 'optimize'")
    p.add_argument("--k", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--cmax", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_costcdf)

    p = sub.add_parser("simulate", help="create accounts and time logins")
    p.add_argument("--cash", help="file written by 'optimize'")
    p.add_argument("--weights", help="comma-separated runtime weights instead of --cash")
    p.add_argument("--k", type=float, help="hash cost; rounded to an iteration count")
    p.add_argument("--kiter", type=int, help="iteration count, overriding --k")
    p.add_argument("--alpha", type=float, help="fraction of logins using the right password")
    p.add_argument("--cmax", type=float)
    p.add_argument("--accounts", type=int, default=10_000)
    p.add_argument("--salt-bits", type=int, default=DEFAULT_SALT_BITS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError, RuntimeError) as exc:
        print(f"cashkit {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
