"""Regenerate the convergence tables of the four built-in examples.

Usage:
    python3 scripts/reproduce_tables.py                     # every example, full grids
    python3 scripts/reproduce_tables.py peri-diag --quick   # coarse grid only
    python3 scripts/reproduce_tables.py mixed-domain --out results

Each example gets a directory with report.csv, rates.csv, tensors.csv,
comparison.txt, convergence.svg and a text table (table.txt) laid out
with H down the rows and the micro resolution or delta across the columns.
"""

import argparse
import logging
import time
from fractions import Fraction
from pathlib import Path

from nchmm.analysis import convergence_report
from nchmm.cli import convergence_svg, write_rates_csv, write_report_csv, write_tensors_csv
from nchmm.problems import builtin_examples

F = Fraction
H_FULL = [F(1, 2), F(1, 4), F(1, 8), F(1, 16), F(1, 32), F(1, 64)]

# (H list, n list, delta modes, memoize) per example
GRIDS = {
    "peri-diag": (H_FULL, [4, 8, 16, 32, 64], None, False),
    "peri-offdiag": (H_FULL, [4, 8, 16, 32, 64], None, True),
    "dirichlet-noninteger": (H_FULL[:5], [128], [1.1, 3.1, "sqrt"], True),
    "mixed-domain": (H_FULL, [16, 32, 64], None, True),
}
QUICK = {
    "peri-diag": ([F(1, 2), F(1, 4), F(1, 8)], [4, 8, 16]),
    "peri-offdiag": ([F(1, 2), F(1, 4), F(1, 8)], [4, 8, 16]),
    "dirichlet-noninteger": ([F(1, 2), F(1, 4)], [128]),
    "mixed-domain": ([F(1, 2), F(1, 4)], [16]),
}
METRICS = (("err_h1_broken", "broken H1 error"), ("err_l2", "L2 error"), ("tensor_err_fro", "tensor error"))


def format_table(report) -> str:
    columns = []
    for c in report.cells:
        key = (c.n, c.delta_mode)
        if key not in columns:
            columns.append(key)
    multi_delta = len({d for _, d in columns}) > 1
    heads = [d if multi_delta else f"h/eps=1/{n}" for n, d in columns]
    rows = sorted({c.H for c in report.cells}, reverse=True)
    lines = []
    for metric, title in METRICS:
        lines.append(f"{title}")
        lines.append("H".rjust(6) + "".join(h.rjust(13) for h in heads))
        for H in rows:
            vals = []
            for n, d in columns:
                cell = next((c for c in report.cells if c.H == H and c.n == n and c.delta_mode == d), None)
                vals.append(f"{getattr(cell, metric):.2e}" if cell is not None and cell.status == "ok" else "failed")
            lines.append(str(H).rjust(6) + "".join(v.rjust(13) for v in vals))
        lines.append("")
    return "\n".join(lines)


def main() -> None:
    catalog = builtin_examples()
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("examples", nargs="*", choices=[[], *catalog], default=[], help="default: all")
    p.add_argument("--quick", action="store_true", help="coarse grid for a smoke run")
    p.add_argument("--out", default="results", help="output root directory")
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    for name in args.examples or list(catalog):
        ex = catalog[name]
        Hs, ns, deltas, memo = GRIDS[name]
        if args.quick:
            Hs, ns = QUICK[name]
        t0 = time.perf_counter()
        report = convergence_report(
            ex, Hs, ns, delta_modes=deltas, memoize=memo, jobs=args.jobs, keep_fields=True,
            progress=lambda c: logging.info("%s H=%s n=%d %s: H1 %.3e L2 %.3e tensor %.3e (%.1fs)", name, c.H,
                                            c.n, c.delta_mode, c.err_h1_broken, c.err_l2, c.tensor_err_fro,
                                            c.seconds),
        )
        out = Path(args.out) / name
        out.mkdir(parents=True, exist_ok=True)
        write_report_csv(out / "report.csv", report)
        write_rates_csv(out / "rates.csv", report)
        write_tensors_csv(out / "tensors.csv", report)
        (out / "comparison.txt").write_text(report.comparison + "\n")
        (out / "convergence.svg").write_text(convergence_svg(report))
        table = format_table(report)
        (out / "table.txt").write_text(table)
        print(f"\n== {name} ({time.perf_counter() - t0:.0f} s) ==\n{table}")


if __name__ == "__main__":
    main()
