"""Dense-constrained versus iterative micro solves on one sampling domain per example.

Prints the system dimension, kernel deficiency, CG iterations and the
Frobenius distance between the two recovered tensors for a range of n.

    python3 scripts/micro_diagnostics.py [--n 2,4,8,16] [--center 0.3,0.7]
"""

import argparse

import numpy as np

from nchmm.analysis import resolve_delta
from nchmm.micro import (
    SamplingDomain,
    assemble_micro_system,
    recovered_tensor,
    solve_correctors,
    solve_correctors_dense,
    system_deficiency,
)
from nchmm.problems import builtin_examples


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--n", default="1,2,3,4,8,16")
    p.add_argument("--center", default="0.3,0.7")
    args = p.parse_args()
    ns = [int(s) for s in args.n.split(",")]
    center = tuple(float(s) for s in args.center.split(","))

    print(f"{'example':22s}{'coupling':>10s}{'n':>4s}{'dofs':>7s}{'defic':>7s}{'cg its':>8s}{'|A_cg - A_dense|':>19s}")
    for name, ex in builtin_examples().items():
        delta = resolve_delta(ex.delta_factors[0], ex.eps)
        for coupling in ("periodic", "dirichlet"):
            for n in ns:
                d = SamplingDomain(center, delta, n, coupling)
                system = assemble_micro_system(d, ex.tensor)
                corr = solve_correctors(d, ex.tensor, tol=1e-12, system=system)
                A_cg = recovered_tensor(d, ex.tensor, corr).matrix
                A_dense = solve_correctors_dense(d, ex.tensor).tensor.matrix
                print(f"{name:22s}{coupling:>10s}{n:>4d}{system.space.dof_count:>7d}"
                      f"{system_deficiency(system):>7d}{corr.report.iterations:>8d}"
                      f"{np.linalg.norm(A_cg - A_dense):>19.3e}")


if __name__ == "__main__":
    main()
