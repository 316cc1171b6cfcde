"""Compare the compiled and pure-Python tridiagonal kernels.

    python3 benchmarks/bench_kernels.py [--nodes 4001 16001] [--repeat 5]

Times ``thomas_solve`` and a full ``monotone_iterate`` run on the operator
of the default problem, and reports the maximum difference between the two
backends.
"""

import argparse
import timeit

import numpy as np

from chemolayer import kernels
from chemolayer.problem import ProblemSpec, build_mesh, radial_operator


def _setup(n_nodes, eps=0.01):
    spec = ProblemSpec()
    mesh = build_mesh(spec, eps, n_nodes)
    op = radial_operator(mesh, spec.N).scaled(eps**2)
    n = op.diag.size
    rhs = np.random.default_rng(0).normal(size=n)
    mono = (op.lower, op.diag, op.upper, op.boundary * spec.u0, spec.rho0,
            2 * np.e, np.full(n, spec.u0), 1e-12, 100_000)
    return op, rhs, mono


def bench(n_nodes, repeat):
    op, rhs, mono = _setup(n_nodes)
    rows = {}
    for name in kernels.available_backends():
        mod = kernels.get_backend(name)
        t_thomas = min(timeit.repeat(lambda: mod.thomas_solve(op.lower, op.diag, op.upper, rhs),
                                     number=20, repeat=repeat)) / 20
        t_mono = min(timeit.repeat(lambda: mod.monotone_iterate(*mono), number=1, repeat=repeat))
        psi, sweeps, _ = mod.monotone_iterate(*mono)
        rows[name] = (t_thomas, t_mono, sweeps, psi)
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, nargs="+", default=[1001, 4001, 16001])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'nodes':>7} {'backend':>8} {'thomas [us]':>12} {'monotone [ms]':>14} {'sweeps':>7}")
    for n in args.nodes:
        rows = bench(n, args.repeat)
        for name, (tt, tm, sweeps, _) in rows.items():
            print(f"{n:>7} {name:>8} {tt * 1e6:>12.1f} {tm * 1e3:>14.2f} {sweeps:>7}")
        if len(rows) == 2:
            diff = np.max(np.abs(rows["cython"][3] - rows["python"][3]))
            speed = rows["python"][1] / rows["cython"][1]
            print(f"{'':>7} speed-up (monotone) {speed:.1f}x, max |difference| {diff:.2e}")


if __name__ == "__main__":
    main()
