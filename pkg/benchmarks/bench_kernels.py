"""Compare the compiled and pure-Python pivot kernels.

Solves the root LP and a short node-limited branch-and-bound on benchmark
models with each backend and prints one line per run:

    python3 benchmarks/bench_kernels.py --n 20,50,100 --nodes 200
"""
import argparse
import time

from mimfrelax.bench import build_relaxed_milp, generate_instance
from mimfrelax.relaxations import Formulation
from mimfrelax.solver import KERNELS, LPSolver, solve_milp


def time_backend(model, backend, nodes):
    t0 = time.perf_counter()
    lp = LPSolver(model, backend=backend)
    root = lp.solve()
    t_root = time.perf_counter() - t0
    t0 = time.perf_counter()
    res = solve_milp(model, nodes, lp=LPSolver(model, backend=backend))
    t_bb = time.perf_counter() - t0
    return root, t_root, res, t_bb


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", default="20,50,100")
    p.add_argument("-k", type=int, default=4)
    p.add_argument("--nodes", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    print(f"{'n':>4} {'form':>8} {'backend':>9} {'root_s':>8} {'root_it':>8} "
          f"{'bb_s':>8} {'nodes':>6} {'us/pivot':>9} {'speedup':>8}")
    for n in [int(v) for v in args.n.split(",")]:
        inst = generate_instance(n, args.k, args.seed)
        for form in (Formulation.FLAMBDA, Formulation.FRMC):
            model = build_relaxed_milp(inst, form).model
            base = None
            for backend in sorted(KERNELS, reverse=True):  # python first
                root, t_root, res, t_bb = time_backend(model, backend, args.nodes)
                per = 1e6 * t_bb / max(res.lp_iterations, 1)
                base = base or t_bb
                print(f"{n:>4} {form.value:>8} {backend:>9} {t_root:>8.3f} {root.lp_iterations:>8d} "
                      f"{t_bb:>8.2f} {res.bb_nodes:>6d} {per:>9.1f} {base / t_bb:>7.2f}x")


if __name__ == "__main__":
    main()
