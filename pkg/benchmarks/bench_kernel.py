#!/usr/bin/env python3
"""Benchmark the two stepper kernels (compiled extension vs pure Python).

The workload is a nested counted loop lowered to the flat machine form, the
same hot path the exhaustive co-simulation sweep exercises. Run:

    python benchmarks/bench_kernel.py [--outer 150] [--inner 150] [--repeat 5]
"""

import argparse
import time
from array import array

from hlsinterp import kernel, parse
from hlsinterp.fsm import flatten, translate
from hlsinterp.kernel import STATUS_DONE, run_flat_py


def workload(outer: int, inner: int):
    src = f"""
reg i: 16;
reg j: 16;
reg acc: 32;
while (i < {outer}) {{
  j = 0;
  while (j < {inner}) {{
    acc = acc + i * j;
    j = j + 1;
  }}
  i = i + 1;
}}
"""
    g = parse(src)
    widths = {n: d.width_bits for n, d in g.storage.items()}
    return flatten(translate(g), widths)


def bench_python(flat, fuel, repeat):
    best = float("inf")
    steps = 0
    for _ in range(repeat):
        values = [0] * len(flat.slot_names)
        t0 = time.perf_counter()
        status, steps, _, _, _ = run_flat_py(flat, values, fuel, 0, False)
        best = min(best, time.perf_counter() - t0)
        assert status == STATUS_DONE
    return steps, best


def bench_compiled(flat, fuel, repeat):
    ops, tags, code, off, consts, widths = flat.buffers()
    best = float("inf")
    steps = 0
    for _ in range(repeat):
        values = array("q", [0] * len(flat.slot_names))
        t0 = time.perf_counter()
        status, steps, _, _ = kernel._fsmcore.run_flat(
            ops, tags, code, off, consts, widths, values, fuel, flat.entry_pc,
            0, False)
        best = min(best, time.perf_counter() - t0)
        assert status == STATUS_DONE
    return steps, best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outer", type=int, default=150)
    ap.add_argument("--inner", type=int, default=150)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    flat = workload(args.outer, args.inner)
    fuel = 100_000_000
    print(f"workload: {args.outer} x {args.inner} nested counted loops, "
          f"{len(flat.ops)} flat ops")

    steps, t_py = bench_python(flat, fuel, args.repeat)
    print(f"pure-python : {steps:>10} steps  {t_py * 1e3:8.1f} ms  "
          f"{steps / t_py / 1e6:6.2f} Msteps/s")

    if kernel.HAVE_COMPILED:
        steps_c, t_c = bench_compiled(flat, fuel, args.repeat)
        assert steps_c == steps, "kernels disagree on step count"
        print(f"compiled    : {steps_c:>10} steps  {t_c * 1e3:8.1f} ms  "
              f"{steps_c / t_c / 1e6:6.2f} Msteps/s")
        print(f"speedup     : {t_py / t_c:.1f}x")
    else:
        print("compiled    : not built (pip install -e . with Cython + a C "
              "compiler, or python setup.py build_ext --inplace)")


if __name__ == "__main__":
    main()
