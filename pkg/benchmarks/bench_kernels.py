"""Compare the compiled kernels against the numpy fallback.

Runs the micro benchmarks in-process on both modules, then an end-to-end
k = 2 search in a subprocess per backend (the backend is fixed at import).

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from coincide import _fallback, make_perturbed_ball

try:
    from coincide import _kernels
except ImportError:
    _kernels = None

END_TO_END = """
import json, time
from coincide import BACKEND, make_perturbed_ball, search_concurrent_diameters
body = make_perturbed_ball(2, 3, 0.06, 5)
t0 = time.perf_counter()
cert = search_concurrent_diameters(body, 2)
print(json.dumps({"backend": BACKEND, "seconds": time.perf_counter() - t0, "accepted": cert.accepted}))
"""


def kernel_args(d, n, seed=0):
    body = make_perturbed_ball(d, 3, 0.02, seed)
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, d))
    U /= np.linalg.norm(U, axis=1)[:, None]
    degs = body.exps.sum(axis=1)
    return U, body.exps, degs, body.coeffs, body.B


def time_call(fn, number):
    return min(timeit.repeat(fn, number=number, repeat=5)) / number


def micro(repeat):
    rows = []
    for d, n in [(2, 1), (3, 1), (6, 1), (3, 1000), (6, 1000)]:
        U, exps, degs, coeffs, B = kernel_args(d, n)
        row = {"case": f"support_eval d={d} n={n}"}
        for name, mod in (("python", _fallback), ("cython", _kernels)):
            if mod is None:
                continue
            row[name] = time_call(lambda: mod.support_eval(U, exps, degs, coeffs, B, 2), repeat)
        rows.append(row)
    rng = np.random.default_rng(1)
    A, B = rng.standard_normal((2, 200, 3))
    x = rng.standard_normal(3)
    row = {"case": "segment_distances n=200"}
    for name, mod in (("python", _fallback), ("cython", _kernels)):
        if mod is not None:
            row[name] = time_call(lambda: mod.segment_distances(x, A, B), repeat)
    rows.append(row)
    return rows


def end_to_end():
    out = []
    for pure in (False, True):
        env = dict(os.environ)
        env.pop("COINCIDE_PURE_PYTHON", None)
        if pure:
            env["COINCIDE_PURE_PYTHON"] = "1"
        r = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        out.append(json.loads(r.stdout))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    print(f"{'case':32s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for row in micro(args.repeat):
        py, cy = row.get("python"), row.get("cython")
        sp = f"{py / cy:7.1f}x" if cy else "     n/a"
        cy_s = f"{cy * 1e6:10.1f}us" if cy else "         n/a"
        print(f"{row['case']:32s} {py * 1e6:10.1f}us {cy_s} {sp}")
    print()
    for r in end_to_end():
        print(f"search k=2 ({r['backend']:6s}): {r['seconds']:.3f}s accepted={r['accepted']}")


if __name__ == "__main__":
    main()
