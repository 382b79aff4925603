#!/usr/bin/env python3
"""Compare the compiled gate kernel against the pure-numpy fallback.

The kernel backend is chosen when toffsim is imported, so each timing runs
in a child interpreter with TOFFSIM_KERNEL set accordingly.  The workload
applies single- and two-qubit gates across every position of a statevector,
which is exactly the hot loop of the gadget and readout simulations.

Usage: python3 benchmarks/bench_gate_kernels.py [--qubits N] [--repeats R]
"""

import argparse
import json
import os
import subprocess
import sys

_CHILD = r"""
import json, sys, time
import numpy as np
from toffsim import kernel_backend
from toffsim.core import QuantumState, apply_gate

n = int(sys.argv[1])
repeats = int(sys.argv[2])
labels = tuple(f"q{i}" for i in range(n))
rng = np.random.default_rng(0)
vec = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
state = QuantumState.from_vector(labels, vec)

def workload(s):
    for i in range(n):
        s = apply_gate(s, "H", labels[i])
    for i in range(n - 1):
        s = apply_gate(s, "CNOT", labels[i], labels[i + 1])
    for i in range(n - 2):
        s = apply_gate(s, "TOFFOLI", labels[i], labels[i + 1], labels[i + 2])
    return s

workload(state)  # warm-up
best = float("inf")
for _ in range(repeats):
    t0 = time.perf_counter()
    workload(state)
    best = min(best, time.perf_counter() - t0)
gates = n + (n - 1) + (n - 2)
print(json.dumps({"backend": kernel_backend, "seconds": best,
                  "per_gate_us": best / gates * 1e6}))
"""


def run_backend(env_value, qubits, repeats):
    env = dict(os.environ)
    if env_value is None:
        env.pop("TOFFSIM_KERNEL", None)
    else:
        env["TOFFSIM_KERNEL"] = env_value
    proc = subprocess.run(
        [sys.executable, "-c", _CHILD, str(qubits), str(repeats)],
        capture_output=True, text=True, env=env, check=True)
    return json.loads(proc.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--qubits", type=int, default=12,
                        help="statevector size in qubits (default 12)")
    parser.add_argument("--repeats", type=int, default=20,
                        help="timing repetitions, best is kept (default 20)")
    args = parser.parse_args()

    results = [run_backend("python", args.qubits, args.repeats),
               run_backend(None, args.qubits, args.repeats)]
    print(f"{args.qubits}-qubit statevector, best of {args.repeats} runs:")
    for res in results:
        print(f"  {res['backend']:>7}: {res['seconds'] * 1e3:8.2f} ms/sweep "
              f"({res['per_gate_us']:7.1f} us/gate)")
    if results[1]["backend"] == results[0]["backend"]:
        print("  (compiled kernel unavailable; both runs used the fallback)")
    else:
        speedup = results[0]["seconds"] / results[1]["seconds"]
        print(f"  speedup: {speedup:.2f}x")


if __name__ == "__main__":
    main()
