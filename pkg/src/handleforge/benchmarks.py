"""Timing comparison of the pure and compiled kernel backends.

Run as ``python -m handleforge.benchmarks``.  Each workload runs on the
pure backend and, when the extension is importable, on the compiled one;
the table reports best-of-N wall times and the speedup.  Results are
cross-checked between backends before timing, so this doubles as a
consistency test of the two implementations.
"""

from __future__ import annotations

import argparse
import random
import sys
import time


def _load_backends():
    from . import _kernels_py

    backends = [("pure", _kernels_py)]
    try:
        from . import _kernels

        backends.append(("compiled", _kernels))
    except ImportError:
        pass
    return backends


def _bench_dehornoy(mod, scale):
    rng = random.Random(5)
    gens = (1, 2, 3, -1, -2, -3)
    words = [
        [rng.choice(gens) for _ in range(14)]
        for _ in range(int(8000 * scale))
    ]

    def run():
        return sum(mod.dehornoy_trivial(w, 4) for w in words)

    return run


def _bench_identity_search(mod, scale):
    relator = (1, 2, 1, -2, -1, -2)
    words = [relator * k for k in (1, 1, 2)] * max(1, int(3 * scale))

    def run():
        return sum(
            mod.word_reaches_identity(w, 4, 8, 200000) for w in words
        )

    return run


def _bench_trivial_words(mod, scale):
    max_len = 6 if scale <= 1 else 7

    def run():
        return len(mod.trivial_words(4, max_len))

    return run


def _bench_handle_ball(mod, scale):
    state = mod.pack_handle_state(((2, 4), (6, 2)))
    reps = max(1, int(6 * scale))

    def run():
        n = 0
        for _ in range(reps):
            n = len(mod.handle_ball(state, 6, 9, 200000))
        return n

    return run


WORKLOADS = (
    ("dehornoy reduction", _bench_dehornoy),
    ("identity search", _bench_identity_search),
    ("word enumeration", _bench_trivial_words),
    ("handle reachability", _bench_handle_ball),
)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="handleforge.benchmarks",
        description="compare the pure and compiled kernel backends",
    )
    ap.add_argument("--repeat", type=int, default=3,
                    help="timing repeats, best is kept (default: 3)")
    ap.add_argument("--scale", type=float, default=1.0,
                    help="workload size multiplier (default: 1.0)")
    args = ap.parse_args(argv)

    backends = _load_backends()
    names = " + ".join(name for name, _ in backends)
    print(f"backends: {names}")
    if len(backends) == 1:
        print("compiled extension not importable; timing pure only")

    width = max(len(n) for n, _ in WORKLOADS) + 2
    header = f"{'workload':<{width}}" + "".join(
        f"{name:>12}" for name, _ in backends
    )
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)

    failures = 0
    for wname, factory in WORKLOADS:
        runs = [(bname, factory(mod, args.scale)) for bname, mod in backends]
        results = [run() for _, run in runs]
        if len(set(results)) != 1:
            print(f"{wname:<{width}}  BACKENDS DISAGREE: {results}")
            failures += 1
            continue
        times = []
        for _, run in runs:
            best = min(
                _timed(run) for _ in range(max(1, args.repeat))
            )
            times.append(best)
        row = f"{wname:<{width}}" + "".join(f"{t:>11.4f}s" for t in times)
        if len(times) == 2 and times[1] > 0:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)
    return 1 if failures else 0


def _timed(run) -> float:
    t0 = time.perf_counter()
    run()
    return time.perf_counter() - t0


if __name__ == "__main__":
    sys.exit(main())
