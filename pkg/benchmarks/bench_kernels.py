"""Compare the pure-Python and compiled Monte Carlo kernels.

    python3 benchmarks/bench_kernels.py --steps 200000
"""
import argparse
import json

from qhahn.bench import run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200000)
    ap.add_argument("--L", type=int, default=4)
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print the raw report")
    args = ap.parse_args()
    report = run_benchmark(args.steps, args.L, args.N, args.repeat)
    if args.json:
        print(json.dumps(report, indent=2))
        return
    print(f"{'backend':<8} {'seconds':>10} {'steps/s':>14}")
    for name, t in report["timings"].items():
        print(f"{name:<8} {t:>10.4f} {args.steps / t:>14.0f}")
    if "speedup" in report:
        print(f"speedup {report['speedup']:.1f}x, identical streams: {report['identical']}")


if __name__ == "__main__":
    main()
