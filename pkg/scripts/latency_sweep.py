"""Latency and throughput against load, at the cap and above it."""

import argparse

from b5groam.harness import bench_latency


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--loads", default="500,1000,2500,5000")
    ap.add_argument("--cap", type=float, default=100.0)
    ap.add_argument("--rates", default="100,200", help="offered tx/s values to sweep")
    ap.add_argument("--out", default="latency")
    args = ap.parse_args()
    loads = [int(x) for x in args.loads.split(",")]
    for rate in (float(r) for r in args.rates.split(",")):
        report = bench_latency(loads, args.cap, offered_rate=rate)
        path = f"{args.out}_{int(rate)}.csv"
        report.write(path)
        for row in report.table():
            print(f"rate={rate:>6} load={row['load']:>5} median={row['median_latency_s']:.3f}s "
                  f"p95={row['p95_latency_s']:.3f}s tps={row['throughput_tps']:.2f}")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
