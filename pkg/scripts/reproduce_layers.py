"""Rerun the L1 vs L2 gas comparison and print deviations from the reference rows."""

import argparse

from b5groam.harness import bench_layers


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--txs", default="60,100,200,500")
    ap.add_argument("--out", default="layers.csv")
    args = ap.parse_args()
    report = bench_layers([int(x) for x in args.txs.split(",")])
    sidecar = report.write(args.out)
    for row in report.table():
        dev = row["l2_deviation_pct"]
        print(f"txs={row['txs']:>4} batches={row['batches']} L2={row['total_l2']:>9} L1={row['total_l1']:>11} "
              f"reduction={row['reduction_pct']:.2f}% dev={'n/a' if dev is None else f'{dev:+.3f}%'}")
    print(f"wrote {args.out} and {sidecar}")


if __name__ == "__main__":
    main()
