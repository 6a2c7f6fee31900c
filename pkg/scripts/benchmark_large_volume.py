"""Time a full analysis of a brain-MRI-sized synthetic field."""
import argparse
import time

from digidiffeo import synth
from digidiffeo.cli import summary_line
from digidiffeo.metrics import analyze


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="160,192,224")
    ap.add_argument("--amplitude", type=float, default=1.5)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    extents = tuple(int(v) for v in args.dims.split(","))

    t0 = time.perf_counter()
    f = synth.random_smooth(extents, seed=args.seed, amplitude=args.amplitude, radius=1)
    t1 = time.perf_counter()
    report, _ = analyze(f, threads=args.threads)
    t2 = time.perf_counter()
    print(summary_line(report))
    print(f"synth {t1 - t0:.2f} s, analyze {t2 - t1:.2f} s ({args.threads} thread(s))")


if __name__ == "__main__":
    main()
