"""Show how the central difference misses a grossly displaced point.

Moves the centre of a 5x5 grid by (1.5, 1.5) and prints every determinant at
that point next to the aggregate statistics.
"""
from digidiffeo import synth
from digidiffeo.jacobian import CENTRAL, all_variants, det_at
from digidiffeo.metrics import nda


def main():
    f = synth.checkerboard_fixture()
    p = (2, 2)
    for v in all_variants(2):
        print(f"{v.name:>8s}  {det_at(f, p, v):+.3f}")
    report, severity = nda(f)
    print()
    print(f"central det <= 0 at {report.central_nonpositive_count} points")
    print(f"any det <= 0 at     {report.any_nonpositive_count} points")
    print(f"NDA                 {report.nd_measure:.3f}")
    print(f"first violation     {report.first_violation.point} {report.first_violation.variant.name} "
          f"{report.first_violation.value:+.3f}")
    print()
    print("severity map (x down, y across):")
    for row in severity.values:
        print("  " + " ".join(f"{v:4.2f}" for v in row))
    assert det_at(f, p, CENTRAL) > 0 and not report.is_digital_diffeomorphism


if __name__ == "__main__":
    main()
