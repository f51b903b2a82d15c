"""Regenerate the packaged depth-calibration table (period vs s).

Experimental conditions: beta = 1, trap 1/262, quench at 45 deg, production
grid.  The result lands in src/gpelattice/data/period_vs_s.csv and is what
the `calibrate` subcommand uses by default.
"""

from pathlib import Path

from gpelattice import Grid, PhysicalParams, RunSetup, scan

S_VALUES = [1.5, 1.8, 2.1, 2.4, 2.7, 2.9, 3.1, 3.21, 3.3, 3.5, 3.8, 4.2, 4.6, 5.0, 5.5, 6.0]


def main():
    setup = RunSetup(phys=PhysicalParams(), grid=Grid.default(), theta0_deg=45.0)
    result = scan("s", S_VALUES, setup, "period")
    out = Path(__file__).resolve().parents[1] / "src" / "gpelattice" / "data" / "period_vs_s.csv"
    with open(out, "w") as fh:
        fh.write("s,period,sigma\n")
        for p in result.points:
            if p.observable is None:
                print(f"s={p.value}: {p.status}")
                continue
            fh.write(f"{p.value!r},{p.observable!r},{p.sigma!r}\n")
            print(f"s={p.value}: period={p.observable:.4f} +- {p.sigma:.4f}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
