"""
Half-circle overlap response
============================

Two renderings of a half disc: one rotated by ``theta``, one clipped to a
vertical strip of half-width ``fov``. Sweeping ``theta`` shows how each
measure responds to misalignment when the second image only sees part of
the object.
"""

import numpy as np

from tsallisreg.measures import MeasureSpec
from tsallisreg.simulation import SimModel, default_fovs, overlap_area, response_curve

# a 128 pixel grid keeps the sweep quick; the library default is 256
size = 128
thetas = np.arange(-90.0, 91.0, 5.0)
specs = [MeasureSpec.parse(m) for m in ("mi", "nmi", "nmit:0.9", "nmit:1.1")]

rows = response_curve(specs, thetas, default_fovs(size), size)

###############################################################################
# Where does each curve peak?
for fov in default_fovs(size):
    print(f"fov half-width {fov:g} px")
    for spec in specs:
        sub = [r for r in rows if r["fov"] == fov and r["measure"] == spec.kind.value and r["q"] == spec.q]
        best = max(sub, key=lambda r: r["value"])
        print(f"  {spec.label:10s} peak at {best['theta_deg']:+5.0f} deg, value {best['value']:.4f}")

###############################################################################
# The shared area shrinks as the half discs rotate apart
for theta in (0, 30, 60, 90):
    print(f"theta {theta:3d}: overlap {overlap_area(SimModel(size, fov=size / 2, theta=theta)):8.1f} px")

###############################################################################
# At perfect alignment every NMIT equals 2, so q only separates the curves
# away from the peak
for theta in (0.0, 10.0):
    sub = [r for r in rows if r["fov"] == size / 2 and r["theta_deg"] == theta and r["measure"] == "nmit"]
    print(theta, [(r["q"], round(r["value"], 4)) for r in sub])
