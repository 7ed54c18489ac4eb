"""
Volume files and corner tables
==============================

Volumes arrive as a text header plus a raw big-endian payload and are
stored as float32 with a JSON sidecar. A registration result is exchanged
as the eight corners of the fixed volume before and after the transform.
"""

import tempfile
from pathlib import Path

import numpy as np

from tsallisreg.transform import RigidTransform, corner_set_rms, parse_corners, serialize_corners, to_corner_set
from tsallisreg.volume import load_volume, parse_rire_header, read_volume, save_volume

header = parse_rire_header(
    "modality := CT\nrows := 4\ncolumns := 5\nslices := 3\npixel size := 1.25 : 1.25\nslice thickness := 4.0"
)
print(header.dims, header.spacing, header.labels)

# voxel (i, j, k) sits at flat index i + nx * (j + ny * k)
payload = np.arange(60, dtype=">i2").tobytes()
vol = load_volume(header, payload)
print("voxel (1, 2, 0) =", vol.data[0, 2, 1], "at", vol.world(1, 2, 0), "mm")

with tempfile.TemporaryDirectory() as tmp:
    sidecar = save_volume(vol, Path(tmp) / "ct.json")
    print(sidecar.read_text())
    assert read_volume(sidecar) == vol

###############################################################################
# Corner tables: 8 rows of ``x y z new_x new_y new_z``
t = RigidTransform((0.0, 0.0, 10.0), (2.0, 0.0, -1.0))
table = serialize_corners(to_corner_set(t, vol))
print(table)

# comparing two tables needs nothing but the numbers
other = to_corner_set(RigidTransform((0.0, 0.0, 9.0), (2.0, 0.0, -1.0)), vol)
print(f"corner RMS between the two: {corner_set_rms(parse_corners(table), other):.4f} mm")
