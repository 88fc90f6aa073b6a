"""Smoke test for the glspec_py extension.

Build first:  pip install --no-build-isolation ./crates/py
"""
import json
import math
import sys
import tempfile

import glspec_py as g


def check(cond, msg):
    if not cond:
        print(f"FAIL: {msg}")
        sys.exit(1)
    print(f"ok: {msg}")


cloud = g.PointCloud.spiked(80, 40, [4.0, 2.0], seed=7)
check((cloud.n, cloud.p, cloud.d) == (80, 40, 2), "spiked cloud shape")
x = cloud.noisy()
check(len(x) == 80 and len(x[0]) == 40, "noisy matrix is n x p")

w = g.affinity(x, 0.5, float(cloud.p))
check(all(abs(w[i][i] - 1.0) < 1e-12 for i in range(80)), "affinity diagonal is one")
a = g.transition(w)
check(all(abs(sum(row) - 1.0) < 1e-10 for row in a), "transition rows sum to one")
eigs = g.eigenvalues(w)
check(all(eigs[i] >= eigs[i + 1] for i in range(len(eigs) - 1)), "eigenvalues descending")

mp = g.MpMeasure(0.5)
lo, hi = mp.edges()
check(abs(lo - (1 - math.sqrt(0.5)) ** 2) < 1e-12 and abs(hi - (1 + math.sqrt(0.5)) ** 2) < 1e-12, "MP edges")
check(abs(mp.cdf(hi) - 1.0) < 1e-9, "MP cdf reaches one at the upper edge")

with tempfile.TemporaryDirectory() as d:
    path = f"{d}/cloud.bin"
    cloud.write(path)
    back = g.PointCloud.read(path)
    check(back.noisy() == x, "binary cloud round trip")

    s = g.resample_threshold(0.5, 80, reps=50, seed=3)
    check(s > 0, "resampled threshold is positive")
    sel = json.loads(g.select_omega(cloud, s))
    check(0.0 < sel["omega"] < 1.0, "omega selection lies in (0, 1)")

    manifest = json.loads(g.run_experiment("accuracy_low_snr", f"{d}/run", "n = 60\nseeds = 1", fast=True))
    check(manifest["experiment"] == "accuracy_low_snr" and manifest["outputs"], "experiment run writes a manifest")

print(f"glspec_py {g.__version__}: all smoke checks passed")
