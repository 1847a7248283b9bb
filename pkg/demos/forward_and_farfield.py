#!/usr/bin/env python3
#
# Forward scattering on a circle and on a kite, and what "far field"
# means quantitatively: the rescaled field at radius R approaches the
# pattern at rate 1/R.

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from impedlab.farfield import asymptotic_defect, compute_far_field, pattern_gap
from impedlab.fields import ImpedanceField, IncidentWave
from impedlab.geometry import build_geometry
from impedlab.modal import solve_modal
from impedlab.nystrom import solve_nystrom_2d

out = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(out, exist_ok=True)

wave = IncidentWave(2.0, np.array([1.0, 0.0]))
imp = ImpedanceField("fourier2d", (np.array([1.0, 0.5]), np.array([0.0])))

# same problem, two solvers: spectral modes on the circle, a boundary
# integral equation on the kite (and on the circle as a cross-check)
circle = build_geometry("circle2d", 256)
kite = build_geometry("kite2d", 512)

_, rep_modal = solve_modal(circle, wave, imp)
_, rep_bie = solve_nystrom_2d(circle, wave, imp)
trace_kite, rep_kite = solve_nystrom_2d(kite, wave, imp)

p_modal = compute_far_field(rep_modal, n_dir=128)
p_bie = compute_far_field(rep_bie, n_dir=128)
p_kite = compute_far_field(rep_kite, n_dir=128)

rel = pattern_gap(p_modal, p_bie) / p_modal.l2_norm()
print(f"circle, modal vs integral-equation far field: rel L2 gap = {rel:.3e}")

# the defect |sqrt(R) e^{-ikR} u_s(R xhat) - u_inf(xhat)| should halve
# when R doubles
for rep, name in ((rep_modal, "circle"), (rep_kite, "kite")):
    pat = compute_far_field(rep, n_dir=32)
    d16 = asymptotic_defect(rep, pat, 16.0)
    d32 = asymptotic_defect(rep, pat, 32.0)
    print(f"{name}: defect(R=16) = {d16:.3e}, defect(R=32) = {d32:.3e}, "
          f"ratio = {d16 / d32:.3f} (expect ~2)")

th = np.arctan2(p_kite.directions[:, 1], p_kite.directions[:, 0])
order = np.argsort(th)

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.plot(kite.nodes[:, 0], kite.nodes[:, 1], "k-", lw=1)
ax1.plot(circle.nodes[:, 0], circle.nodes[:, 1], "b--", lw=1)
ax1.set_aspect("equal")
ax1.set_title("obstacles")
ax2.plot(th[order], np.abs(p_kite.samples[order]), label="kite")
ax2.plot(th[order], np.abs(p_modal.samples[order]), label="circle")
ax2.set_xlabel("observation angle")
ax2.set_ylabel("|far-field pattern|")
ax2.legend()
fig.tight_layout()
fig.savefig(os.path.join(out, "farfield_patterns.png"), dpi=120)
print(f"wrote {out}/farfield_patterns.png")
