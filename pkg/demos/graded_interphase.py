"""A linearly graded coating on a laminate slab.

The coating conductivity rises from 1 at the slab face to 3 at its outer
edge.  Only two averages of the profile matter: the mean conductivity for
fields along the interface and the mean resistivity for currents across
it.  Stacks of more and more uniform sublayers approach the graded answer.

    python3 demos/graded_interphase.py
"""

import numpy as np

from thinphase import GradedProfile, InterphaseStack, graded_interphase_delta, multi_interphase_delta
from thinphase.validation import laminate_mesh

s_slab, s_host, f = 0.5, 4.0, 0.4
profile = GradedProfile(z_table=[0.0, 1.0], values=(1.0, 3.0), interpolation="linear")
mean, mean_inv = profile.means(1.0, 2)
print(f"profile means: sigma {mean[0, 0]:.6f}, 1/sigma {mean_inv[0, 0]:.6f} (ln 3 / 2 = {np.log(3) / 2:.6f})")

for label, E0 in (("across", [1.0, 0.0]), ("along", [0.0, 1.0])):
    mesh, _ = laminate_mesh(s_slab, s_host, f, E0)
    graded = float(graded_interphase_delta(mesh, s_slab, profile, thickness=1.0, side="plus"))
    print(f"\nfield {label} the layers: graded slope {graded:+.8f}")
    for n in (1, 4, 16, 64):
        mids = (np.arange(n) + 0.5) / n
        stack = InterphaseStack(tuple(1.0 + 2.0 * mids), (1.0 / n,) * n)
        stacked = float(multi_interphase_delta(mesh, s_slab, stack, thickness=1.0, side="plus"))
        print(f"  {n:3d} sublayers: {stacked:+.8f}   diff {stacked - graded:+.2e}")
