"""Thickening a laminate slab: shift formula against the closed form.

A slab of conductivity a and fraction f sits in b.  Pushing both faces of
the slab outward by eps raises f by 2 eps, so the interface integral with
unit normal speed should equal twice d sigma*/d f.  For a laminate both
sides are explicit, which makes this an exact check.

    python3 demos/laminate_shift.py
"""

from thinphase import interface_shift_delta, laminate_sigma_star
from thinphase.validation import laminate_mesh

a, b, f = 6.0, 1.5, 0.3
eps = 1e-6

for label, E0, orient in (("across the layers", [1.0, 0.0], "perpendicular"),
                          ("along the layers", [0.0, 1.0], "parallel")):
    mesh, _ = laminate_mesh(a, b, f, E0)
    shift = float(interface_shift_delta(mesh, 1.0))
    fd = (laminate_sigma_star([a, b], [f + eps, 1 - f - eps], orient)
          - laminate_sigma_star([a, b], [f - eps, 1 - f + eps], orient)) / (2 * eps)
    print(f"{label:>18}: shift formula {shift:+.10f}   2 * d/df {2 * fd:+.10f}")
