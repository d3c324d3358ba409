"""Named check families with measured errors, for the ``validate`` command.

Each suite returns a :class:`Report`; ``Report.to_json()`` is the machine
readable form and ``Report.summary()`` the human one.  The oracles here are
closed forms independent of the code under test: laminate means and their
derivatives, the nested coated-sphere formula in its rational form, and the
analytic field of a periodic laminate.
"""

from __future__ import annotations

import json
import math
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import assemblage as asm
from .shift import (
    GradedProfile,
    InterphaseStack,
    graded_interphase_delta,
    interface_shift_delta,
    multi_interphase_delta,
    single_interphase_delta,
    telescoped_sum,
)
from .solver import (
    Slab,
    ball_cell,
    checkerboard_cell,
    effective_tensor,
    finite_difference_sensitivity,
    laminate_cell,
    sample_interface_fields,
    solve_periodic,
)
from .tensors import InterfaceMesh

CORE_FRACTION = 27 / 64
R1, R3 = 3.0, 4.0


class UnknownSuiteError(KeyError):
    def __str__(self):
        return self.args[0]


@dataclass
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass
class Report:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name, measured, tolerance, passed=None, detail=""):
        measured = float(measured)
        ok = (measured <= tolerance) if passed is None else bool(passed)
        self.checks.append(Check(name, measured, float(tolerance), ok, detail))

    def to_json(self) -> str:
        return json.dumps({"suite": self.suite, "passed": self.passed,
                           "checks": [asdict(c) for c in self.checks]}, indent=2)

    def summary(self) -> str:
        lines = [f"suite {self.suite}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            tag = "ok  " if c.passed else "FAIL"
            extra = f"  ({c.detail})" if c.detail else ""
            lines.append(f"  {tag} {c.name}: measured {c.measured:.3e}, tolerance {c.tolerance:.1e}{extra}")
        return "\n".join(lines)


def _rel(a, b):
    return abs(a - b) / max(abs(b), np.finfo(float).tiny)


# -- oracles ---------------------------------------------------------------

def coated_sphere_rational(core, coat, f):
    """Coated-sphere conductivity written as one rational function."""
    return coat * (core + 2 * coat + 2 * f * (core - coat)) / (core + 2 * coat - f * (core - coat))


def nested_coated_sphere(s1, s2, s3, t1, t2):
    inner = coated_sphere_rational(s1, s2, t1 / (t1 + t2))
    return coated_sphere_rational(inner, s3, t1 + t2)


def laminate_mesh(sigma_a, sigma_b, f, E0, n=4, lo=0.0):
    """Analytic two-sided fields on the faces of a slab of ``sigma_a``.

    The slab ``lo <= x0 < lo + f`` sits in ``sigma_b`` in a unit cell with
    layers normal to ``x0``; ``E0`` is the mean field.  Returns the mesh
    (slab side is +) and the oracle ``E0 . (d sigma*/d f) E0``.
    """
    E0 = np.asarray(E0, dtype=float)
    d = E0.size
    mesh = Slab(0, lo, lo + f).interface_mesh((1.0,) * d, n)
    s_perp = asm.laminate_sigma_star([sigma_a, sigma_b], [f, 1 - f], "perpendicular")
    Et = E0.copy()
    Et[0] = 0.0
    Jn = np.zeros(d)
    Jn[0] = s_perp * E0[0]
    P = len(mesh)
    Ea, Eb = Et + Jn / sigma_a, Et + Jn / sigma_b
    tile = lambda v: np.tile(v, (P, 1))
    mesh = mesh.with_fields(E_plus=tile(Ea), J_plus=tile(sigma_a * Ea), E_minus=tile(Eb),
                            J_minus=tile(sigma_b * Eb), side="plus", applied_field=E0)
    dperp = s_perp ** 2 * (1 / sigma_b - 1 / sigma_a)
    oracle = (sigma_a - sigma_b) * float(Et @ Et) + dperp * E0[0] ** 2
    return mesh, oracle


def random_tn_mesh(rng, P, d):
    """Random patches with continuous one-sided fields (E_t, J_n)."""
    n = rng.normal(size=(P, d))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    E = rng.normal(size=(P, d))
    Et = E - np.sum(E * n, axis=1, keepdims=True) * n
    Jn = rng.normal(size=(P, 1)) * n
    return InterfaceMesh(rng.uniform(0, 1, (P, d)), n, rng.uniform(0.1, 1, P), 1.0,
                         thickness=rng.uniform(0.01, 0.05, P), E_t=Et, J_n=Jn, side="plus")


# -- suites ----------------------------------------------------------------

def suite_known_values(report):
    for t2, expected in ((0.1, 0.2204), (0.01, 0.0235)):
        h = asm.radius_from_fraction(R1, R3, t2) - R1
        report.add(f"h at theta2={t2}", abs(round(h, 4) - expected), 0.0, passed=round(h, 4) == expected,
                   detail=f"h={h:.6f}")
    ex = asm.exact_sigma_star(1, 5, 10, CORE_FRACTION, 0.1)
    report.add("exact vs rational nested form", _rel(ex, nested_coated_sphere(1, 5, 10, CORE_FRACTION, 0.1)),
               1e-12, detail=f"sigma*={ex:.10f}")
    ref = asm.reference_sigma_star(1, 10, CORE_FRACTION)
    report.add("reference vs rational form", _rel(ref, coated_sphere_rational(1, 10, CORE_FRACTION)), 1e-12)


def _random_params(rng):
    s = 10 ** rng.uniform(-3, 3, 3)
    t1 = rng.uniform(0.01, 0.9)
    r3 = 1.0
    r1 = t1 ** (1 / 3) * r3
    t2 = rng.uniform(0, 1 - t1) * rng.uniform(0, 1)
    return s, t1, t2, r1, r3


def suite_reduction(report, draws=1000, seed=0):
    rng = np.random.default_rng(seed)
    worst_e = worst_a = 0.0
    for _ in range(draws):
        (s1, _, s3), t1, t2, r1, r3 = _random_params(rng)
        h = asm.radius_from_fraction(r1, r3, t2) - r1
        ref = asm.reference_sigma_star(s1, s3, t1)
        worst_e = max(worst_e, _rel(asm.exact_sigma_star(s1, s3, s3, t1, t2), ref))
        worst_a = max(worst_a, _rel(asm.approx_sigma_star(s1, s3, s3, t1, r1, h, warn=False), ref))
    report.add(f"exact(sigma2=sigma3) = reference, {draws} draws", worst_e, 1e-12)
    report.add(f"approx(sigma2=sigma3) = reference, {draws} draws", worst_a, 1e-12)


def assemblage_error(sigma1, sigma2, sigma3, h, r1=R1, r3=R3):
    """``exact - approx`` at interphase thickness ``h`` with ``r1``, ``r3`` fixed."""
    t1 = (r1 / r3) ** 3
    t2 = ((r1 + h) / r3) ** 3 - t1
    return (asm.exact_sigma_star(sigma1, sigma2, sigma3, t1, t2)
            - asm.approx_sigma_star(sigma1, sigma2, sigma3, t1, r1, h, warn=False))


def richardson_ratios(sigma1, sigma3, sigma2s, h0, levels=3, r1=R1, r3=R3):
    out = []
    for s2 in sigma2s:
        errs = [assemblage_error(sigma1, s2, sigma3, h0 / 2 ** k, r1, r3) for k in range(levels + 1)]
        out.append([errs[k] / errs[k + 1] for k in range(levels)])
    return np.array(out)


def worst_relative_error(sigma1, sigma3, theta2, lo, hi, samples=401):
    t1 = CORE_FRACTION
    h = asm.radius_from_fraction(R1, R3, theta2) - R1
    worst = 0.0
    for s2 in np.logspace(math.log10(lo), math.log10(hi), samples):
        ex = asm.exact_sigma_star(sigma1, s2, sigma3, t1, theta2)
        ap = asm.approx_sigma_star(sigma1, s2, sigma3, t1, R1, h, warn=False)
        worst = max(worst, _rel(ap, ex))
    return worst


def suite_richardson(report):
    h0 = 0.02 * R1
    ratios = richardson_ratios(1.0, 10.0, (0.5, 1.0, 2.0, 5.0), h0)
    dev = float(np.max(np.abs(ratios - 4.0)))
    report.add("ratio within [3.5, 4.5] (sigma2 in {0.5,1,2,5}, h/r1<=0.02)", dev, 0.5,
               detail=f"ratios {ratios.min():.4f}..{ratios.max():.4f}")
    report.add("relative error, theta2=0.01, sigma2 in [1,10]", worst_relative_error(1, 10, 0.01, 1, 10), 0.01)
    report.add("relative error, theta2=0.1, sigma2 in [1,10]", worst_relative_error(1, 10, 0.1, 1, 10), 0.05)


def suite_laminate_shift(report, draws=50, seed=1):
    rng = np.random.default_rng(seed)
    for orient in ("perpendicular", "parallel"):
        worst = 0.0
        for _ in range(draws):
            d = int(rng.integers(2, 4))
            a, b = 10 ** rng.uniform(-2, 2, 2)
            f = rng.uniform(0.05, 0.9)
            E0 = np.zeros(d)
            E0[0 if orient == "perpendicular" else int(rng.integers(1, d))] = rng.uniform(0.5, 2)
            mesh, oracle = laminate_mesh(a, b, f, E0, lo=rng.uniform(0, 1 - f))
            # unit shift of both faces grows the slab fraction by 2
            worst = max(worst, _rel(float(interface_shift_delta(mesh, 1.0)), 2 * oracle))
        report.add(f"{orient}: shift = d sigma*/d f, {draws} draws", worst, 1e-10)


def three_phase_laminate_slope(s1, s2, s3, f1, orientation):
    """d/dh of the laminate where a layer of ``s2`` of total fraction ``2h`` replaces phase 1."""
    if orientation == "parallel":
        return 2 * (s2 - s1)
    s = asm.laminate_sigma_star([s1, s3], [f1, 1 - f1], "perpendicular")
    return -2 * s ** 2 * (1 / s2 - 1 / s1)


def suite_interphase_laminate(report, draws=50, seed=2):
    rng = np.random.default_rng(seed)
    for orient in ("perpendicular", "parallel"):
        worst = 0.0
        for _ in range(draws):
            d = int(rng.integers(2, 4))
            s1, s2, s3 = 10 ** rng.uniform(-2, 2, 3)
            f1 = rng.uniform(0.05, 0.9)
            E0 = np.zeros(d)
            E0[0 if orient == "perpendicular" else d - 1] = 1.0
            mesh, _ = laminate_mesh(s1, s3, f1, E0)
            got = float(single_interphase_delta(mesh, s1, s2, thickness=1.0, side="plus"))
            worst = max(worst, _rel(got, three_phase_laminate_slope(s1, s2, s3, f1, orient)))
        report.add(f"{orient}: single interphase = d/dh of 3-phase laminate, {draws} draws", worst, 1e-10)


def suite_formula_family(report, draws=50, seed=3):
    rng = np.random.default_rng(seed)
    w_graded = w_const = w_perm = w_tel = 0.0
    for _ in range(draws):
        d = int(rng.integers(2, 4))
        mesh = random_tn_mesh(rng, 16, d)
        K = int(rng.integers(2, 6))
        sig = list(10 ** rng.uniform(-2, 2, K))
        fr = rng.dirichlet(np.ones(K))
        fr = list(fr / math.fsum(fr))
        s1 = 10 ** rng.uniform(-2, 2)
        stack = InterphaseStack(tuple(sig), tuple(fr))
        multi = float(multi_interphase_delta(mesh, s1, stack))
        graded = float(graded_interphase_delta(mesh, s1, GradedProfile.from_stack(stack)))
        w_graded = max(w_graded, _rel(graded, multi))
        perm = rng.permutation(K)
        pstack = InterphaseStack(tuple(sig[i] for i in perm), tuple(fr[i] for i in perm))
        w_perm = max(w_perm, _rel(float(multi_interphase_delta(mesh, s1, pstack)), multi))
        s2 = sig[0]
        w_const = max(w_const, _rel(float(graded_interphase_delta(mesh, s1, GradedProfile.constant(s2))),
                                    float(single_interphase_delta(mesh, s1, s2))))
        vals = [s1] + sig
        direct = s1 - math.fsum(h * s for h, s in zip(fr, sig))
        tele = float(telescoped_sum(vals, fr))
        w_tel = max(w_tel, abs(tele - direct) / max(abs(s1), max(sig)))
    report.add("multi-layer stack = piecewise-constant graded profile", w_graded, 1e-12)
    report.add("constant profile = single interphase", w_const, 1e-12)
    report.add("stack permutation invariance", w_perm, 1e-12)
    report.add("telescoped sum = direct sum", w_tel, 1e-13)


def limit_errors(sigma1, sigma3, C, theta2s=(1e-2, 1e-3, 1e-4), t1=CORE_FRACTION):
    high, low = [], []
    for t2 in theta2s:
        t3 = 1 - t1 - t2
        H = asm.high_contrast_limit(sigma1, sigma3, t3, C)
        L = asm.low_contrast_limit(sigma1, sigma3, t3, C)
        high.append(_rel(asm.exact_sigma_star(sigma1, C / t2, sigma3, t1, t2), H))
        low.append(_rel(asm.exact_sigma_star(sigma1, C * t2, sigma3, t1, t2), L))
    return np.array(high), np.array(low)


def suite_limits(report):
    for C in (0.1, 1.0, 10.0):
        high, low = limit_errors(1.0, 10.0, C)
        for label, errs in (("high-contrast", high), ("low-contrast", low)):
            mono = bool(np.all(np.diff(errs) < 0))
            report.add(f"{label} C={C}: monotone decrease", float(mono is False), 0.0, passed=mono,
                       detail=", ".join(f"{e:.2e}" for e in errs))
            report.add(f"{label} C={C}: relative gap at theta2=1e-4", errs[-1], 1e-3)


def suite_solver(report, n_lam=256, n_check=512):
    a, b, f = 1.0, 7.0, 0.375
    S = effective_tensor(laminate_cell([a, b], [f, 1 - f], n_lam), tol=1e-12)
    report.add(f"laminate harmonic mean, grid {n_lam}", _rel(S[0, 0], 1 / (f / a + (1 - f) / b)), 1e-8)
    report.add(f"laminate arithmetic mean, grid {n_lam}", _rel(S[1, 1], f * a + (1 - f) * b), 1e-8)
    sa, sb = 1.0, 10.0
    sol = solve_periodic(checkerboard_cell(sa, sb, n_check), [1.0, 0.0], tol=1e-8)
    report.add(f"checkerboard geometric mean, grid {n_check}",
               _rel(sol.effective_column[0], math.sqrt(sa * sb)), 0.02)


def circle_cross_validation(n=256, radius=0.25, sigma_in=5.0, sigma_out=1.0, patches=1024, step_cells=2.0):
    """Shift formula on sampled fields vs. a central difference in the radius."""
    cell = ball_cell(radius, sigma_in, sigma_out, n)
    sol = solve_periodic(cell, [1.0, 0.0], tol=1e-10)
    mesh = sample_interface_fields(sol, cell.level_sets[0].interface_mesh(patches, cell.volume))
    shift = float(interface_shift_delta(mesh, 1.0))
    fd = finite_difference_sensitivity(lambda r: ball_cell(r, sigma_in, sigma_out, n, smoothing="laminate"),
                                       radius, step_cells / n, tol=1e-10)[0, 0]
    return shift, fd


def suite_circle(report):
    shift, fd = circle_cross_validation()
    report.add("disk: shift formula vs finite difference in radius, grid 256", _rel(shift, fd), 0.02,
               detail=f"shift {shift:.5f}, fd {fd:.5f}")


def figure_checks(rows, config):
    """Structural checks on one figure sweep; returns ``(name, measured, tol, passed)`` tuples."""
    from .sweep import wiener_bounds

    t1 = config.core_fraction
    t2 = config.theta2
    t3 = 1 - t1 - t2
    s1, s3 = config.sigma1, config.sigma3
    s2 = np.array([r.sigma2 for r in rows])
    ex = np.array([r.sigma_star_exact for r in rows])
    out = []
    viol = 0.0
    for x, e in zip(s2, ex):
        lo, hi = wiener_bounds([s1, x, s3], [t1, t2, t3])
        viol = max(viol, (lo - e) / lo, (e - hi) / hi)
    out.append(("exact within Wiener bounds", max(viol, 0.0), 1e-12, viol <= 1e-12))
    k = np.flatnonzero(s2 == s3)
    if k.size:
        r = rows[int(k[0])]
        gap = max(_rel(r.sigma_star_approx, r.sigma_star_exact), _rel(r.sigma_star_reference, r.sigma_star_exact))
        out.append(("exact, approx, reference meet at sigma2=sigma3", gap, 1e-10, gap <= 1e-10))
    else:
        out.append(("sigma2=sigma3 sampled", 1.0, 0.0, False))
    H = np.array([r.sigma_star_high for r in rows])
    L = np.array([r.sigma_star_low for r in rows])
    mono = all(np.all(np.diff(c) >= 0) for c in (ex, H, L))
    out.append(("exact and limit curves nondecreasing in sigma2", float(not mono), 0.0, mono))
    gH, gL = np.abs(ex - H) / ex, np.abs(ex - L) / ex
    out.append(("high-contrast curve closer at the top of the range", gH[-1] / gL[-1], 1.0, gH[-1] < gL[-1]))
    out.append(("low-contrast curve closer at the bottom of the range", gL[0] / gH[0], 1.0, gL[0] < gH[0]))
    # the limit curves share the exact curve's end states
    far_hi = asm.exact_sigma_star(s1, 1e12, s3, t1, t2)
    far_lo = asm.exact_sigma_star(s1, 1e-12, s3, t1, t2)
    eH = _rel(asm.high_contrast_limit(s1, s3, t3, t2 * 1e12), far_hi)
    eL = _rel(asm.low_contrast_limit(s1, s3, t3, 1e-12 / t2), far_lo)
    out.append(("high-contrast limit meets exact as sigma2 -> inf", eH, 1e-6, eH <= 1e-6))
    out.append(("low-contrast limit meets exact as sigma2 -> 0", eL, 1e-6, eL <= 1e-6))
    return out


def suite_figures(report, outdir=None):
    from .svgplot import emit_plot
    from .sweep import figure_names, resolve_config, run_sweep

    with tempfile.TemporaryDirectory() as tmp:
        base = Path(outdir or tmp)
        for name in figure_names():
            cfg = resolve_config(name)
            csv = base / f"{name}.csv"
            rows = run_sweep(cfg, csv)
            emit_plot(csv, base / f"{name}.svg", cfg.style)
            for check, measured, tol, ok in figure_checks(rows, cfg):
                report.add(f"{name}: {check}", measured, tol, passed=ok)


SUITES = {
    "known-values": suite_known_values,
    "reduction": suite_reduction,
    "richardson": suite_richardson,
    "laminate-shift": suite_laminate_shift,
    "interphase-laminate": suite_interphase_laminate,
    "formula-family": suite_formula_family,
    "limits": suite_limits,
    "solver": suite_solver,
    "circle": suite_circle,
    "figures": suite_figures,
}


def run_validation(suite: str) -> Report:
    """Run one named suite, or ``all``."""
    if suite == "all":
        report = Report("all")
        for name, fn in SUITES.items():
            sub = Report(name)
            fn(sub)
            for c in sub.checks:
                c.name = f"{name}: {c.name}"
            report.checks.extend(sub.checks)
        return report
    if suite not in SUITES:
        raise UnknownSuiteError(f"unknown suite {suite!r}; available: {', '.join(SUITES)}, all")
    report = Report(suite)
    SUITES[suite](report)
    return report
