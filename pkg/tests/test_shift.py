import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thinphase.assemblage import delta_sigma_first_order, laminate_sigma_star
from thinphase.shift import (
    GradedProfile,
    InterphaseStack,
    assemble_delta_tensor,
    graded_interphase_delta,
    interface_shift_delta,
    interface_shift_delta_tn,
    multi_interface_shift,
    multi_interphase_delta,
    polarization_meshes,
    single_interphase_delta,
    telescoped_sum,
    thickness_gradient,
)
from thinphase.solver import Ball, Slab
from thinphase.tensors import InterfaceError, InterfaceMesh

logc = st.floats(-2, 2)


def laminate_fields(a, b, f, E0, lo=0.0, n=3):
    """Slab of ``a`` (the + phase) on ``[lo, lo + f)`` along x0 inside ``b``."""
    E0 = np.asarray(E0, dtype=float)
    d = E0.size
    mesh = Slab(0, lo, lo + f).interface_mesh((1.0,) * d, n)
    sp = 1 / (f / a + (1 - f) / b)
    Et = E0 * (np.arange(d) != 0)
    Jn = np.eye(d)[0] * sp * E0[0]
    Ea, Eb = Et + Jn / a, Et + Jn / b
    P = len(mesh)
    return mesh.replace(E_plus=np.tile(Ea, (P, 1)), J_plus=np.tile(a * Ea, (P, 1)),
                        E_minus=np.tile(Eb, (P, 1)), J_minus=np.tile(b * Eb, (P, 1)))


def laminate_value(a, b, f, E0):
    E0 = np.asarray(E0, dtype=float)
    par = laminate_sigma_star([a, b], [f, 1 - f], "parallel")
    perp = laminate_sigma_star([a, b], [f, 1 - f], "perpendicular")
    return perp * E0[0] ** 2 + par * float(E0[1:] @ E0[1:])


@settings(max_examples=150, deadline=None)
@given(logc, logc, st.floats(0.05, 0.9), st.floats(0, 0.05), st.integers(2, 3), st.floats(-1, 1), st.floats(-1, 1))
def test_laminate_shift_matches_derivative(la, lb, f, lo, d, e1, e2):
    a, b = 10 ** la, 10 ** lb
    E0 = np.array([1.0, e1, e2][:d])
    mesh = laminate_fields(a, b, f, E0, lo)
    # moving only the upper face by eps changes the slab fraction by eps
    top = mesh.normals[:, 0] > 0
    eps = top.astype(float)
    got = float(interface_shift_delta(mesh, eps))
    step = 1e-6
    fd = (laminate_value(a, b, f + step, E0) - laminate_value(a, b, f - step, E0)) / (2 * step)
    assert got == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_positive_shift_grows_plus_phase():
    # a more conducting slab that grows must raise sigma*
    mesh = laminate_fields(10.0, 1.0, 0.3, [1.0, 1.0])
    assert float(interface_shift_delta(mesh, 1e-3)) > 0
    mesh = laminate_fields(0.1, 1.0, 0.3, [1.0, 1.0])
    assert float(interface_shift_delta(mesh, 1e-3)) < 0


def test_shift_defaults_to_mesh_shift_and_is_linear():
    mesh = laminate_fields(3.0, 1.0, 0.4, [1.0, 0.5]).replace(shift=0.01)
    a = float(interface_shift_delta(mesh))
    assert float(interface_shift_delta(mesh, 0.02)) == pytest.approx(2 * a, rel=1e-14)
    assert float(interface_shift_delta(mesh, -0.01)) == pytest.approx(-a, rel=1e-14)
    assert float(interface_shift_delta(mesh, 0.0)) == 0.0


def test_shift_needs_both_sides():
    mesh = laminate_fields(3.0, 1.0, 0.4, [1.0, 0.5])
    one = mesh.replace(E_minus=None, J_minus=None)
    with pytest.raises(InterfaceError):
        interface_shift_delta(one, 0.1)
    with pytest.raises(InterfaceError):
        interface_shift_delta(mesh)  # no shift given anywhere


@settings(max_examples=100, deadline=None)
@given(logc, logc, st.floats(0.05, 0.9), st.floats(-1, 1), st.sampled_from(["plus", "minus"]))
def test_tn_form_equals_two_sided_isotropic(la, lb, f, e1, side):
    a, b = 10 ** la, 10 ** lb
    mesh = laminate_fields(a, b, f, [0.7, e1])
    two = float(interface_shift_delta(mesh, 0.01))
    tn = float(interface_shift_delta_tn(mesh, a, b, thickness=0.01, side=side))
    assert tn == pytest.approx(two, rel=1e-12, abs=1e-15)


def test_tn_form_with_principal_axis_anisotropy():
    rng = np.random.default_rng(5)
    for _ in range(20):
        sa = np.diag(10 ** rng.uniform(-1, 1, 3))
        sb = np.diag(10 ** rng.uniform(-1, 1, 3))
        n = np.array([1.0, 0.0, 0.0])
        Et = np.array([0.0, *rng.normal(size=2)])
        Jn = rng.normal() * n
        Ea = Et + np.linalg.solve(sa, Jn) * n
        Eb = Et + np.linalg.solve(sb, Jn) * n
        mesh = InterfaceMesh([[0.5, 0.5, 0.5]], [n], [1.0], 1.0, E_plus=[Ea], J_plus=[sa @ Ea],
                             E_minus=[Eb], J_minus=[sb @ Eb])
        two = float(interface_shift_delta(mesh, 1.0))
        tn = float(interface_shift_delta_tn(mesh, sa, sb, thickness=1.0, side="plus"))
        assert tn == pytest.approx(two, rel=1e-12)


def test_multi_interface_shift_is_additive():
    m1 = laminate_fields(3.0, 1.0, 0.4, [1.0, 0.5])
    m2 = laminate_fields(3.0, 1.0, 0.4, [1.0, 0.5], lo=0.1)
    total = float(multi_interface_shift([m1, m2], [0.01, 0.02]))
    parts = float(interface_shift_delta(m1, 0.01)) + float(interface_shift_delta(m2, 0.02))
    assert total == pytest.approx(parts, rel=1e-14)
    with pytest.raises(ValueError):
        multi_interface_shift([m1], [0.1, 0.2])


def coated_sphere_fields(s_core, s_coat, r1, r3):
    """Uniform core field and coating multipole, outer field e_z."""
    # core: A1 z; coating: (A3 r + B3 / r^2) cos(theta); outside: r cos(theta)
    M = np.array([
        [r1, -r1, -1 / r1 ** 2],
        [s_core, -s_coat, 2 * s_coat / r1 ** 3],
        [0.0, 1.0, 1 / r3 ** 3],
    ])
    A1, A3, B3 = np.linalg.solve(M, [0.0, 0.0, 1.0])
    return A1, A3, B3


@pytest.mark.parametrize("s1,s2,s3", [(1.0, 5.0, 10.0), (10.0, 0.5, 1.0), (1.0, 100.0, 3.0), (2.0, 2.0, 7.0)])
def test_sphere_interphase_matches_assemblage_correction(s1, s2, s3):
    r1, r3 = 3.0, 4.0
    A1, _, _ = coated_sphere_fields(s1, s3, r1, r3)
    mesh = Ball((0.0, 0.0, 0.0), r1).interface_mesh(48, 4 / 3 * math.pi * r3 ** 3)
    P = len(mesh)
    E_core = np.tile([0.0, 0.0, A1], (P, 1))
    # the interphase displaces coating next to the core; E_t and J_n are continuous
    mesh = mesh.with_fields(E_plus=E_core, J_plus=s1 * E_core, side="plus")
    h = 0.01
    got = float(single_interphase_delta(mesh, s3, s2, thickness=h))
    want = delta_sigma_first_order(s1, s2, s3, (r1 / r3) ** 3, r1, h)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-15)


def random_mesh(rng, P=12, d=3):
    n = rng.normal(size=(P, d))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    E = rng.normal(size=(P, d))
    Et = E - np.sum(E * n, axis=1, keepdims=True) * n
    Jn = rng.normal(size=(P, 1)) * n
    return InterfaceMesh(rng.uniform(0, 1, (P, d)), n, rng.uniform(0.1, 1, P), 1.0,
                         thickness=rng.uniform(0.01, 0.05, P), E_t=Et, J_n=Jn, side="plus")


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 6))
def test_stack_family_consistency(seed, K):
    rng = np.random.default_rng(seed)
    mesh = random_mesh(rng, d=int(rng.integers(2, 4)))
    sig = tuple(10 ** rng.uniform(-2, 2, K))
    fr = rng.dirichlet(np.ones(K))
    fr = tuple(fr / math.fsum(fr))
    s1 = 10 ** rng.uniform(-2, 2)
    stack = InterphaseStack(sig, fr)
    multi = float(multi_interphase_delta(mesh, s1, stack))
    graded = float(graded_interphase_delta(mesh, s1, GradedProfile.from_stack(stack)))
    assert graded == pytest.approx(multi, rel=1e-12, abs=1e-14)
    perm = rng.permutation(K)
    shuffled = InterphaseStack(tuple(sig[i] for i in perm), tuple(fr[i] for i in perm))
    assert float(multi_interphase_delta(mesh, s1, shuffled)) == pytest.approx(multi, rel=1e-12, abs=1e-14)
    if K == 1:
        assert multi == pytest.approx(float(single_interphase_delta(mesh, s1, sig[0])), rel=1e-14)


def test_stack_of_copies_is_single_layer():
    rng = np.random.default_rng(7)
    mesh = random_mesh(rng)
    one = float(single_interphase_delta(mesh, 2.0, 0.3))
    many = float(multi_interphase_delta(mesh, 2.0, InterphaseStack((0.3,) * 4, (0.1, 0.2, 0.3, 0.4))))
    assert many == pytest.approx(one, rel=1e-14)


def test_interphase_of_phase1_material_is_zero():
    mesh = random_mesh(np.random.default_rng(8))
    assert float(single_interphase_delta(mesh, 2.5, 2.5)) == 0.0


def test_stack_validation():
    with pytest.raises(ValueError):
        InterphaseStack((1.0, 2.0), (0.5, 0.6))
    with pytest.raises(ValueError):
        InterphaseStack((1.0,), (0.5, 0.5))
    with pytest.raises(ValueError):
        InterphaseStack((), ())


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 8))
def test_telescoping_identity(seed, K):
    rng = np.random.default_rng(seed)
    vals = list(10 ** rng.uniform(-2, 2, K + 1))
    fr = rng.dirichlet(np.ones(K))
    fr = list(fr / math.fsum(fr))
    direct = vals[0] - math.fsum(h * v for h, v in zip(fr, vals[1:]))
    assert abs(float(telescoped_sum(vals, fr)) - direct) <= 1e-13 * max(vals)


def test_graded_linear_profile_against_fine_stack():
    mesh = random_mesh(np.random.default_rng(9))
    lin = GradedProfile(z_table=[0.0, 1.0], values=(1.0, 3.0), interpolation="linear")
    # means: (1 + 3) / 2 and ln(3) / 2
    a, b = lin.means(1.0, 3)
    assert np.allclose(a, 2.0 * np.eye(3), rtol=1e-14)
    assert np.allclose(b, math.log(3) / 2 * np.eye(3), rtol=1e-12)
    n = 400
    mids = (np.arange(n) + 0.5) / n
    fine = InterphaseStack(tuple(1 + 2 * mids), (1 / n,) * n)
    g = float(graded_interphase_delta(mesh, 0.5, lin))
    f = float(multi_interphase_delta(mesh, 0.5, fine))
    assert g == pytest.approx(f, rel=1e-5)


def test_graded_rule_and_absolute_depth():
    mesh = random_mesh(np.random.default_rng(10))
    rule = GradedProfile(rule=lambda z: math.exp(z))
    a, b = rule.means(1.0, 2)
    assert a[0, 0] == pytest.approx(math.e - 1, rel=1e-12)
    assert b[0, 0] == pytest.approx(1 - math.exp(-1), rel=1e-12)
    # an absolute-depth table deeper than every patch equals its truncated average
    table = GradedProfile(z_table=[0.0, 0.02, 1.0], values=(4.0, 0.25), relative=False)
    got = float(graded_interphase_delta(mesh, 1.0, table))
    h = mesh.thickness
    parts = []
    for p in range(len(mesh)):
        w = min(h[p], 0.02) / h[p]
        s = w * 4.0 + (1 - w) * 0.25
        r = w / 4.0 + (1 - w) / 0.25
        parts.append(mesh.weights[p] * h[p] * ((s - 1) * mesh.E_t[p] @ mesh.E_t[p]
                                               - (r - 1) * mesh.J_n[p] @ mesh.J_n[p]))
    assert got == pytest.approx(math.fsum(parts), rel=1e-12)


def test_assembled_tensor_for_laminate():
    a, b, f = 4.0, 1.0, 0.3
    meshes = [laminate_fields(a, b, f, e) for e in np.eye(2)]
    M = assemble_delta_tensor(lambda m: interface_shift_delta(m, 1.0), polarization_meshes(meshes))
    perp = laminate_sigma_star([a, b], [f, 1 - f], "perpendicular")
    # both faces move: the slab fraction grows by 2
    want = 2 * np.diag([perp ** 2 * (1 / b - 1 / a), a - b])
    assert np.allclose(M, want, rtol=1e-12, atol=1e-14)


def test_assembly_rejects_rank_deficient_fields():
    mesh = laminate_fields(4.0, 1.0, 0.3, [1.0, 0.0])
    with pytest.raises(ValueError, match="determine"):
        assemble_delta_tensor(lambda m: 1.0, [([1.0, 0.0], mesh), ([2.0, 0.0], mesh)])


def test_thickness_gradient_diagnostic():
    mesh = Ball((0.5, 0.5), 0.25).interface_mesh(64, 1.0)
    phi = np.arctan2(mesh.normals[:, 1], mesh.normals[:, 0])
    flat = thickness_gradient(mesh, np.full(len(mesh), 0.01))
    wavy = thickness_gradient(mesh, 0.01 * (1 + 0.5 * np.cos(phi)))
    assert flat == 0.0
    # |dh/ds| <= 0.005 / R
    assert 0 < wavy <= 0.005 / 0.25 * 1.01
