import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from thinphase.tensors import (
    ConductivityError,
    ConductivityTensor,
    InterfaceError,
    InterfaceMesh,
    InterfacePatch,
    decompose_field,
    make_isotropic,
    quadratic_form,
)


def test_isotropic_tensor():
    s = make_isotropic(3.0, 2)
    assert s.dim == 2 and s.is_isotropic
    assert np.allclose(s.inverse().matrix, np.eye(2) / 3)
    with pytest.raises(ConductivityError, match="nonpositive"):
        make_isotropic(-1.0, 3)
    with pytest.raises(ConductivityError):
        make_isotropic(1.0, 4)


def test_tensor_validation():
    with pytest.raises(ConductivityError):
        ConductivityTensor([[1.0, 0.2], [0.3, 1.0]])
    with pytest.raises(ConductivityError):
        ConductivityTensor([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ConductivityError):
        ConductivityTensor([[np.nan, 0.0], [0.0, 1.0]])
    t = ConductivityTensor([[2.0, 0.5], [0.5, 1.0]])
    assert not t.is_isotropic
    assert np.allclose(t.matrix @ t.inverse().matrix, np.eye(2))
    with pytest.raises((ValueError, TypeError)):
        t.matrix[0, 0] = 5.0


def test_coerce_needs_dimension_for_scalars():
    assert ConductivityTensor.coerce(2.0, 3).dim == 3
    with pytest.raises(ConductivityError):
        ConductivityTensor.coerce(2.0)


def test_quadratic_form():
    s = ConductivityTensor([[2.0, 0.5], [0.5, 1.0]])
    assert quadratic_form(s, [1.0, 1.0]) == pytest.approx(4.0)


unit3 = arrays(float, 3, elements=st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 0.1)
vec3 = arrays(float, 3, elements=st.floats(-10, 10))


@settings(max_examples=200, deadline=None)
@given(unit3, vec3)
def test_decomposition_is_orthogonal(n, F):
    n = n / np.linalg.norm(n)
    Ft, Fn = decompose_field(F, n)
    assert np.allclose(Ft + Fn, F, atol=1e-12)
    assert abs(Ft @ n) < 1e-12 * (1 + np.abs(F).max())
    assert np.allclose(np.cross(Fn, n), 0, atol=1e-12)


def test_decomposition_rejects_non_unit_normal():
    with pytest.raises(InterfaceError):
        decompose_field([1.0, 0.0], [2.0, 0.0])


def _two_sided(P=4, jump=0.0):
    n = np.tile([1.0, 0.0], (P, 1))
    Et = np.tile([0.0, 0.7], (P, 1))
    Jn = np.tile([1.3, 0.0], (P, 1))
    a, b = 2.0, 5.0
    Ep, Em = Et + Jn / a, Et + Jn / b
    Em = Em + jump * np.tile([0.0, 1.0], (P, 1))
    return dict(positions=np.zeros((P, 2)) + 0.5, normals=n, weights=np.full(P, 0.25), cell_volume=1.0,
                E_plus=Ep, J_plus=a * Ep, E_minus=Em, J_minus=b * Em)


def test_mesh_continuity_check():
    m = InterfaceMesh(**_two_sided())
    assert max(m.continuity_residual()) < 1e-15
    with pytest.raises(InterfaceError, match="continuity"):
        InterfaceMesh(**_two_sided(jump=0.1))
    loose = InterfaceMesh(**_two_sided(jump=0.1), continuity_rtol=np.inf)
    assert loose.continuity_residual()[0] > 0.05


def test_mesh_validation():
    kw = _two_sided()
    with pytest.raises(InterfaceError):
        InterfaceMesh(**{**kw, "normals": kw["normals"] * 2})
    with pytest.raises(InterfaceError):
        InterfaceMesh(**{**kw, "weights": -kw["weights"]})
    with pytest.raises(InterfaceError):
        InterfaceMesh(**{**kw, "E_plus": kw["E_plus"][:2]})
    with pytest.raises(InterfaceError):
        InterfaceMesh(**kw, thickness=-1.0)


def test_with_fields_derives_one_sided():
    m = InterfaceMesh(**_two_sided())
    one = m.with_fields(E_plus=m.E_plus, J_plus=m.J_plus, side="plus")
    assert one.side == "plus"
    assert np.allclose(one.E_t, [[0.0, 0.7]] * 4)
    assert np.allclose(one.J_n, [[1.3, 0.0]] * 4)


def test_patches_round_trip():
    m = InterfaceMesh(**_two_sided(), thickness=0.1, shift=0.2)
    again = InterfaceMesh.from_patches(m.patches, 1.0)
    assert np.array_equal(again.E_minus, m.E_minus)
    assert isinstance(m[0], InterfacePatch)
    assert m.total_area == pytest.approx(1.0)
    assert m.mean(np.ones(len(m))) == pytest.approx(1.0)


def test_combine_superposes_fields():
    a = InterfaceMesh(**_two_sided())
    b = a.replace(E_plus=2 * a.E_plus, J_plus=2 * a.J_plus, E_minus=2 * a.E_minus, J_minus=2 * a.J_minus)
    c = InterfaceMesh.combine([a, b], [1.0, -0.5])
    assert np.allclose(c.E_plus, 0.0)
