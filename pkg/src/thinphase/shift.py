"""First-order changes of the effective conductivity from moving interfaces.

Conventions used throughout:

* A mesh normal points from the + side to the - side of its interface.  A
  positive shift moves a patch along its normal, so the + phase grows.
* Every ``*_delta`` function returns ``<E> . dsigma* <E>`` for the applied
  field the sampled fields were computed with.
* Interphase corrections give the change caused by *inserting* the layer:
  the interphase material replaces a sheet of phase 1 of thickness ``h``
  next to the reference interface, so ``sigma* ~ sigma*_0 + delta``.
  Fields come from the reference composite, on the phase-1 side by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .quadrature import integrate
from .tensors import ConductivityTensor, InterfaceError, InterfaceMesh, decompose_field

STACK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DeltaSigmaResult:
    """Energy change ``<E> . dsigma* <E>`` plus optional assembled tensor."""

    quadratic_form_value: float
    applied_field: Optional[np.ndarray] = None
    tensor: Optional[np.ndarray] = None
    thickness_gradient: Optional[float] = None

    def __float__(self):
        return float(self.quadratic_form_value)


@dataclass(frozen=True, eq=False)
class InterphaseStack:
    """Interphase layers from the phase-1 side outward.

    ``fractions`` are the layer thicknesses as fractions of the local
    total thickness; they must sum to one.
    """

    conductivities: tuple
    fractions: tuple

    def __post_init__(self):
        sig = list(self.conductivities)
        fr = [float(f) for f in self.fractions]
        if not sig:
            raise ValueError("interphase stack is empty")
        if len(sig) != len(fr):
            raise ValueError(f"{len(sig)} conductivities but {len(fr)} fractions")
        if any(f < 0 for f in fr):
            raise ValueError("stack fractions must be nonnegative")
        if abs(math.fsum(fr) - 1.0) > STACK_TOL:
            raise ValueError(f"stack fractions must sum to 1, got {math.fsum(fr)!r}")
        dims = {s.dim for s in sig if isinstance(s, ConductivityTensor)}
        if len(dims) > 1:
            raise ValueError("stack mixes tensor dimensions")
        dim = next(iter(dims), None)
        tensors = tuple(ConductivityTensor.coerce(s, dim) if dim else s for s in sig)
        object.__setattr__(self, "conductivities", tensors)
        object.__setattr__(self, "fractions", tuple(fr))

    def tensors(self, dim: int):
        return [ConductivityTensor.coerce(s, dim) for s in self.conductivities]

    def means(self, dim: int):
        """Fraction-weighted mean of the conductivities and of their inverses."""
        ts = self.tensors(dim)
        arith = _weighted_sum(self.fractions, [t.matrix for t in ts])
        inv = _weighted_sum(self.fractions, [t.inverse().matrix for t in ts])
        return arith, inv


def _weighted_sum(weights, mats):
    # entrywise exactly rounded sums: independent of layer order
    stack = np.array([w * m for w, m in zip(weights, mats)])
    out = np.empty(stack.shape[1:])
    for idx in np.ndindex(out.shape):
        out[idx] = math.fsum(stack[(slice(None),) + idx].tolist())
    return out


def telescoped_sum(values: Sequence, fractions: Sequence[float]):
    """Sum over moved interfaces of ``(sum_{i>k} h_i) (v_k - v_{k+1})``.

    ``values`` is ``[v_1, v_2, ..., v_K]`` (phase 1 then the layers),
    ``fractions`` is ``[h_2, ..., h_K]``.  With fractions summing to one
    this equals ``v_1 - sum_k h_k v_k``.
    """
    vals = [np.asarray(v, dtype=float) for v in values]
    if len(vals) != len(fractions) + 1:
        raise ValueError("need one more value than fractions")
    K = len(vals)
    total = np.zeros_like(vals[0])
    for k in range(K - 1):
        tail = math.fsum(fractions[k:])
        total = total + tail * (vals[k] - vals[k + 1])
    return total


@dataclass(frozen=True, eq=False)
class GradedProfile:
    """Through-thickness conductivity ``sigma(z)`` of a graded interphase.

    Either ``rule`` (a callable ``z -> tensor/scalar``) or a sampled table
    ``(z_table, values)`` with ``interpolation`` ``'constant'`` (value i holds
    on ``[z_i, z_{i+1})``) or ``'linear'``.  With ``relative=True`` the depth
    coordinate is ``z/h`` in ``[0, 1]``; otherwise ``z`` is absolute and each
    patch averages over ``[0, h(x)]``.
    """

    rule: Optional[Callable] = None
    z_table: Optional[np.ndarray] = None
    values: Optional[tuple] = None
    interpolation: str = "constant"
    relative: bool = True
    breakpoints: tuple = ()
    rtol: float = 1e-10

    def __post_init__(self):
        if (self.rule is None) == (self.z_table is None):
            raise ValueError("give either a rule or a sampled table")
        if self.z_table is not None:
            z = np.asarray(self.z_table, dtype=float)
            if z.ndim != 1 or np.any(np.diff(z) <= 0) or z[0] != 0.0:
                raise ValueError("table depths must start at 0 and increase strictly")
            n_expected = z.size - 1 if self.interpolation == "constant" else z.size
            if self.interpolation not in ("constant", "linear"):
                raise ValueError(f"unknown interpolation {self.interpolation!r}")
            if len(self.values) != n_expected:
                raise ValueError(f"{self.interpolation} table needs {n_expected} values, got {len(self.values)}")
            object.__setattr__(self, "z_table", z)
            object.__setattr__(self, "values", tuple(self.values))

    @classmethod
    def constant(cls, sigma) -> "GradedProfile":
        return cls(z_table=[0.0, 1.0], values=(sigma,), interpolation="constant", relative=True)

    @classmethod
    def from_stack(cls, stack: InterphaseStack) -> "GradedProfile":
        """Piecewise-constant profile with the layers of ``stack``."""
        edges = [0.0]
        for f in stack.fractions:
            edges.append(edges[-1] + f)
        keep = [i for i, f in enumerate(stack.fractions) if f > 0]
        z = [0.0] + [edges[i + 1] for i in keep]
        z[-1] = 1.0
        return cls(z_table=z, values=tuple(stack.conductivities[i] for i in keep),
                   interpolation="constant", relative=True)

    def _matrix(self, s, dim):
        return ConductivityTensor.coerce(s, dim).matrix

    def _matrices(self, dim):
        return [self._matrix(v, dim) for v in self.values]

    def means(self, h: float, dim: int):
        """``(1/h) int_0^h sigma dz`` and ``(1/h) int_0^h sigma^-1 dz``."""
        span = 1.0 if self.relative else float(h)
        if span <= 0:
            raise ValueError("averages over a zero-thickness layer are undefined")
        if self.rule is not None:
            def sig(z):
                return self._matrix(self.rule(z), dim)

            def inv(z):
                return np.linalg.inv(sig(z))

            a, _ = integrate(sig, 0.0, span, self.breakpoints, rtol=self.rtol)
            b, _ = integrate(inv, 0.0, span, self.breakpoints, rtol=self.rtol)
            return a / span, b / span
        z = self.z_table
        if span > z[-1] * (1 + 1e-12):
            raise ValueError(f"profile table covers depth {z[-1]}, layer needs {span}")
        mats = self._matrices(dim)
        if self.interpolation == "constant":
            lo = np.minimum(z[:-1], span)
            hi = np.minimum(z[1:], span)
            w = (hi - lo) / span
            return (_weighted_sum(w, mats), _weighted_sum(w, [np.linalg.inv(m) for m in mats]))
        # piecewise linear: sigma integrates exactly, the inverse panel by panel
        arith = np.zeros((dim, dim))
        inv = np.zeros((dim, dim))
        for i in range(z.size - 1):
            z0, z1 = z[i], min(z[i + 1], span)
            if z1 <= z0:
                break
            m0 = mats[i]
            slope = (mats[i + 1] - mats[i]) / (z[i + 1] - z[i])
            m1 = m0 + slope * (z1 - z0)
            arith = arith + 0.5 * (z1 - z0) * (m0 + m1)
            part, _ = integrate(lambda t: np.linalg.inv(m0 + slope * (t - z0)), z0, z1, rtol=self.rtol)
            inv = inv + part
        return arith / span, inv / span


# -- helpers ---------------------------------------------------------------

def _per_patch(value, mesh: InterfaceMesh, name: str) -> np.ndarray:
    if value is None:
        value = getattr(mesh, name)
        if value is None:
            raise InterfaceError(f"mesh carries no {name}; pass it explicitly")
    arr = np.broadcast_to(np.asarray(value, dtype=float), (len(mesh),))
    if not np.all(np.isfinite(arr)):
        raise InterfaceError(f"non-finite {name}")
    return arr


def _tn_fields(mesh: InterfaceMesh, side: Optional[str]):
    """(E_t, J_n) on the requested side; falls back to the declared one."""
    if side is None and mesh.has_one_sided:
        return mesh.E_t, mesh.J_n
    if side is None:
        side = "plus" if mesh.E_plus is not None else "minus"
    if side == mesh.side and mesh.has_one_sided:
        return mesh.E_t, mesh.J_n
    E = mesh.E_plus if side == "plus" else mesh.E_minus
    J = mesh.J_plus if side == "plus" else mesh.J_minus
    if E is None or J is None:
        raise InterfaceError(f"no fields sampled on the {side} side")
    Et, _ = decompose_field(E, mesh.normals)
    _, Jn = decompose_field(J, mesh.normals)
    return Et, Jn


def _quad(mats, v):
    """Per-patch ``v_p . M v_p`` for one matrix ``M`` and stacked ``v``."""
    return np.einsum("pi,ij,pj->p", v, mats, v)


def thickness_gradient(mesh: InterfaceMesh, thickness=None) -> float:
    """Largest |dh/ds| between nearest-neighbour patches (laminarity diagnostic)."""
    h = _per_patch(thickness, mesh, "thickness")
    if len(mesh) < 2 or np.all(h == h[0]):
        return 0.0
    from scipy.spatial import cKDTree

    tree = cKDTree(mesh.positions)
    dist, idx = tree.query(mesh.positions, k=2)
    d = dist[:, 1]
    ok = d > 0
    return float(np.max(np.abs(h[idx[ok, 1]] - h[ok]) / d[ok])) if np.any(ok) else 0.0


def _result(mesh, integrand, thickness=None):
    grad = None if thickness is None else thickness_gradient(mesh, thickness)
    return DeltaSigmaResult(mesh.mean(integrand), mesh.applied_field, thickness_gradient=grad)


# -- shift formulas --------------------------------------------------------

def interface_shift_delta(mesh: InterfaceMesh, epsilon_gamma=None) -> DeltaSigmaResult:
    """Energy change from moving each patch by ``epsilon_gamma`` along its normal.

    Integrand ``eps_gamma * (E- . J+  -  E+ . J-)``; needs fields on both
    sides.  ``epsilon_gamma`` defaults to ``mesh.shift``.
    """
    if not mesh.has_two_sided:
        raise InterfaceError("interface shift needs E and J on both sides of every patch")
    t = _per_patch(epsilon_gamma, mesh, "shift")
    jump = np.sum(mesh.E_minus * mesh.J_plus, axis=1) - np.sum(mesh.E_plus * mesh.J_minus, axis=1)
    return _result(mesh, t * jump)


def interface_shift_delta_tn(mesh: InterfaceMesh, sigma_plus, sigma_minus, thickness=None,
                             side: Optional[str] = None) -> DeltaSigmaResult:
    """One-sided form of :func:`interface_shift_delta` with shift ``thickness``.

    Integrand ``h [(s+ - s-) E_t . E_t - (s+^-1 - s-^-1) J_n . J_n]`` built
    from the continuous quantities E_t and J_n, so either side may be used.
    The two forms agree when the normal is a principal axis of both
    tensors, in particular for isotropic phases.
    """
    d = mesh.dim
    sp = ConductivityTensor.coerce(sigma_plus, d)
    sm = ConductivityTensor.coerce(sigma_minus, d)
    if side is None and not mesh.has_one_sided:
        raise InterfaceError("declare which side the (E_t, J_n) samples come from")
    h = _per_patch(thickness, mesh, "thickness")
    Et, Jn = _tn_fields(mesh, side)
    dsig = sp.matrix - sm.matrix
    dres = sp.inverse().matrix - sm.inverse().matrix
    return _result(mesh, h * (_quad(dsig, Et) - _quad(dres, Jn)))


def multi_interface_shift(meshes: Sequence[InterfaceMesh], shifts: Sequence) -> DeltaSigmaResult:
    """Simultaneous shift of several interfaces: the sum of single shifts."""
    meshes, shifts = list(meshes), list(shifts)
    if len(meshes) != len(shifts):
        raise ValueError(f"{len(meshes)} meshes but {len(shifts)} shift arrays")
    if not meshes:
        raise ValueError("no interfaces given")
    vols = {m.cell_volume for m in meshes}
    if len(vols) != 1:
        raise InterfaceError("interfaces belong to cells of different volume")
    parts = []
    for m, t in zip(meshes, shifts):
        t = _per_patch(t, m, "shift")
        jump = np.sum(m.E_minus * m.J_plus, axis=1) - np.sum(m.E_plus * m.J_minus, axis=1) \
            if m.has_two_sided else None
        if jump is None:
            raise InterfaceError("interface shift needs E and J on both sides of every patch")
        parts.extend((m.weights * t * jump).tolist())
    return DeltaSigmaResult(math.fsum(parts) / vols.pop(), meshes[0].applied_field)


def _interphase(mesh, sigma1, mean_sigma, mean_inverse, h, side):
    d = mesh.dim
    s1 = ConductivityTensor.coerce(sigma1, d)
    Et, Jn = _tn_fields(mesh, side)
    integrand = h * (_quad(mean_sigma - s1.matrix, Et) - _quad(mean_inverse - s1.inverse().matrix, Jn))
    return _result(mesh, integrand, thickness=h)


def single_interphase_delta(mesh: InterfaceMesh, sigma1, sigma2, thickness=None,
                            side: Optional[str] = None) -> DeltaSigmaResult:
    """Change from inserting a layer of ``sigma2`` (thickness ``h(x)``) into phase 1."""
    h = _per_patch(thickness, mesh, "thickness")
    s2 = ConductivityTensor.coerce(sigma2, mesh.dim)
    return _interphase(mesh, sigma1, s2.matrix, s2.inverse().matrix, h, side)


def multi_interphase_delta(mesh: InterfaceMesh, sigma1, stack: InterphaseStack, thickness=None,
                           side: Optional[str] = None) -> DeltaSigmaResult:
    """Change from inserting a stack of layers; only the stack means enter.

    The tangential term uses the thickness-weighted mean conductivity, the
    normal term the weighted mean of the inverses.
    """
    if not isinstance(stack, InterphaseStack):
        raise TypeError("stack must be an InterphaseStack")
    h = _per_patch(thickness, mesh, "thickness")
    arith, inv = stack.means(mesh.dim)
    return _interphase(mesh, sigma1, arith, inv, h, side)


def graded_interphase_delta(mesh: InterfaceMesh, sigma1, profile: GradedProfile, thickness=None,
                            side: Optional[str] = None) -> DeltaSigmaResult:
    """Change from inserting a graded layer with through-thickness profile."""
    h = _per_patch(thickness, mesh, "thickness")
    d = mesh.dim
    s1 = ConductivityTensor.coerce(sigma1, d)
    Et, Jn = _tn_fields(mesh, side)
    if profile.relative:
        arith, inv = profile.means(1.0, d)
        integrand = h * (_quad(arith - s1.matrix, Et) - _quad(inv - s1.inverse().matrix, Jn))
    else:
        integrand = np.zeros(len(mesh))
        cache = {}
        for p, hp in enumerate(h):
            if hp == 0.0:
                continue
            if hp not in cache:
                cache[hp] = profile.means(hp, d)
            arith, inv = cache[hp]
            integrand[p] = hp * (Et[p] @ (arith - s1.matrix) @ Et[p] - Jn[p] @ (inv - s1.inverse().matrix) @ Jn[p])
    return _result(mesh, integrand, thickness=h)


# -- tensor assembly -------------------------------------------------------

def polarization_fields(d: int):
    """Unit vectors and their pairwise sums: enough to recover a symmetric form."""
    eye = np.eye(d)
    vecs = [eye[i] for i in range(d)]
    vecs += [eye[i] + eye[j] for i in range(d) for j in range(i + 1, d)]
    return vecs


def polarization_meshes(meshes: Sequence[InterfaceMesh]):
    """``(E0, mesh)`` pairs for unit fields and pairwise sums, by superposition.

    ``meshes[i]`` must hold the samples for applied field ``e_i``.
    """
    d = len(meshes)
    out = [(np.eye(d)[i], meshes[i]) for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            out.append((np.eye(d)[i] + np.eye(d)[j], InterfaceMesh.combine([meshes[i], meshes[j]], [1.0, 1.0])))
    return out


def assemble_delta_tensor(evaluator: Callable, field_sets: Iterable, rtol: float = 1e-10) -> np.ndarray:
    """Recover the symmetric matrix ``M`` with ``E0 . M E0 = evaluator(payload)``.

    ``field_sets`` yields ``(E0, payload)`` pairs.  Needs at least
    ``d(d+1)/2`` applied fields spanning the symmetric forms.
    """
    pairs = list(field_sets)
    if not pairs:
        raise ValueError("no applied fields given")
    vecs = [np.asarray(v, dtype=float) for v, _ in pairs]
    d = vecs[0].shape[0]
    idx = [(i, j) for i in range(d) for j in range(i, d)]
    A = np.array([[v[i] * v[j] * (1.0 if i == j else 2.0) for i, j in idx] for v in vecs])
    if np.linalg.matrix_rank(A) < len(idx):
        raise ValueError(f"applied fields do not determine a symmetric {d}x{d} form; "
                         f"use unit vectors and pairwise sums")
    q = np.array([float(evaluator(payload)) for _, payload in pairs])
    coef, *_ = np.linalg.lstsq(A, q, rcond=None)
    M = np.zeros((d, d))
    for c, (i, j) in zip(coef, idx):
        M[i, j] = M[j, i] = c
    resid = np.abs(A @ coef - q)
    scale = max(np.max(np.abs(q)), np.finfo(float).tiny)
    if np.max(resid) > rtol * scale:
        raise ValueError(f"values are not a quadratic form of the applied field "
                         f"(residual {np.max(resid):.2e})")
    return M
