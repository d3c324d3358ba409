"""Conductivity tensors, field decomposition and discretized interfaces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


class ConductivityError(ValueError):
    """Raised for non-symmetric, non-positive-definite or malformed tensors."""


class InterfaceError(ValueError):
    """Raised for malformed interface discretizations or field samples."""


NORMAL_TOL = 1e-12
SPD_RTOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ConductivityTensor:
    """Symmetric positive-definite d x d conductivity.

    Build with ``ConductivityTensor(matrix)`` or :func:`make_isotropic`.
    The stored matrix is read-only.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (1, 2, 3):
            raise ConductivityError(f"expected a square matrix of size 1..3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ConductivityError("non-finite conductivity entries")
        if not np.array_equal(m, m.T):
            raise ConductivityError("conductivity tensor is not symmetric")
        ev = np.linalg.eigvalsh(m)
        if ev[0] <= 0 or ev[0] <= SPD_RTOL * ev[-1]:
            raise ConductivityError(
                f"nonpositive conductivity: smallest eigenvalue {ev[0]:.3e}, largest {ev[-1]:.3e}")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def coerce(cls, value, dim: Optional[int] = None) -> "ConductivityTensor":
        """Accept a tensor, a matrix or a positive scalar (needs ``dim``)."""
        if isinstance(value, cls):
            if dim is not None and value.dim != dim:
                raise ConductivityError(f"tensor of dimension {value.dim}, expected {dim}")
            return value
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 0:
            if dim is None:
                raise ConductivityError("scalar conductivity needs an explicit dimension")
            return make_isotropic(float(arr), dim)
        t = cls(arr)
        if dim is not None and t.dim != dim:
            raise ConductivityError(f"tensor of dimension {t.dim}, expected {dim}")
        return t

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_isotropic(self) -> bool:
        m = self.matrix
        return bool(np.array_equal(m, m[0, 0] * np.eye(self.dim)))

    def inverse(self) -> "ConductivityTensor":
        inv = np.linalg.inv(self.matrix)
        # inv of a symmetric matrix is symmetric only up to rounding
        return ConductivityTensor(0.5 * (inv + inv.T))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def __matmul__(self, v):
        return self.matrix @ np.asarray(v, dtype=float)

    def __repr__(self):
        if self.is_isotropic:
            return f"ConductivityTensor(isotropic={self.matrix[0, 0]!r}, dim={self.dim})"
        return f"ConductivityTensor({self.matrix.tolist()!r})"


def make_isotropic(sigma: float, d: int = 3) -> ConductivityTensor:
    """Return ``sigma * I`` in dimension ``d`` (2 or 3)."""
    if d not in (2, 3):
        raise ConductivityError(f"dimension must be 2 or 3, got {d}")
    if not np.isfinite(sigma) or sigma <= 0:
        raise ConductivityError(f"nonpositive conductivity: {sigma}")
    return ConductivityTensor(float(sigma) * np.eye(d))


def as_field(v, dim: Optional[int] = None) -> np.ndarray:
    """Validate a field vector (E, J, E0, ...) and return it as a float array."""
    a = np.asarray(v, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"field vector must be one-dimensional, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"field vector has {a.shape[0]} components, expected {dim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("field vector has non-finite entries")
    return a


def _check_unit(n: np.ndarray):
    norms = np.linalg.norm(n, axis=-1)
    if np.any(np.abs(norms - 1.0) > NORMAL_TOL):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise InterfaceError(f"normal is not a unit vector (| |n| - 1 | = {worst:.2e})")


def decompose_field(F, n):
    """Split ``F`` into tangential and normal parts with respect to unit ``n``.

    Works on single vectors or on stacks of shape ``(..., d)``.
    Returns ``(F_t, F_n)`` with ``F_n = (F.n) n`` and ``F_t = F - F_n``.
    """
    F = np.asarray(F, dtype=float)
    n = np.asarray(n, dtype=float)
    if F.shape[-1] != n.shape[-1]:
        raise ValueError(f"dimension mismatch: field {F.shape[-1]}, normal {n.shape[-1]}")
    _check_unit(n)
    Fn = np.sum(F * n, axis=-1, keepdims=True) * n
    return F - Fn, Fn


def quadratic_form(sigma, v) -> float:
    """``v . sigma v`` for a tensor (or matrix) and a vector."""
    m = sigma.matrix if isinstance(sigma, ConductivityTensor) else np.asarray(sigma, dtype=float)
    v = np.asarray(v, dtype=float)
    if m.shape != (v.shape[-1], v.shape[-1]):
        raise ValueError(f"dimension mismatch: tensor {m.shape}, vector {v.shape}")
    return float(v @ m @ v)


def unit_normals(n) -> np.ndarray:
    """Normalize rows of ``n`` (helper for mesh builders)."""
    n = np.asarray(n, dtype=float)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


@dataclass(frozen=True)
class InterfacePatch:
    """One quadrature point of a discretized interface.

    ``fields_plus``/``fields_minus`` are ``(E, J)`` pairs; ``one_sided`` is
    ``(E_t, J_n)`` sampled on ``side``.  Normal points from the + side to
    the - side.
    """

    position: np.ndarray
    normal: np.ndarray
    weight: float
    thickness: float = 0.0
    shift_amplitude: float = 0.0
    fields_plus: Optional[tuple] = None
    fields_minus: Optional[tuple] = None
    one_sided: Optional[tuple] = None
    side: Optional[str] = None


@dataclass(frozen=True, eq=False)
class InterfaceMesh:
    """A discretized interface stored as arrays over patches.

    All per-patch quantities are arrays with leading dimension P (number of
    patches).  Field arrays are optional; operations that need them check.
    The mean over the period cell is ``sum(weight * f) / cell_volume``.
    """

    positions: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    cell_volume: float
    thickness: Optional[np.ndarray] = None
    shift: Optional[np.ndarray] = None
    E_plus: Optional[np.ndarray] = None
    J_plus: Optional[np.ndarray] = None
    E_minus: Optional[np.ndarray] = None
    J_minus: Optional[np.ndarray] = None
    E_t: Optional[np.ndarray] = None
    J_n: Optional[np.ndarray] = None
    side: Optional[str] = None
    applied_field: Optional[np.ndarray] = None
    continuity_rtol: float = 1e-6

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        P, d = pos.shape
        if d not in (2, 3):
            raise InterfaceError(f"patch positions must be 2D or 3D points, got dimension {d}")
        nrm = np.asarray(self.normals, dtype=float).reshape(P, d)
        _check_unit(nrm)
        w = np.asarray(self.weights, dtype=float).reshape(P)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InterfaceError("patch weights must be finite and nonnegative")
        if not self.cell_volume > 0:
            raise InterfaceError(f"cell volume must be positive, got {self.cell_volume}")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "normals", _frozen(nrm))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "cell_volume", float(self.cell_volume))

        for name in ("thickness", "shift"):
            val = getattr(self, name)
            if val is not None:
                arr = np.broadcast_to(np.asarray(val, dtype=float), (P,))
                if not np.all(np.isfinite(arr)):
                    raise InterfaceError(f"non-finite {name}")
                if name == "thickness" and np.any(arr < 0):
                    raise InterfaceError("interphase thickness must be nonnegative")
                object.__setattr__(self, name, _frozen(arr))
        for name in ("E_plus", "J_plus", "E_minus", "J_minus", "E_t", "J_n"):
            val = getattr(self, name)
            if val is not None:
                arr = np.asarray(val, dtype=float)
                if arr.shape != (P, d):
                    raise InterfaceError(f"{name} has shape {arr.shape}, expected {(P, d)}")
                object.__setattr__(self, name, _frozen(arr))
        if self.side not in (None, "plus", "minus"):
            raise InterfaceError(f"side must be 'plus' or 'minus', got {self.side!r}")
        if self.applied_field is not None:
            object.__setattr__(self, "applied_field", _frozen(as_field(self.applied_field, d)))

        if self.E_t is not None:
            if np.any(np.abs(np.sum(self.E_t * nrm, axis=1)) > 1e-12 * (1 + np.abs(self.E_t).max())):
                raise InterfaceError("E_t has a normal component")
        if self.J_n is not None:
            Jt = self.J_n - np.sum(self.J_n * nrm, axis=1, keepdims=True) * nrm
            if np.any(np.abs(Jt) > 1e-12 * (1 + np.abs(self.J_n).max())):
                raise InterfaceError("J_n is not parallel to the normal")
        if self.has_two_sided:
            res = self.continuity_residual()
            if max(res) > self.continuity_rtol:
                raise InterfaceError(
                    f"two-sided fields violate continuity: relative mismatch E_t {res[0]:.2e}, "
                    f"J_n {res[1]:.2e} > {self.continuity_rtol:.1e}")

    # -- construction helpers ---------------------------------------------

    @classmethod
    def from_patches(cls, patches: Sequence[InterfacePatch], cell_volume: float, **kw) -> "InterfaceMesh":
        patches = list(patches)
        if not patches:
            raise InterfaceError("empty patch list")

        def stack(get):
            vals = [get(p) for p in patches]
            if all(v is None for v in vals):
                return None
            if any(v is None for v in vals):
                raise InterfaceError("field present on some patches but not others")
            return np.array(vals, dtype=float)

        sides = {p.side for p in patches}
        if len(sides) > 1:
            raise InterfaceError("patches declare different sampling sides")
        return cls(
            positions=[p.position for p in patches],
            normals=[p.normal for p in patches],
            weights=[p.weight for p in patches],
            cell_volume=cell_volume,
            thickness=[p.thickness for p in patches],
            shift=[p.shift_amplitude for p in patches],
            E_plus=stack(lambda p: None if p.fields_plus is None else p.fields_plus[0]),
            J_plus=stack(lambda p: None if p.fields_plus is None else p.fields_plus[1]),
            E_minus=stack(lambda p: None if p.fields_minus is None else p.fields_minus[0]),
            J_minus=stack(lambda p: None if p.fields_minus is None else p.fields_minus[1]),
            E_t=stack(lambda p: None if p.one_sided is None else p.one_sided[0]),
            J_n=stack(lambda p: None if p.one_sided is None else p.one_sided[1]),
            side=sides.pop(),
            **kw,
        )

    def replace(self, **changes) -> "InterfaceMesh":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return InterfaceMesh(**fields)

    def with_fields(self, E_plus=None, J_plus=None, E_minus=None, J_minus=None, side=None,
                    applied_field=None) -> "InterfaceMesh":
        """Attach raw fields; the one-sided (E_t, J_n) pair is derived from ``side``."""
        changes = dict(E_plus=E_plus, J_plus=J_plus, E_minus=E_minus, J_minus=J_minus,
                       applied_field=applied_field)
        if side is not None:
            E, J = (E_plus, J_plus) if side == "plus" else (E_minus, J_minus)
            if E is None or J is None:
                raise InterfaceError(f"no fields on the {side} side to decompose")
            Et, _ = decompose_field(E, self.normals)
            _, Jn = decompose_field(J, self.normals)
            changes.update(E_t=Et, J_n=Jn, side=side)
        return self.replace(**changes)

    def __len__(self):
        return self.positions.shape[0]

    def __getitem__(self, i) -> InterfacePatch:
        def pair(a, b):
            return None if a is None or b is None else (a[i], b[i])

        return InterfacePatch(
            position=self.positions[i],
            normal=self.normals[i],
            weight=float(self.weights[i]),
            thickness=0.0 if self.thickness is None else float(self.thickness[i]),
            shift_amplitude=0.0 if self.shift is None else float(self.shift[i]),
            fields_plus=pair(self.E_plus, self.J_plus),
            fields_minus=pair(self.E_minus, self.J_minus),
            one_sided=pair(self.E_t, self.J_n),
            side=self.side,
        )

    @property
    def patches(self):
        return [self[i] for i in range(len(self))]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def total_area(self) -> float:
        return float(np.sum(self.weights))

    @property
    def has_two_sided(self) -> bool:
        return all(getattr(self, k) is not None for k in ("E_plus", "J_plus", "E_minus", "J_minus"))

    @property
    def has_one_sided(self) -> bool:
        return self.E_t is not None and self.J_n is not None and self.side is not None

    def continuity_residual(self):
        """Relative L2 mismatch of E_t and of J_n between the two sides (weighted)."""
        if not self.has_two_sided:
            raise InterfaceError("continuity residual needs fields on both sides")
        n = self.normals
        Etp, _ = decompose_field(self.E_plus, n)
        Etm, _ = decompose_field(self.E_minus, n)
        Jnp = np.sum(self.J_plus * n, axis=1)
        Jnm = np.sum(self.J_minus * n, axis=1)
        w = self.weights

        # normalize by the total field so a vanishing component is not amplified
        Escale = np.sum(w * np.sum(self.E_plus ** 2 + self.E_minus ** 2, axis=1))
        Jscale = np.sum(w * np.sum(self.J_plus ** 2 + self.J_minus ** 2, axis=1))
        rE = 0.0 if Escale == 0 else float(np.sqrt(2 * np.sum(w * np.sum((Etp - Etm) ** 2, axis=1)) / Escale))
        rJ = 0.0 if Jscale == 0 else float(np.sqrt(2 * np.sum(w * (Jnp - Jnm) ** 2) / Jscale))
        return rE, rJ

    def mean(self, integrand: np.ndarray) -> float:
        """``(1/|Omega|) * sum(weight * integrand)`` with compensated summation."""
        vals = np.asarray(self.weights * integrand, dtype=float)
        return math.fsum(vals.tolist()) / self.cell_volume

    @staticmethod
    def combine(meshes: Iterable["InterfaceMesh"], coefficients: Iterable[float]) -> "InterfaceMesh":
        """Linear combination of the field samples of meshes sharing geometry.

        Fields are linear in the applied field, so this yields the samples
        for the combined applied field.
        """
        meshes = list(meshes)
        coefficients = [float(c) for c in coefficients]
        if len(meshes) != len(coefficients) or not meshes:
            raise InterfaceError("need one coefficient per mesh")
        base = meshes[0]
        for m in meshes[1:]:
            if m.positions.shape != base.positions.shape or not np.array_equal(m.positions, base.positions):
                raise InterfaceError("meshes do not share the same patches")
        changes = {}
        for name in ("E_plus", "J_plus", "E_minus", "J_minus", "E_t", "J_n", "applied_field"):
            vals = [getattr(m, name) for m in meshes]
            if all(v is not None for v in vals):
                changes[name] = sum(c * v for c, v in zip(coefficients, vals))
            else:
                changes[name] = None
        return base.replace(**changes)
