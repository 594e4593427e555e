"""Level-set descriptions of the container wall.

A container is the sublevel set ``{F < 0}``; the wall is ``{F = 0}`` and the
normalized gradient ``grad F / |grad F|`` is the outward wall normal.  All
methods are vectorized over a trailing axis of length 3.
"""

from dataclasses import dataclass

import numpy as np


class ContainerLevelSet:
    """Base class: subclasses provide ``value``, ``gradient`` and ``hessian``."""

    kind = "abstract"
    newton_tol = 1e-13

    def value(self, p):
        raise NotImplementedError

    def gradient(self, p):
        raise NotImplementedError

    def hessian(self, p):
        raise NotImplementedError

    def normal(self, p):
        g = self.gradient(p)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def second_form(self, p, x, y):
        """Second fundamental form of the wall w.r.t. its outward normal.

        ``II(x, y) = -<d_x n, y>`` for tangent vectors ``x`` and ``y``.
        """
        hess = self.hessian(p)
        gnorm = np.linalg.norm(self.gradient(p), axis=-1)
        return -np.einsum("...i,...ij,...j->...", x, hess, y) / gnorm

    def normal_derivative(self, p, direction, against):
        """``<d_direction n, against>`` for ``against`` orthogonal to the normal."""
        hess = self.hessian(p)
        gnorm = np.linalg.norm(self.gradient(p), axis=-1)
        return np.einsum("...i,...ij,...j->...", against, hess, direction) / gnorm

    def wall_offset(self):
        """Constant value of ``<p, n>`` on the wall, if the wall admits one."""
        raise NotImplementedError


@dataclass(frozen=True)
class HalfSpace(ContainerLevelSet):
    """Container ``{z > height}``; the wall is the horizontal plane."""

    height: float = 0.0
    kind = "half-space"

    def value(self, p):
        return self.height - np.asarray(p)[..., 2]

    def gradient(self, p):
        p = np.asarray(p, dtype=float)
        g = np.zeros_like(p)
        g[..., 2] = -1.0
        return g

    def hessian(self, p):
        p = np.asarray(p, dtype=float)
        return np.zeros(p.shape + (3,))

    def wall_offset(self):
        return -self.height

    def wetted_area(self, curve):
        """Area enclosed by a closed polygon lying in the wall plane.

        Leading axes of ``curve`` (shape ``(..., n, 3)``) are batch axes.
        """
        x, y = curve[..., 0], curve[..., 1]
        return 0.5 * np.abs(np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1))


@dataclass(frozen=True)
class Ball(ContainerLevelSet):
    """Container ``{|p - center| < radius}``; the wall is a sphere."""

    radius: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)
    kind = "ball"

    def _rel(self, p):
        return np.asarray(p, dtype=float) - np.asarray(self.center, dtype=float)

    def value(self, p):
        r = self._rel(p)
        return np.einsum("...i,...i->...", r, r) - self.radius ** 2

    def gradient(self, p):
        return 2.0 * self._rel(p)

    def hessian(self, p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(2.0 * np.eye(3), p.shape + (3,)).copy()

    def wall_offset(self):
        return self.radius

    def wetted_area(self, curve, inside_direction):
        """Area of the spherical region bounded by ``curve`` that contains
        the direction ``inside_direction`` (a fan of spherical triangles)."""
        a = np.asarray(inside_direction, dtype=float)
        a = a / np.linalg.norm(a)
        rel = self._rel(curve)
        b = rel / np.linalg.norm(rel, axis=-1, keepdims=True)
        c = np.roll(b, -1, axis=-2)
        triple = np.cross(b, c) @ a
        denom = 1.0 + b @ a + np.einsum("...i,...i->...", b, c) + c @ a
        solid = np.sum(2.0 * np.arctan2(triple, denom), axis=-1)
        return np.abs(solid) * self.radius ** 2


def make_container(kind, **params):
    if kind == "half-space":
        return HalfSpace(height=float(params.get("height", 0.0)))
    if kind == "ball":
        center = tuple(float(c) for c in params.get("center", (0.0, 0.0, 0.0)))
        return Ball(radius=float(params["radius"]), center=center)
    raise ValueError(f"unknown container kind {kind!r}")
