"""Analytic reference surfaces together with their containers.

Each preset maps chart coordinates ``(s, theta)`` to points in space, where
``s = 0`` is the pole and ``s = 1`` the contact curve; the map extends
smoothly past ``s = 1`` so ghost rows can be evaluated exactly.  Presets also
report closed-form values used by the test-suite and by the optional
reference-defect correction of the flows.
"""

import math

import numpy as np

from .containers import Ball, HalfSpace
from .errors import AngleAssumptionError, ConfigError


class SphericalCap:
    """Spherical cap of radius ``radius`` resting on the plane ``z = 0``.

    The container is the upper half-space and ``alpha`` is the angle between
    the outward sphere normal and the downward plane normal at the contact
    circle.  The cap centre sits at height ``radius * cos(alpha)``.
    """

    name = "spherical-cap"
    orientation = 1

    def __init__(self, radius=1.0, alpha=math.pi / 2):
        if not radius > 0:
            raise ConfigError("radius must be positive")
        if not 0.0 < alpha < math.pi:
            raise AngleAssumptionError("alpha must satisfy 0 < alpha < pi")
        self.radius = float(radius)
        self.alpha = float(alpha)
        self.center = np.array([0.0, 0.0, self.radius * math.cos(self.alpha)])
        self.polar_max = math.pi - self.alpha

    def container(self):
        return HalfSpace(height=0.0)

    def positions(self, s, theta):
        phi = self.polar_max * np.asarray(s, dtype=float)[:, None]
        th = np.asarray(theta, dtype=float)[None, :]
        r = self.radius
        out = np.empty(phi.shape[:1] + th.shape[1:] + (3,))
        out[..., 0] = r * np.sin(phi) * np.cos(th)
        out[..., 1] = r * np.sin(phi) * np.sin(th)
        out[..., 2] = self.center[2] + r * np.cos(phi)
        return out

    def exact(self):
        r, a = self.radius, self.alpha
        h = r * (1.0 + math.cos(a))
        rc = r * math.sin(a)
        return {
            "mean_curvature": -2.0 / r,
            "gauss_curvature": 1.0 / r ** 2,
            "willmore_operator": 0.0,
            "conormal_mean_curvature_slope": 0.0,
            "area": 2.0 * math.pi * r * h,
            "volume": math.pi * h * h * (3.0 * r - h) / 3.0,
            "boundary_length": 2.0 * math.pi * rc,
            "wetted_area": math.pi * rc ** 2,
            "cos_alpha": math.cos(a),
            "contact_radius": rc,
            "geodesic_curvature": -1.0 / rc,
            "normal_curvature": 0.0,
            "wall_second_form": 0.0,
        }


class FlatDisk:
    """Flat disk of radius ``radius`` at height ``height`` inside a ball.

    The ball is centred at the origin with the contact circle on its wall,
    so its radius is ``sqrt(radius**2 + height**2)``.  The enclosed region
    is the spherical segment above the disk and the disk normal points down.
    """

    name = "flat-disk"
    orientation = -1

    def __init__(self, radius=1.0, height=0.5):
        if not radius > 0:
            raise ConfigError("radius must be positive")
        self.radius = float(radius)
        self.height = float(height)
        self.ball_radius = math.hypot(self.radius, self.height)

    def container(self):
        return Ball(radius=self.ball_radius, center=(0.0, 0.0, 0.0))

    def positions(self, s, theta):
        rad = self.radius * np.asarray(s, dtype=float)[:, None]
        th = np.asarray(theta, dtype=float)[None, :]
        out = np.empty(rad.shape[:1] + th.shape[1:] + (3,))
        out[..., 0] = rad * np.cos(th)
        out[..., 1] = rad * np.sin(th)
        out[..., 2] = self.height
        return out

    def exact(self):
        r, z0, big = self.radius, self.height, self.ball_radius
        h = big - z0
        return {
            "mean_curvature": 0.0,
            "gauss_curvature": 0.0,
            "willmore_operator": 0.0,
            "conormal_mean_curvature_slope": 0.0,
            "area": math.pi * r * r,
            "volume": math.pi * h * h * (3.0 * big - h) / 3.0,
            "boundary_length": 2.0 * math.pi * r,
            "wetted_area": 2.0 * math.pi * big * h,
            "cos_alpha": -z0 / big,
            "contact_radius": r,
            "geodesic_curvature": -z0 / (r * big),
            "normal_curvature": -1.0 / big,
            "wall_second_form": -1.0 / big,
        }


def make_preset(name, radius=1.0, alpha=math.pi / 2, height=0.5):
    if name in ("spherical-cap", "perturbed-cap"):
        return SphericalCap(radius=radius, alpha=alpha)
    if name == "flat-disk":
        return FlatDisk(radius=radius, height=height)
    raise ConfigError(f"unknown preset {name!r}")


def fourier_bump(s, theta, amplitude, mode, phase=0.0):
    """Height field ``amplitude * s**mode * cos(mode*theta + phase)``.

    The radial factor makes the field smooth through the pole; on the flat
    disk it is a harmonic polynomial, so its linearized mean curvature
    vanishes.
    """
    s = np.asarray(s, dtype=float)[:, None]
    th = np.asarray(theta, dtype=float)[None, :]
    return amplitude * s ** mode * np.cos(mode * th + phase)
