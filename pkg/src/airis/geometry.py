"""Node placement, elevation-dependent K-factor, path loss and Doppler terms."""

from dataclasses import dataclass
import math

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

G2A_A2G = "g2a_a2g"
RIS_REFLECTED = "ris_reflected"


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValueError(f"position components must be finite: {self}")

    @classmethod
    def of(cls, seq):
        x, y, z = (float(v) for v in seq)
        return cls(x, y, z)

    def as_array(self):
        return np.array([self.x, self.y, self.z])

    def __sub__(self, other):
        return Position3D(self.x - other.x, self.y - other.y, self.z - other.z)

    def norm(self):
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True)
class SphericalCoord:
    d: float
    theta: float
    phi: float


@dataclass(frozen=True)
class MobilityState:
    velocity: tuple
    carrier_hz: float
    light_speed: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.carrier_hz > 0:
            raise ValueError("carrier_hz must be positive")


def to_spherical(p):
    """Radial distance, elevation in ``[0, pi/2]`` and azimuth of a relative position.

    A zero vector maps to ``d = theta = phi = 0``.
    """
    d = p.norm()
    if d == 0.0:
        return SphericalCoord(0.0, 0.0, 0.0)
    theta = math.asin(min(1.0, abs(p.z) / d))
    phi = math.atan2(p.y, p.x)
    if phi == math.pi:
        phi = -math.pi
    return SphericalCoord(d, theta, phi)


def k2_from_calibration(k1, k_pi):
    """Elevation slope that makes ``k1 * exp(k2 * pi/2) == k_pi`` (natural log)."""
    return (2.0 / math.pi) * math.log(k_pi / k1)


def rician_k_factor(theta, k1, k2):
    """Elevation-dependent Rician factor ``k1 * exp(k2 * theta)`` (linear)."""
    if not 0.0 <= theta <= math.pi / 2 + 1e-12:
        raise ValueError(f"elevation must lie in [0, pi/2], got {theta!r}")
    return k1 * math.exp(k2 * theta)


def path_loss_db(kind, d, carrier_hz, g_t=0.0, g_r=0.0):
    """Channel gain in dB (negative for lossy links), ``d`` in metres.

    The UMi model ``22.7 + 26 log10(f_GHz) + 36.7 log10(d)`` is a loss; the
    reflected hop uses the constant ``-37.3`` in place of ``22.7``.
    """
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d!r}")
    f_ghz = carrier_hz / 1e9
    spreading = 26.0 * math.log10(f_ghz) + 36.7 * math.log10(d)
    if kind == G2A_A2G:
        return g_t + g_r - (22.7 + spreading)
    if kind == RIS_REFLECTED:
        return g_t + g_r + 37.3 - spreading
    raise ValueError(f"unknown path-loss kind {kind!r}")


def path_loss_gain(kind, d, carrier_hz, g_t=0.0, g_r=0.0):
    """Linear path-loss gain ``10**(dB/10)``; see :func:`path_loss_db`."""
    return 10.0 ** (path_loss_db(kind, d, carrier_hz, g_t, g_r) / 10.0)


def doppler_terms(mobility, p):
    """Maximum Doppler shift [Hz] and cosine of the angle between ``v`` and ``p``."""
    v = np.asarray(mobility.velocity, dtype=float)
    speed = float(np.linalg.norm(v))
    if speed == 0.0:
        return 0.0, 0.0
    f_d_max = mobility.carrier_hz * speed / mobility.light_speed
    pn = p.norm()
    if pn == 0.0:
        raise ValueError("angle of arrival undefined for a zero-length position")
    cos_aoa = float(np.dot(v, p.as_array())) / (speed * pn)
    return f_d_max, max(-1.0, min(1.0, cos_aoa))
