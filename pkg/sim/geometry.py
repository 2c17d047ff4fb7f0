"""
Room, access-point and receiver geometry.

Builds the default deployment, places users on the receiver plane and
computes photodiode incidence angles and transmit-element poses.
"""

import math
from dataclasses import replace

import numpy as np

from .errors import ConfigError
from .models import (
    AccessPoint,
    Photodiode,
    Room,
    Scene,
    User,
    Vec3,
    VcselLayout,
    VcselParams,
)

# Ceiling AP grid of the default deployment (meters)
DEFAULT_AP_POSITIONS: tuple[Vec3, ...] = (
    (3.5, 3.5, 3.0),
    (1.5, 3.5, 3.0),
    (3.5, 1.5, 3.0),
    (1.5, 1.5, 3.0),
)

# Transmit layout of the default scene: every VCSEL its own element, axes
# tilted away from the AP axis; see DESIGN.md
DEFAULT_VCSEL_LAYOUT = VcselLayout.RING
DEFAULT_RING_TILT_DEG = 25.0
DEFAULT_M_SQUARED = 100.0


def default_adr(
    fov_deg: float = 25.0,
    area: float = 20e-6,
    responsivity: float = 0.4,
) -> tuple[Photodiode, ...]:
    """Four-face ADR: azimuths 0/90/180/270 degrees, elevation 60 degrees."""
    return tuple(
        Photodiode(
            azimuth=az,
            elevation=60.0,
            fov_half_angle=fov_deg,
            area=area,
            responsivity=responsivity,
        )
        for az in (0.0, 90.0, 180.0, 270.0)
    )


def default_scene() -> Scene:
    """
    Build the reference deployment.

    5 m x 5 m x 3 m room, receiver plane at 0.85 m, four APs with ten
    850 nm VCSELs each (W0 = 20 um, M^2 = 100) on a ring tilted 25 degrees
    from the AP axis, so every VCSEL is a transmit element, and a four-face
    ADR template. No users are placed.

    Returns:
        Scene without users
    """
    room = Room(length=5.0, width=5.0, height=3.0, rx_plane_height=0.85)
    aps = tuple(AccessPoint(position=p, vcsels_per_ap=10) for p in DEFAULT_AP_POSITIONS)
    vcsel = VcselParams(w0=20e-6, wavelength=850e-9, m_squared=DEFAULT_M_SQUARED)
    return Scene(
        room=room,
        aps=aps,
        vcsel=vcsel,
        adr=default_adr(),
        vcsel_layout=DEFAULT_VCSEL_LAYOUT,
        ring_tilt_deg=DEFAULT_RING_TILT_DEG,
    )


def place_users_random(
    scene: Scene,
    k: int,
    seed: int | np.random.SeedSequence,
) -> Scene:
    """
    Place k users uniformly at random on the receiver plane.

    Args:
        scene: Scene providing the room and the ADR template
        k: Number of users
        seed: Integer seed or SeedSequence

    Returns:
        Copy of the scene with exactly k users
    """
    if k < 1:
        raise ConfigError("number of users must be >= 1")
    if not scene.adr:
        raise ConfigError("scene has no ADR template for new users")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, scene.room.length, size=k)
    ys = rng.uniform(0.0, scene.room.width, size=k)
    return with_users(scene, np.column_stack([xs, ys]))


def with_users(scene: Scene, positions) -> Scene:
    """Return a copy of the scene with users at the given (x, y) floor positions."""
    z = scene.room.rx_plane_height
    users = tuple(
        User(position=(float(x), float(y), z), adr=scene.adr)
        for x, y in np.asarray(positions, dtype=float).reshape(-1, 2)
    )
    return replace(scene, users=users)


def user_positions(scene: Scene) -> np.ndarray:
    """K x 2 floor-plane coordinates of the placed users."""
    return np.array([u.position[:2] for u in scene.users], dtype=float).reshape(-1, 2)


def photodiode_normal(pd: Photodiode) -> np.ndarray:
    """Unit normal (cos e cos a, cos e sin a, sin e) of a photodiode."""
    a = math.radians(pd.azimuth)
    e = math.radians(pd.elevation)
    return np.array([math.cos(e) * math.cos(a), math.cos(e) * math.sin(a), math.sin(e)])


def incidence_angle(pd: Photodiode, user_pos, ap_pos) -> float:
    """
    Angle between a photodiode normal and the direction towards a transmitter.

    Args:
        pd: Photodiode
        user_pos: Receiver position (x, y, z)
        ap_pos: Transmitter position (x, y, z)

    Returns:
        Angle in degrees, in [0, 180]
    """
    d = np.asarray(ap_pos, dtype=float) - np.asarray(user_pos, dtype=float)
    norm = float(np.linalg.norm(d))
    if norm == 0.0:
        raise ConfigError("user and transmitter positions coincide")
    c = float(np.dot(photodiode_normal(pd), d)) / norm
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def _perpendicular_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = ref - np.dot(ref, axis) * axis
    u /= np.linalg.norm(u)
    return u, np.cross(axis, u)


def tilted_axes(axis: Vec3, count: int, tilt_deg: float) -> np.ndarray:
    """
    Axes of `count` emitters tilted by `tilt_deg` around `axis`.

    Azimuths are evenly spaced, starting on the first perpendicular
    basis vector.
    """
    a = np.asarray(axis, dtype=float)
    u, v = _perpendicular_basis(a)
    t = math.radians(tilt_deg)
    phis = 2.0 * np.pi * np.arange(count) / count
    dirs = math.cos(t) * a + math.sin(t) * (np.outer(np.cos(phis), u) + np.outer(np.sin(phis), v))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def emitters(scene: Scene) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Transmit elements of a scene.

    Returns:
        Tuple of (positions E x 3, unit axes E x 3, VCSEL multiplicity E).
        Colocated layout: one element per AP carrying all its VCSELs.
        Ring layout: one element per VCSEL.
    """
    positions, axes, multiplicity = [], [], []
    for ap in scene.aps:
        if scene.vcsel_layout is VcselLayout.RING:
            for axis in tilted_axes(ap.beam_axis, ap.vcsels_per_ap, scene.ring_tilt_deg):
                positions.append(ap.position)
                axes.append(axis)
                multiplicity.append(1)
        else:
            positions.append(ap.position)
            axes.append(ap.beam_axis)
            multiplicity.append(ap.vcsels_per_ap)
    return (
        np.array(positions, dtype=float),
        np.array(axes, dtype=float),
        np.array(multiplicity, dtype=int),
    )
