"""
Core data models for the laser OWC rate-splitting simulator.

Defines the physical scene (room, access points, photodiodes, users,
VCSEL beam parameters), the channel and precoder containers, the rate
and power-split records, the allocation problem and the sweep records.
All entities are immutable after construction.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError

Vec3 = tuple[float, float, float]


class ChannelMode(Enum):
    """Scaling convention of a channel matrix."""
    PHYSICAL = "physical"  # amperes, sigma^2 in A^2
    NORMALIZED = "normalized"  # unit-norm rows, sigma^2 = 1


class Scheme(Enum):
    """Multiple-access scheme evaluated by the runner."""
    OMA = "OMA"
    RS = "RS"
    HRS = "HRS"
    HRS_OPT = "HRS_OPT"


class SweepAxis(Enum):
    """Parameter swept by the runner."""
    SNR_DB = "snr_db"
    BEAM_WAIST_UM = "beam_waist_um"
    NUM_USERS = "num_users"


class VcselLayout(Enum):
    """How the VCSELs of one access point map onto transmit elements."""
    COLOCATED = "colocated"  # one element per AP, power aggregated
    RING = "ring"  # one element per VCSEL, axes tilted around the AP axis


class CommonStrategy(Enum):
    """Construction of a common-message precoder."""
    EQUAL_GAIN = "equal_gain"
    DOMINANT = "dominant"


class Utility(Enum):
    """Group utility of the power-allocation objective."""
    LOG = "log"


def _unit(v: Vec3) -> Vec3:
    n = math.sqrt(sum(c * c for c in v))
    if n == 0.0:
        raise ConfigError("beam axis must be a nonzero vector")
    return (v[0] / n, v[1] / n, v[2] / n)


@dataclass(frozen=True)
class Room:
    """
    Rectangular room with a horizontal receiver plane.

    Attributes:
        length: Extent along x in meters
        width: Extent along y in meters
        height: Ceiling height in meters
        rx_plane_height: Height of the receiving plane in meters
    """
    length: float = 5.0
    width: float = 5.0
    height: float = 3.0
    rx_plane_height: float = 0.85

    def __post_init__(self) -> None:
        if min(self.length, self.width, self.height) <= 0:
            raise ConfigError("room dimensions must be positive")
        if not 0 <= self.rx_plane_height < self.height:
            raise ConfigError("rx_plane_height must lie in [0, height)")

    def contains(self, p: Vec3) -> bool:
        """Check if a point lies inside the room (boundaries included)."""
        return (
            0 <= p[0] <= self.length
            and 0 <= p[1] <= self.width
            and 0 <= p[2] <= self.height
        )


@dataclass(frozen=True)
class AccessPoint:
    """
    Ceiling-mounted optical access point.

    Attributes:
        position: (x, y, z) in meters, z at the ceiling
        vcsels_per_ap: Number of VCSELs driven by this AP
        beam_axis: Unit vector of the optical axis (straight down by default)
    """
    position: Vec3
    vcsels_per_ap: int = 10
    beam_axis: Vec3 = (0.0, 0.0, -1.0)

    def __post_init__(self) -> None:
        if self.vcsels_per_ap < 1:
            raise ConfigError("vcsels_per_ap must be a positive integer")
        object.__setattr__(self, "beam_axis", _unit(self.beam_axis))


@dataclass(frozen=True)
class Photodiode:
    """
    One face of an angle diversity receiver.

    Attributes:
        azimuth: Pointing azimuth in degrees (from +x towards +y)
        elevation: Pointing elevation in degrees above the horizontal
        fov_half_angle: Field-of-view half angle in degrees
        area: Detector area in square meters
        responsivity: Responsivity in A/W
    """
    azimuth: float
    elevation: float
    fov_half_angle: float = 25.0
    area: float = 20e-6
    responsivity: float = 0.4

    def __post_init__(self) -> None:
        if not 0 <= self.fov_half_angle <= 90:
            raise ConfigError("fov_half_angle must lie in [0, 90] degrees")
        if self.area <= 0:
            raise ConfigError("photodiode area must be positive")
        if self.responsivity <= 0:
            raise ConfigError("photodiode responsivity must be positive")


@dataclass(frozen=True)
class User:
    """
    Receiver on the communication floor.

    Attributes:
        position: (x, y, z) in meters, z on the receiver plane
        adr: Photodiodes of the angle diversity receiver
    """
    position: Vec3
    adr: tuple[Photodiode, ...]

    def __post_init__(self) -> None:
        if not self.adr:
            raise ConfigError("a user needs at least one photodiode")


@dataclass(frozen=True)
class VcselParams:
    """
    Multimode VCSEL transmitter.

    Attributes:
        w0: Beam waist at the aperture in meters
        wavelength: Emission wavelength in meters
        refractive_index: Refractive index of the medium
        mode_coeffs: (p, l, a_pl) triples, a_pl summing to one
        total_optical_power: Optical power of one VCSEL in watts
        m_squared: Beam propagation ratio (1 = ideal Laguerre-Gaussian)
    """
    w0: float = 20e-6
    wavelength: float = 850e-9
    refractive_index: float = 1.0
    mode_coeffs: tuple[tuple[int, int, float], ...] = ((0, 0, 1.0),)
    total_optical_power: float = 1.0
    m_squared: float = 1.0

    def __post_init__(self) -> None:
        if self.w0 <= 0 or self.wavelength <= 0:
            raise ConfigError("w0 and wavelength must be positive")
        if self.refractive_index < 1:
            raise ConfigError("refractive_index must be >= 1")
        if self.total_optical_power <= 0:
            raise ConfigError("total_optical_power must be positive")
        if self.m_squared < 1:
            raise ConfigError("m_squared must be >= 1")
        if not self.mode_coeffs:
            raise ConfigError("mode_coeffs must not be empty")
        for p, l, a in self.mode_coeffs:
            if p < 0 or l < 0 or a < 0:
                raise ConfigError(f"invalid mode coefficient ({p}, {l}, {a})")
        if abs(math.fsum(a for _, _, a in self.mode_coeffs) - 1.0) > 1e-12:
            raise ConfigError("mode coefficients must sum to 1")


@dataclass(frozen=True)
class Scene:
    """
    Full physical configuration of one deployment.

    Attributes:
        room: Room geometry
        aps: Access points (L of them)
        users: Placed users (K of them, empty until placed)
        vcsel: Beam parameters shared by every VCSEL
        adr: Photodiode template given to newly placed users
        vcsel_layout: Mapping of VCSELs onto transmit elements
        ring_tilt_deg: Tilt of each VCSEL axis in the ring layout
    """
    room: Room
    aps: tuple[AccessPoint, ...]
    users: tuple[User, ...] = ()
    vcsel: VcselParams = field(default_factory=VcselParams)
    adr: tuple[Photodiode, ...] = ()
    vcsel_layout: VcselLayout = VcselLayout.COLOCATED
    ring_tilt_deg: float = 0.0

    def __post_init__(self) -> None:
        if not self.aps:
            raise ConfigError("a scene needs at least one access point")
        for ap in self.aps:
            if not self.room.contains(ap.position):
                raise ConfigError(f"access point {ap.position} lies outside the room")
        for user in self.users:
            if not self.room.contains(user.position):
                raise ConfigError(f"user {user.position} lies outside the room")
        if not 0 <= self.ring_tilt_deg < 90:
            raise ConfigError("ring_tilt_deg must lie in [0, 90)")

    @property
    def num_aps(self) -> int:
        return len(self.aps)

    @property
    def num_users(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class NoiseParams:
    """
    Receiver noise model.

    Attributes:
        current_density: Noise current spectral density in A/sqrt(Hz)
        bandwidth: Receiver bandwidth in Hz
        include_shot: Add shot noise of the full-power received current
        electron_charge: Elementary charge in coulombs
    """
    current_density: float = 4.47e-12
    bandwidth: float = 5e9
    include_shot: bool = False
    electron_charge: float = 1.602176634e-19

    def __post_init__(self) -> None:
        if self.current_density <= 0 or self.bandwidth <= 0:
            raise ConfigError("noise current density and bandwidth must be positive")

    @property
    def thermal_variance(self) -> float:
        """Thermal noise variance N0^2 * B in A^2."""
        return self.current_density**2 * self.bandwidth


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """
    Line-of-sight channel of K users over L transmit elements.

    Attributes:
        gains: K x L nonnegative gain matrix (row k is h_k)
        noise_var: Per-user noise variance
        mode: Physical (A, A^2) or normalized (unit rows, unit noise)
        uncovered: Users whose row is identically zero
    """
    gains: np.ndarray
    noise_var: np.ndarray
    mode: ChannelMode = ChannelMode.PHYSICAL
    uncovered: tuple[int, ...] = ()

    @property
    def num_users(self) -> int:
        return int(self.gains.shape[0])

    @property
    def num_tx(self) -> int:
        return int(self.gains.shape[1])


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    """
    Precoders of an RS or HRS transmission.

    For HRS, `private` holds the composite columns B_g w_gk so that every
    scheme reads private precoders the same way.

    Attributes:
        private: L x K matrix of unit-norm private precoders
        common: Unit-norm common (RS) or outer-common (HRS) precoder
        outer: Per-group orthonormal bases B_g (HRS only)
        inner_common: Per-group inner common precoders in B_g coordinates
        inner_private: Per-group inner ZF precoders in B_g coordinates
    """
    private: np.ndarray
    common: np.ndarray
    outer: tuple[np.ndarray, ...] | None = None
    inner_common: tuple[np.ndarray, ...] | None = None
    inner_private: tuple[np.ndarray, ...] | None = None

    def inner_common_composite(self, g: int) -> np.ndarray:
        """Return B_g w_ic,g as an L-vector."""
        if self.outer is None or self.inner_common is None:
            raise ConfigError("precoder set carries no HRS inner common precoders")
        return self.outer[g] @ self.inner_common[g]


@dataclass(frozen=True)
class RsPowerSplit:
    """
    Uniform RS power split.

    Attributes:
        total_power: Transmit power P
        alpha: Private fraction
        p_common: P (1 - alpha)
        p_private: P alpha / K per user
    """
    total_power: float
    alpha: float
    p_common: float
    p_private: tuple[float, ...]


@dataclass(frozen=True)
class HrsPowerSplit:
    """
    Uniform HRS power split.

    Attributes:
        total_power: Transmit power P
        alpha: Private fraction inside the groups
        beta: Fraction of P given to the group messages
        p_outer_common: P (1 - beta)
        p_inner_common: P beta (1 - alpha) / G per group
        p_private: P beta alpha / K per user
    """
    total_power: float
    alpha: float
    beta: float
    p_outer_common: float
    p_inner_common: tuple[float, ...]
    p_private: tuple[float, ...]

    @property
    def total(self) -> float:
        return math.fsum((self.p_outer_common, *self.p_inner_common, *self.p_private))


@dataclass(frozen=True)
class RateBreakdown:
    """
    Per-scheme decomposition of the achievable sum rate (bits/s/Hz).

    Attributes:
        scheme: Scheme that produced the rates
        r_outer_common: Outer common rate (HRS only)
        r_inner_common: Common rate per group (RS reports one entry)
        r_private: Private rate per user
        sum_rate: Sum of all parts
    """
    scheme: Scheme
    r_outer_common: float
    r_inner_common: tuple[float, ...]
    r_private: tuple[float, ...]
    sum_rate: float = field(init=False)

    def __post_init__(self) -> None:
        parts = (self.r_outer_common, *self.r_inner_common, *self.r_private)
        if min(parts, default=0.0) < 0:
            raise ConfigError("rates must be nonnegative")
        object.__setattr__(self, "sum_rate", math.fsum(parts))

    @property
    def r_inner_common_total(self) -> float:
        return math.fsum(self.r_inner_common)

    @property
    def r_private_total(self) -> float:
        return math.fsum(self.r_private)

    def bit_rate(self, bandwidth_hz: float) -> float:
        """Absolute sum bit rate in bit/s."""
        return self.sum_rate * bandwidth_hz


@dataclass(frozen=True, eq=False)
class Grouping:
    """
    Partition of users into spatial groups.

    Attributes:
        assignments: Group index of each user, labels in order of first appearance
        centroids: G x 2 floor-plane centroids
    """
    assignments: np.ndarray
    centroids: np.ndarray

    def __post_init__(self) -> None:
        g = self.num_groups
        counts = np.bincount(self.assignments, minlength=g)
        if len(counts) != g or np.any(counts == 0):
            raise ConfigError("every group must be non-empty")

    @property
    def num_groups(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def num_users(self) -> int:
        return int(self.assignments.shape[0])

    def members(self, g: int) -> np.ndarray:
        """Indices of the users in group g, ascending."""
        return np.flatnonzero(self.assignments == g)


@dataclass(frozen=True, eq=False)
class SinrCoefficients:
    """
    Precomputed SINR coefficients of a set of streams.

    Stream s has SINR  signal[s] * x[signal_index[s]] / (interference[s] @ x + noise[s])
    over the allocation vector x = [p_ic (G), p_private (K)]. A signal index
    of -1 reads the reserved outer-common power instead of x.
    """
    signal: np.ndarray
    signal_index: np.ndarray
    interference: np.ndarray
    noise: np.ndarray


@dataclass(frozen=True)
class OptimizerSettings:
    """
    Knobs of the successive convex approximation solver.

    Attributes:
        tol: Relative surrogate gain below which the power-space step is tried
        max_outer: Outer iteration cap
        max_inner: SLSQP iteration cap per subproblem
        p_min: Lower bound on the summed private power
        p_max: Upper bound on the summed private power (None = budget)
        r_min: Minimum sum rate in bits/s/Hz
        max_residual: Largest outer-nulling residual accepted by the simplification
    """
    tol: float = 1e-6
    max_outer: int = 50
    max_inner: int = 500
    p_min: float = 0.0
    p_max: float | None = None
    r_min: float = 0.0
    max_residual: float = 1e-9

    def __post_init__(self) -> None:
        if self.tol <= 0 or self.max_outer < 1 or self.max_inner < 1:
            raise ConfigError("optimizer tol and iteration caps must be positive")
        if self.p_min < 0 or (self.p_max is not None and self.p_max < 0) or self.r_min < 0:
            raise ConfigError("p_min, p_max and r_min must be nonnegative")


@dataclass(frozen=True, eq=False)
class AllocationProblem:
    """
    Proportional-fair power allocation over inner-common and private messages.

    Attributes:
        channel: Channel the precoders were built for
        grouping: User groups
        precoders: HRS precoder set
        total_power: Transmit power P of the uniform HRS split
        alpha, beta: Fractions of the uniform split used as the starting point
        p_min, p_max: Bounds on the summed private power
        p_budget: Total power budget
        r_min: Minimum sum rate
        p_outer_common: Power reserved for the outer common message (0 once simplified)
        inner_common: Coefficients of every user's inner-common stream
        private: Coefficients of every user's private stream
        outer_common: Coefficients of the outer-common streams (None once simplified)
        utility: Group utility
    """
    channel: ChannelMatrix
    grouping: Grouping
    precoders: PrecoderSet
    total_power: float
    alpha: float
    beta: float
    p_min: float
    p_max: float
    p_budget: float
    r_min: float
    p_outer_common: float
    inner_common: SinrCoefficients
    private: SinrCoefficients
    outer_common: SinrCoefficients | None = None
    utility: Utility = Utility.LOG

    def __post_init__(self) -> None:
        if self.p_budget <= 0 or self.total_power <= 0:
            raise ConfigError("p_budget and total_power must be positive")
        if self.p_min < 0 or self.p_max < 0 or self.r_min < 0:
            raise ConfigError("p_min, p_max and r_min must be nonnegative")

    @property
    def num_groups(self) -> int:
        return self.grouping.num_groups

    @property
    def num_users(self) -> int:
        return self.grouping.num_users

    @property
    def num_variables(self) -> int:
        return self.num_groups + self.num_users

    @property
    def simplified(self) -> bool:
        return self.outer_common is None


@dataclass(frozen=True)
class PowerAllocation:
    """
    Result of a power allocation.

    Attributes:
        p_inner_common: Power per inner common message
        p_private: Power per private message
        objective_value: Sum over groups of the log group rate
        sum_rate: Inner-common plus private sum rate
        iterations: Outer iterations performed
        converged: Projected-gradient residual at the stationarity tolerance
        feasible: Minimum sum-rate constraint satisfied
        infeasible_start: Starting point violated the minimum sum rate
        trajectory: Objective after each outer iteration of the main phase
    """
    p_inner_common: tuple[float, ...]
    p_private: tuple[float, ...]
    objective_value: float
    sum_rate: float
    iterations: int = 0
    converged: bool = False
    feasible: bool = True
    infeasible_start: bool = False
    trajectory: tuple[float, ...] = ()

    @property
    def powers(self) -> np.ndarray:
        """Allocation vector x = [p_ic, p_private]."""
        return np.array((*self.p_inner_common, *self.p_private), dtype=float)


@dataclass(frozen=True)
class SweepSpec:
    """
    One Monte Carlo sweep.

    Attributes:
        axis: Swept parameter
        values: Strictly increasing axis values
        schemes: Schemes evaluated at every point
        trials: Random placements per axis value
        seed: Root seed
        num_users: K when the axis is not num_users
        groups: Fixed G (None = per-point default)
        alpha, beta: Uniform split fractions
        snr_db: SNR when the axis is num_users
        physical_power: Precoder power budget in physical mode
        common_placements: Reuse placements across axis values (None = axis default)
        common_strategy: Common precoder construction
        optimizer: Settings of HRS_OPT
    """
    axis: SweepAxis
    values: tuple[float, ...]
    schemes: tuple[Scheme, ...] = (Scheme.OMA, Scheme.RS, Scheme.HRS, Scheme.HRS_OPT)
    trials: int = 50
    seed: int = 42
    num_users: int = 4
    groups: int | None = None
    alpha: float = 0.8
    beta: float = 0.8
    snr_db: float = 15.0
    physical_power: float = 1.0
    common_placements: bool | None = None
    common_strategy: CommonStrategy = CommonStrategy.EQUAL_GAIN
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)

    def __post_init__(self) -> None:
        if not self.values:
            raise ConfigError("sweep values must not be empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        if self.num_users < 1:
            raise ConfigError("num_users must be >= 1")
        if self.groups is not None and self.groups < 1:
            raise ConfigError("groups must be >= 1")
        if self.physical_power <= 0:
            raise ConfigError("physical_power must be positive")

    @property
    def uses_common_placements(self) -> bool:
        if self.common_placements is not None:
            return self.common_placements and self.axis is not SweepAxis.NUM_USERS
        return self.axis is not SweepAxis.NUM_USERS


@dataclass(frozen=True)
class ResultRecord:
    """
    One row of sweep output.

    Attributes:
        scheme: Evaluated scheme
        axis: Swept parameter
        axis_value: Value of the swept parameter
        trial: Trial index, -1 for the trial average
        r_outer_common: Outer common rate
        r_inner_common_total: Sum of inner common (or RS common) rates
        r_private_total: Sum of private rates
        sum_rate: Total sum rate in bits/s/Hz
        bit_rate_bps: Sum rate times the receiver bandwidth, in bit/s
        num_users: K at this point
        num_groups: G at this point (0 for OMA and RS)
        snr_db: Normalized SNR, or measured mean SNR in physical mode
        skipped: Trial infeasible for at least one scheme
        reason: Diagnostic for skipped trials
    """
    scheme: Scheme
    axis: SweepAxis
    axis_value: float
    trial: int
    r_outer_common: float = math.nan
    r_inner_common_total: float = math.nan
    r_private_total: float = math.nan
    sum_rate: float = math.nan
    bit_rate_bps: float = math.nan
    num_users: int = 0
    num_groups: int = 0
    snr_db: float = math.nan
    skipped: bool = False
    reason: str = ""
