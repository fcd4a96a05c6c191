"""
Gravito-electromagnetic fields of a rotating cylindrical mass shell.

The shell of radius ``R`` carries linear mass density ``lambda`` and spins at
``omega_rot`` about its axis, giving an azimuthal mass current per unit
length ``I' = lambda * omega_rot / (2 pi)``. The static field equations are

    div E_g  = -rho_g / eps_g        curl E_g = -dB_g/dt
    div B_g  = 0                     curl B_g = 4 mu_g (-j_g + eps_g dE_g/dt)

so the interior gravito-magnetic field is uniform and axial with magnitude
``4 mu_g I'`` and points *against* the right-hand direction of the mass
current (the source term carries a minus sign). The exterior field vanishes.

The infinitely thin shell is replaced by a Hann-profile shell of radial width
``w``: the mass density across ``R - w/2 < r < R + w/2`` is proportional to
``1 - cos(2 pi u)`` with ``u`` the fractional depth into the shell. All
fields are then C2 in ``r``, which keeps central-difference residual checks
second order. Outside the shell the ideal-sheet formulas hold exactly.

The canonical vector potential is the symmetric gauge, ``h_phi = B r / 2``
inside and ``h_phi = Phi_g / (2 pi r)`` outside.

Samplers throughout take points shaped ``(..., 3)`` and return arrays of the
same shape (or ``(...)`` for scalars).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from gempl.constants import CODATA, PhysicalConstants
from gempl.errors import AxisSingularityError, ConfigError, DomainError, GeometryError
from gempl.ode import fixed_steps, rk4_step

__all__ = [
    "SolenoidConfig",
    "FieldSample",
    "ClosedCurve",
    "GridSpec",
    "MaxwellResiduals",
    "Trajectory",
    "interior_bg",
    "axial_bg",
    "enclosed_flux",
    "gravitomagnetic_field",
    "gravitoelectric_field",
    "vector_potential",
    "mass_density",
    "mass_current_density",
    "solenoid_field",
    "circle",
    "polygon",
    "straddling_loop",
    "line_integral_flux",
    "gauge_transform",
    "ampere_circuital_check",
    "maxwell_residuals",
    "solenoid_force_field",
    "integrate_trajectory",
]

Sampler = Callable[[np.ndarray], np.ndarray]


def _unit(v: Sequence[float], name: str = "axis") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if v.shape != (3,) or not np.isfinite(n) or n == 0.0:
        raise GeometryError(f"{name} must be a nonzero finite 3-vector, got {v!r}")
    return v / n


@dataclass(frozen=True)
class SolenoidConfig:
    """Rotating mass shell.

    Parameters
    ----------
    radius : float
        Mean shell radius R (m).
    shell_thickness : float
        Radial width w of the smoothed shell (m), ``0 < w < R``.
    mass_per_length : float
        Linear mass density lambda (kg/m).
    angular_velocity : float
        Spin rate about ``axis`` (rad/s), right-handed.
    axis, center : 3-vectors
        Axis direction (normalised on construction) and a point on the axis.
    """

    radius: float
    shell_thickness: float
    mass_per_length: float
    angular_velocity: float
    axis: tuple = (0.0, 0.0, 1.0)
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        R, w, lam = self.radius, self.shell_thickness, self.mass_per_length
        if not (math.isfinite(R) and R > 0):
            raise GeometryError(f"radius must be positive, got {R!r}")
        if not (0 < w < R):
            raise GeometryError(f"shell_thickness must satisfy 0 < w < R, got w={w!r}, R={R!r}")
        if not (math.isfinite(lam) and lam >= 0):
            raise DomainError(f"mass_per_length must be >= 0, got {lam!r}")
        if not math.isfinite(self.angular_velocity):
            raise DomainError("angular_velocity must be finite")
        object.__setattr__(self, "axis", tuple(_unit(self.axis)))
        c = np.asarray(self.center, dtype=float)
        if c.shape != (3,) or not np.all(np.isfinite(c)):
            raise GeometryError(f"center must be a finite 3-vector, got {self.center!r}")
        object.__setattr__(self, "center", tuple(c))

    @property
    def mass_current_per_length(self) -> float:
        """I' = lambda * omega_rot / (2 pi), in kg/s per metre of axis."""
        return self.mass_per_length * self.angular_velocity / (2.0 * math.pi)

    @property
    def inner_radius(self) -> float:
        return self.radius - 0.5 * self.shell_thickness

    @property
    def outer_radius(self) -> float:
        return self.radius + 0.5 * self.shell_thickness

    # radial profile -------------------------------------------------------

    def _depth(self, r):
        return np.clip((np.asarray(r, dtype=float) - self.inner_radius) / self.shell_thickness, 0.0, 1.0)

    def enclosed_fraction(self, r):
        """Fraction of the shell mass (and current) inside radius ``r``."""
        u = self._depth(r)
        return u - np.sin(2.0 * np.pi * u) / (2.0 * np.pi)

    def shell_profile(self, r):
        """Radial derivative of :meth:`enclosed_fraction` (1/m)."""
        u = self._depth(r)
        return (1.0 - np.cos(2.0 * np.pi * u)) / self.shell_thickness

    def flux_moment(self, r):
        """``int_0^r (1 - S(r')) r' dr'`` where S is the enclosed fraction.

        The gravito-magnetic flux through a coaxial disk of radius ``r`` is
        ``2 pi * axial_bg * flux_moment(r)``.
        """
        r = np.asarray(r, dtype=float)
        r0, w = self.inner_radius, self.shell_thickness
        u = self._depth(r)
        tp = 2.0 * np.pi * u
        shell = r0 * (u - u**2 / 2 + (1.0 - np.cos(tp)) / (4 * np.pi**2)) + w * (
            u**2 / 2 - u**3 / 3 - u * np.cos(tp) / (4 * np.pi**2) + np.sin(tp) / (8 * np.pi**3)
        )
        inside = 0.5 * r**2
        return np.where(r <= r0, inside, 0.5 * r0**2 + w * shell)

    def cylindrical(self, points):
        """Split points into (radial vector, radius, axial coordinate)."""
        p = np.asarray(points, dtype=float)
        if p.shape[-1] != 3:
            raise GeometryError(f"points must have trailing dimension 3, got shape {p.shape}")
        a = np.asarray(self.axis)
        d = p - np.asarray(self.center)
        z = d @ a
        rho = d - z[..., None] * a
        return rho, np.linalg.norm(rho, axis=-1), z


@dataclass(frozen=True)
class FieldSample:
    """GEM fields at one point: ``E_g`` (m/s^2), ``B_g`` (1/s), ``h`` (m/s).

    ``E_g`` is ``None`` when it was not requested. ``h`` is in the symmetric
    gauge.
    """

    position: np.ndarray
    E_g: np.ndarray | None
    B_g: np.ndarray
    h: np.ndarray
    gauge: str = "symmetric"


def interior_bg(config: SolenoidConfig, constants: PhysicalConstants = CODATA) -> float:
    """Interior gravito-magnetic field strength ``4 mu_g I'`` (1/s)."""
    return 4.0 * constants.mu_g * config.mass_current_per_length


def axial_bg(config: SolenoidConfig, constants: PhysicalConstants = CODATA) -> float:
    """Signed axial component of the interior field.

    Negative for positive spin: the curl equation's source term is ``-j_g``.
    """
    return -interior_bg(config, constants)


def enclosed_flux(config: SolenoidConfig, r: float, constants: PhysicalConstants = CODATA) -> float:
    """Exact gravito-magnetic flux through a coaxial disk of radius ``r``.

    Oriented by the right-hand rule about ``config.axis``. Tends to
    ``axial_bg * pi * R**2`` for ``r`` outside the shell as ``w -> 0``.
    """
    return float(2.0 * np.pi * axial_bg(config, constants) * config.flux_moment(r))


def gravitomagnetic_field(config: SolenoidConfig, points, constants: PhysicalConstants = CODATA) -> np.ndarray:
    _, r, _ = config.cylindrical(points)
    b = axial_bg(config, constants) * (1.0 - config.enclosed_fraction(r))
    out = b[..., None] * np.asarray(config.axis)
    # exterior is identically zero, not just tiny
    out[r >= config.outer_radius] = 0.0
    return out


def vector_potential(config: SolenoidConfig, points, constants: PhysicalConstants = CODATA) -> np.ndarray:
    """Symmetric-gauge potential ``h`` (m/s); zero on the axis."""
    rho, r, _ = config.cylindrical(points)
    a = np.asarray(config.axis)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(
            r <= config.inner_radius,
            0.5,
            config.flux_moment(r) / np.where(r > 0, r, 1.0) ** 2,
        )
    return axial_bg(config, constants) * coef[..., None] * np.cross(a, rho)


def gravitoelectric_field(config: SolenoidConfig, points, constants: PhysicalConstants = CODATA) -> np.ndarray:
    """Radial field ``-2 G lambda_enc(r) / r``, pointing toward the axis.

    Raises
    ------
    AxisSingularityError
        If any point lies on the axis.
    """
    rho, r, _ = config.cylindrical(points)
    if np.any(r == 0.0):
        raise AxisSingularityError("gravito-electric field evaluated on the solenoid axis")
    s = config.enclosed_fraction(r)
    coef = -2.0 * constants.G * config.mass_per_length * s / r**2
    return coef[..., None] * rho


def mass_density(config: SolenoidConfig, points) -> np.ndarray:
    """Shell mass density rho_g (kg/m^3)."""
    _, r, _ = config.cylindrical(points)
    prof = config.shell_profile(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(prof > 0, config.mass_per_length * prof / (2.0 * np.pi * np.where(r > 0, r, 1.0)), 0.0)


def mass_current_density(config: SolenoidConfig, points) -> np.ndarray:
    """Azimuthal mass current density j_g (kg m^-2 s^-1) of the spinning shell."""
    rho, r, _ = config.cylindrical(points)
    prof = config.shell_profile(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(prof > 0, config.mass_current_per_length * prof / np.where(r > 0, r, 1.0), 0.0)
    return coef[..., None] * np.cross(np.asarray(config.axis), rho)


def solenoid_field(
    config: SolenoidConfig,
    point,
    constants: PhysicalConstants = CODATA,
    include_eg: bool = True,
) -> FieldSample:
    """All GEM fields of the shell at a single point.

    ``B_g`` and ``h`` are regular everywhere. ``E_g`` raises
    :class:`AxisSingularityError` on the axis; pass ``include_eg=False`` to
    sample the axis.
    """
    p = np.asarray(point, dtype=float)
    if p.shape != (3,):
        raise GeometryError(f"point must be a 3-vector, got shape {p.shape}")
    E = gravitoelectric_field(config, p, constants) if include_eg else None
    return FieldSample(
        position=p,
        E_g=E,
        B_g=gravitomagnetic_field(config, p, constants),
        h=vector_potential(config, p, constants),
    )


# closed curves and line integrals --------------------------------------------


@dataclass(frozen=True)
class ClosedCurve:
    """A closed loop ``t in [0, 1) -> point``.

    ``point`` maps an array of parameters ``(N,)`` to points ``(N, 3)``. If
    ``tangent`` (``d point / dt``) is omitted it is obtained spectrally from
    the samples, which is exact to rounding for smooth loops.
    """

    point: Callable[[np.ndarray], np.ndarray]
    sample_count: int = 1024
    tangent: Callable[[np.ndarray], np.ndarray] | None = None
    closure_tol: float = 1e-9

    def __post_init__(self):
        if int(self.sample_count) != self.sample_count or self.sample_count < 16:
            raise GeometryError(f"sample_count must be an integer >= 16, got {self.sample_count!r}")
        ends = np.asarray(self.point(np.array([0.0, 1.0])), dtype=float)
        if ends.shape != (2, 3):
            raise GeometryError(f"curve sampler must return shape (N, 3), got {ends.shape}")
        scale = max(np.max(np.abs(ends)), 1e-300)
        if np.linalg.norm(ends[1] - ends[0]) > self.closure_tol * scale:
            raise GeometryError(f"curve does not close: point(0)={ends[0]}, point(1)={ends[1]}")

    def samples(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(points, dpoints/dt)`` at ``t = k / N``."""
        n = int(self.sample_count)
        t = np.arange(n) / n
        x = np.asarray(self.point(t), dtype=float)
        if self.tangent is not None:
            return x, np.asarray(self.tangent(t), dtype=float)
        k = np.fft.fftfreq(n, d=1.0 / n)
        if n % 2 == 0:
            k[n // 2] = 0.0
        dx = np.fft.ifft(2j * np.pi * k[:, None] * np.fft.fft(x, axis=0), axis=0).real
        return x, dx

    def reversed(self) -> "ClosedCurve":
        tan = None if self.tangent is None else (lambda t: -self.tangent((1.0 - t) % 1.0))
        return ClosedCurve(lambda t: self.point((1.0 - t) % 1.0), self.sample_count, tan, self.closure_tol)


def _plane_basis(normal):
    n = _unit(normal, "normal")
    trial = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = trial - (trial @ n) * n
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def circle(radius: float, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0), sample_count: int = 1024) -> ClosedCurve:
    """Circle traversed counter-clockwise about ``normal``."""
    if not radius > 0:
        raise GeometryError(f"radius must be positive, got {radius!r}")
    c = np.asarray(center, dtype=float)
    e1, e2 = _plane_basis(normal)

    def point(t):
        th = 2.0 * np.pi * np.asarray(t)[:, None]
        return c + radius * (np.cos(th) * e1 + np.sin(th) * e2)

    def tangent(t):
        th = 2.0 * np.pi * np.asarray(t)[:, None]
        return 2.0 * np.pi * radius * (-np.sin(th) * e1 + np.cos(th) * e2)

    return ClosedCurve(point, sample_count, tangent)


def polygon(vertices, sample_count: int = 1024) -> ClosedCurve:
    """Closed polygon through ``vertices`` in order.

    Samples sit at edge midpoints of equal sub-segments (no sample on a
    vertex), so with ``sample_count`` a multiple of the edge count the
    closed trapezoid rule is exact for fields linear along each edge.
    """
    V = np.asarray(vertices, dtype=float)
    if V.ndim != 2 or V.shape[1] != 3 or len(V) < 3:
        raise GeometryError("polygon needs at least three 3-vectors")
    E = len(V)
    nxt = np.roll(V, -1, axis=0)
    shift = 0.5 / sample_count

    def _locate(t):
        s = ((np.asarray(t) + shift) % 1.0) * E
        j = np.minimum(np.floor(s).astype(int), E - 1)
        return j, s - j

    def point(t):
        j, f = _locate(t)
        return V[j] + f[:, None] * (nxt[j] - V[j])

    def tangent(t):
        j, _ = _locate(t)
        return E * (nxt[j] - V[j])

    return ClosedCurve(point, sample_count, tangent)


def straddling_loop(
    config: SolenoidConfig,
    inner: float | None = None,
    outer: float | None = None,
    axial_length: float = 1.0,
    sample_count: int = 1024,
) -> ClosedCurve:
    """Rectangular loop in a plane containing the axis, crossing the shell wall.

    The inner side runs along ``+axis`` at radius ``inner`` and the outer side
    back along ``-axis`` at radius ``outer``; its right-hand normal is the
    azimuthal direction, i.e. the direction of the mass current for positive
    spin.
    """
    inner = 0.5 * config.inner_radius if inner is None else inner
    outer = 2.0 * config.radius if outer is None else outer
    if not (0 <= inner < outer):
        raise GeometryError("need 0 <= inner < outer")
    a = np.asarray(config.axis)
    e1, _ = _plane_basis(a)
    c = np.asarray(config.center)
    verts = [
        c + inner * e1,
        c + inner * e1 + axial_length * a,
        c + outer * e1 + axial_length * a,
        c + outer * e1,
    ]
    return polygon(verts, sample_count)


def line_integral_flux(sampler: Sampler, curve: ClosedCurve) -> float:
    """Closed-loop circulation ``oint sampler . dl`` by the periodic trapezoid rule."""
    x, dx = curve.samples()
    F = np.asarray(sampler(x), dtype=float)
    if F.shape != x.shape:
        raise DomainError(f"sampler returned shape {F.shape}, expected {x.shape}")
    if not np.all(np.isfinite(F)):
        raise DomainError("sampler is not finite on the curve")
    return float(np.mean(np.sum(F * dx, axis=-1)))


def _central_gradient(scalar: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(3):
        e = np.zeros(3)
        e[i] = step
        g[..., i] = (np.asarray(scalar(x + e)) - np.asarray(scalar(x - e))) / (2.0 * step)
    return g


def gauge_transform(sampler: Sampler, mu_scalar: Callable[[np.ndarray], np.ndarray], step: float) -> Sampler:
    """Return ``x -> sampler(x) + grad mu(x)`` with a central-difference gradient."""
    if not step > 0:
        raise DomainError(f"step must be positive, got {step!r}")

    def transformed(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(sampler(x), dtype=float) + _central_gradient(mu_scalar, x, step)

    return transformed


def ampere_circuital_check(bg_sampler: Sampler, curve: ClosedCurve, constants: PhysicalConstants = CODATA) -> float:
    """Enclosed mass current implied by ``oint B_g . dl = -4 mu_g I_enc`` (kg/s).

    The current is counted positive along the curve's right-hand normal.
    """
    return -line_integral_flux(bg_sampler, curve) / (4.0 * constants.mu_g)


# Maxwell-like residuals -------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Uniform Cartesian grid: ``origin + spacing * (i, j, k)``."""

    origin: tuple
    spacing: float
    shape: tuple = (8, 8, 8)

    def __post_init__(self):
        if len(self.shape) != 3 or any(int(n) != n or n < 8 for n in self.shape):
            raise ConfigError(f"grid resolution must be at least 8 per axis, got {self.shape!r}")
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise ConfigError(f"grid spacing must be positive, got {self.spacing!r}")
        if len(self.origin) != 3:
            raise ConfigError("grid origin must be a 3-vector")

    @classmethod
    def from_bounds(cls, lower, upper_x: float, n_x: int) -> "GridSpec":
        """Cube-cell grid from ``lower`` with ``n_x`` points spanning to ``upper_x`` along x."""
        h = (upper_x - lower[0]) / (n_x - 1)
        return cls(tuple(lower), h, (n_x, n_x, n_x))

    def points(self) -> np.ndarray:
        axes = [self.origin[i] + self.spacing * np.arange(self.shape[i]) for i in range(3)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def refined(self) -> "GridSpec":
        """Same box at half the spacing."""
        return GridSpec(self.origin, self.spacing / 2.0, tuple(2 * n - 1 for n in self.shape))


@dataclass(frozen=True)
class MaxwellResiduals:
    """Max-norm residuals of the four static field equations on a grid.

    ``E_scale`` and ``B_scale`` are the largest field magnitudes on the grid.
    """

    div_Bg: float
    curl_Eg_plus_dtBg: float
    div_Eg_minus_source: float
    curl_Bg_minus_source: float
    E_scale: float
    B_scale: float
    spacing: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _d(f, axis, h):
    """Central difference along ``axis`` restricted to interior points."""
    sl_hi = [slice(1, -1)] * 3
    sl_lo = [slice(1, -1)] * 3
    sl_hi[axis] = slice(2, None)
    sl_lo[axis] = slice(None, -2)
    return (f[tuple(sl_hi)] - f[tuple(sl_lo)]) / (2.0 * h)


def _div(F, h):
    return _d(F[..., 0], 0, h) + _d(F[..., 1], 1, h) + _d(F[..., 2], 2, h)


def _curl(F, h):
    return np.stack(
        [
            _d(F[..., 2], 1, h) - _d(F[..., 1], 2, h),
            _d(F[..., 0], 2, h) - _d(F[..., 2], 0, h),
            _d(F[..., 1], 0, h) - _d(F[..., 0], 1, h),
        ],
        axis=-1,
    )


def maxwell_residuals(grid: GridSpec, config: SolenoidConfig, constants: PhysicalConstants = CODATA) -> MaxwellResiduals:
    """Central-difference residuals of the static Maxwell-like equations.

    Residuals are evaluated at interior grid points with stencil step equal to
    the grid spacing, and reduced with the max norm. Sources keep the minus
    signs of the gravitational equations: ``div E_g + rho_g/eps_g`` and
    ``curl B_g + 4 mu_g j_g`` should vanish.
    """
    P = grid.points()
    _, r, _ = config.cylindrical(P)
    if np.any(r < 1e-12 * config.radius):
        raise AxisSingularityError("residual grid contains points on the solenoid axis")
    h = grid.spacing
    E = gravitoelectric_field(config, P, constants)
    B = gravitomagnetic_field(config, P, constants)
    inner = (slice(1, -1),) * 3
    rho = mass_density(config, P)[inner]
    j = mass_current_density(config, P)[inner]

    div_b = np.max(np.abs(_div(B, h)))
    curl_e = np.max(np.linalg.norm(_curl(E, h), axis=-1))  # static: dB/dt = 0
    div_e = np.max(np.abs(_div(E, h) + rho / constants.eps_g))
    curl_b = np.max(np.linalg.norm(_curl(B, h) + 4.0 * constants.mu_g * j, axis=-1))
    return MaxwellResiduals(
        div_Bg=float(div_b),
        curl_Eg_plus_dtBg=float(curl_e),
        div_Eg_minus_source=float(div_e),
        curl_Bg_minus_source=float(curl_b),
        E_scale=float(np.max(np.linalg.norm(E, axis=-1))),
        B_scale=float(np.max(np.linalg.norm(B, axis=-1))),
        spacing=h,
    )


# test-particle trajectories ---------------------------------------------------


@dataclass
class Trajectory:
    """Sampled test-particle states. ``aborted`` is set if the run stopped early."""

    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    aborted: bool = False
    message: str = ""

    CSV_HEADER = ("t_s", "x_m", "y_m", "z_m", "vx_m_s", "vy_m_s", "vz_m_s")

    def angular_momentum(self, axis=(0.0, 0.0, 1.0), center=(0.0, 0.0, 0.0)) -> np.ndarray:
        """Axial angular momentum per unit mass about a line (m^2/s)."""
        a = _unit(axis)
        return np.cross(self.position - np.asarray(center), self.velocity) @ a

    def rows(self):
        for k in range(len(self.t)):
            yield (self.t[k], *self.position[k], *self.velocity[k])


def solenoid_force_field(config: SolenoidConfig, constants: PhysicalConstants = CODATA):
    """Callable ``x -> (E_g, B_g)`` for :func:`integrate_trajectory`."""

    def field(x):
        return gravitoelectric_field(config, x, constants), gravitomagnetic_field(config, x, constants)

    return field


def integrate_trajectory(
    mass: float,
    position,
    velocity,
    field: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    t_end: float,
    dt: float,
    constants: PhysicalConstants = CODATA,
    sample_every: int = 1,
) -> Trajectory:
    """Integrate ``dv/dt = E_g + v x B_g`` with fixed-step RK4.

    The particle mass cancels from the equation of motion and is only
    validated. If the field raises :class:`AxisSingularityError` the run stops
    and the samples so far are returned with ``aborted=True``.
    """
    if not mass > 0:
        raise DomainError(f"mass must be positive, got {mass!r}")
    n, h = fixed_steps(t_end, dt)
    y = np.concatenate([np.asarray(position, dtype=float), np.asarray(velocity, dtype=float)])
    if y.shape != (6,):
        raise GeometryError("position and velocity must be 3-vectors")
    vmax = 0.01 * constants.c

    def rhs(_t, s):
        E, B = field(s[:3])
        return np.concatenate([s[3:], np.asarray(E) + np.cross(s[3:], np.asarray(B))])

    ts, xs, vs = [0.0], [y[:3].copy()], [y[3:].copy()]
    warned = False
    aborted, message = False, ""
    for k in range(1, n + 1):
        try:
            y = rk4_step(rhs, (k - 1) * h, y, h)
        except AxisSingularityError as exc:
            aborted, message = True, f"aborted at step {k} (t={(k - 1) * h:.6g} s): {exc}"
            break
        if not warned and np.linalg.norm(y[3:]) > vmax:
            warnings.warn("test particle speed exceeds 0.01 c; the slow-motion limit no longer applies", RuntimeWarning)
            warned = True
        if k % sample_every == 0 or k == n:
            ts.append(k * h)
            xs.append(y[:3].copy())
            vs.append(y[3:].copy())
    return Trajectory(np.array(ts), np.array(xs), np.array(vs), aborted, message)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(Trajectory.CSV_HEADER)
        for row in traj.rows():
            w.writerow([f"{v:.9g}" for v in row])
