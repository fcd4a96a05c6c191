"""
Radiation-pressure parametric amplification in superconducting cavities.

Two configurations are covered.

*Unseparated* (vibrating wire or membrane inside one cavity with a
pump/Stokes doublet). The pump and Stokes magnetic fields beat, and the
resulting magnetic pressure drives the membrane resonantly at
``Omega = omega_p - omega_S``. Energy conservation turns the delivered power
into an exponential gain for the Stokes energy,

    kappa_S = 2 |B_p|^2 A_eff / (mu_0 m gamma L_eff),

and gain = loss (``kappa_S = omega_S / Q_S``) sets the threshold stored pump
energy ``U_p = m Omega omega_S L_eff^2 / (2 Q_S Q_Omega)``.

*Separated* (a membrane between a signal cavity and an idler cavity). The
membrane envelope ``eps`` and the idler envelope ``B_i`` obey, at the optimal
phase ``phi_p - phi_i - phi_s = -pi/2``,

    d|eps|/dt = K1 |B_i| - (2/tau_s) |eps|,   K1 = A_eff |B_p| / (mu_0 m Omega)
    d|B_i|/dt = K2 |eps| - (2/tau_i) |B_i|,   K2 = Omega |B_p| / L_eff

with ``Q = omega tau``. The loss-free growth eigenvalue is
``Lambda = sqrt(K1 K2)``. Threshold is ``K1 K2 = 4 / (tau_i tau_s)``, i.e.

    U_p = 4 m omega_i omega_s L_eff^2 / (Q_i Q_s),   P_p = U_p omega_p / Q_p.

Stored pump energy and field amplitude are related by
``U_p = |B_p|^2 V_eff / mu_0`` with ``V_eff = A_eff L_eff``.
"""

from __future__ import annotations

import cmath
import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from gempl.constants import CODATA, PhysicalConstants
from gempl.errors import DetuningError, DomainError, NumericalError, StepSizeError
from gempl.ode import fixed_steps, rk4_step

__all__ = [
    "SLAVING_CHARGE",
    "MembraneParams",
    "PumpDrive",
    "SeparatedCavityParams",
    "EnvelopeState",
    "ThresholdReport",
    "EnvelopeRun",
    "maxwell_stress",
    "magnetic_pressure",
    "beat_force",
    "driven_sho_response",
    "stokes_gain",
    "unseparated_threshold",
    "braginsky_threshold",
    "pump_energy",
    "pump_field_from_energy",
    "coupling_constants",
    "growth_eigenvalue",
    "net_growth_rate",
    "separated_threshold",
    "integrate_envelopes",
    "channel_powers",
    "motional_idler_field",
    "surface_current_from_field",
]

SLAVING_CHARGE = 20e-12  # C; membrane charge at which Coulomb forcing dominates


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class MembraneParams:
    """Mechanical element: mass (kg), resonance ``Omega`` (rad/s), damping.

    Give exactly one of ``gamma`` (1/s) or ``Q_Omega``. ``delta`` is the London
    penetration depth (m); ``q_mem`` the membrane charge (C).
    """

    mass: float
    Omega: float
    A_eff: float = 9e-4
    gamma: float | None = None
    Q_Omega: float | None = None
    delta: float | None = None
    q_mem: float | None = None

    def __post_init__(self):
        _positive("mass", self.mass)
        _positive("Omega", self.Omega)
        _positive("A_eff", self.A_eff)
        if (self.gamma is None) == (self.Q_Omega is None):
            raise DomainError("give exactly one of gamma or Q_Omega")
        if self.gamma is not None:
            _positive("gamma", self.gamma)
        else:
            _positive("Q_Omega", self.Q_Omega)
        if self.delta is not None:
            _positive("delta", self.delta)
        if self.q_mem is not None:
            _positive("q_mem", self.q_mem)

    @property
    def damping(self) -> float:
        """Energy damping rate gamma = Omega / Q_Omega (1/s)."""
        return self.gamma if self.gamma is not None else self.Omega / self.Q_Omega

    @property
    def quality(self) -> float:
        return self.Q_Omega if self.Q_Omega is not None else self.Omega / self.gamma

    @property
    def slaved(self) -> bool:
        """True when the membrane charge is large enough to slave its motion."""
        return self.q_mem is not None and self.q_mem >= SLAVING_CHARGE


@dataclass(frozen=True)
class PumpDrive:
    """Pump magnetic field: complex amplitude ``B_p`` (T) at ``omega_p`` (rad/s)."""

    B_p: complex
    omega_p: float

    @property
    def amplitude(self) -> float:
        return abs(self.B_p)

    @property
    def phase(self) -> float:
        return cmath.phase(self.B_p)

    @classmethod
    def polar(cls, amplitude: float, phase: float, omega_p: float) -> "PumpDrive":
        return cls(cmath.rect(amplitude, phase), omega_p)


@dataclass(frozen=True)
class SeparatedCavityParams:
    """Signal/idler/pump mode frequencies (rad/s), loaded Q's and effective geometry."""

    omega_s: float
    omega_i: float
    omega_p: float
    Q_s: float
    Q_i: float
    Q_p: float
    L_eff: float
    A_eff: float = 9e-4

    def __post_init__(self):
        for name in ("omega_s", "omega_i", "omega_p", "Q_s", "Q_i", "Q_p", "L_eff", "A_eff"):
            _positive(name, getattr(self, name))

    @property
    def V_eff(self) -> float:
        return self.A_eff * self.L_eff

    @property
    def tau_s(self) -> float:
        return self.Q_s / self.omega_s

    @property
    def tau_i(self) -> float:
        return self.Q_i / self.omega_i

    @property
    def tau_p(self) -> float:
        return self.Q_p / self.omega_p

    @property
    def loss_signal(self) -> float:
        """Amplitude loss rate 2 / tau_s (1/s)."""
        return 2.0 / self.tau_s

    @property
    def loss_idler(self) -> float:
        return 2.0 / self.tau_i

    @property
    def detuning(self) -> float:
        """Frequency-matching residual ``omega_p - omega_s - omega_i`` (rad/s)."""
        return self.omega_p - self.omega_s - self.omega_i

    @classmethod
    def nominal(cls, Q: float = 1e10) -> "SeparatedCavityParams":
        """20 GHz pump, 10 GHz signal and idler, 3 cm effective length."""
        w = 2 * math.pi * 10e9
        return cls(omega_s=w, omega_i=w, omega_p=2 * w, Q_s=Q, Q_i=Q, Q_p=Q, L_eff=0.03)


@dataclass
class EnvelopeState:
    """Slowly varying membrane displacement ``eps_Omega`` (m) and idler field ``B_i`` (T)."""

    eps_Omega: complex
    B_i: complex
    t: float = 0.0


@dataclass
class ThresholdReport:
    U_p_threshold: float
    P_p_threshold: float
    Lambda_at_pump: float
    kappa_S: float | None
    loss_rates: dict
    regime: str

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


# unseparated branch --------------------------------------------------------


def maxwell_stress(E, B, constants: PhysicalConstants = CODATA) -> np.ndarray:
    """Maxwell stress tensor ``T_ij`` (Pa) for fields ``E`` (V/m) and ``B`` (T)."""
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    I = np.eye(3)
    return constants.eps_0 * (np.outer(E, E) - 0.5 * I * (E @ E)) + (np.outer(B, B) - 0.5 * I * (B @ B)) / constants.mu_0


def magnetic_pressure(B: float, constants: PhysicalConstants = CODATA) -> float:
    """Field pressure ``B^2 / (2 mu_0)`` (Pa)."""
    return B * B / (2.0 * constants.mu_0)


def beat_force(B_p: complex, B_other: complex, A_eff: float, constants: PhysicalConstants = CODATA) -> complex:
    """Complex force amplitude at the beat frequency, ``B_p conj(B_other) A_eff / mu_0`` (N).

    The physical force is ``F exp(-i Omega t) + c.c.``.
    """
    if B_other != 0 and abs(B_p) < 10.0 * abs(B_other):
        warnings.warn("pump is not much stronger than the beating wave (ratio < 10)", RuntimeWarning)
    return complex(B_p) * complex(B_other).conjugate() * A_eff / constants.mu_0


def driven_sho_response(F_Omega: complex, params: MembraneParams) -> tuple[complex, complex]:
    """On-resonance displacement and velocity amplitudes of the damped oscillator.

    ``z = i F / (m gamma Omega)`` and ``v = -i Omega z = F / (m gamma)``.
    """
    gamma = params.damping
    if gamma == 0:
        raise DomainError("undamped oscillator has no finite resonant response")
    z = 1j * complex(F_Omega) / (params.mass * gamma * params.Omega)
    return z, -1j * params.Omega * z


def stokes_gain(pump: PumpDrive, params: MembraneParams, L_eff: float, constants: PhysicalConstants = CODATA) -> float:
    """Exponential energy gain ``kappa_S`` (1/s) of the Stokes wave, ``dU_S/dt = kappa_S U_S``."""
    _positive("L_eff", L_eff)
    return 2.0 * pump.amplitude**2 * params.A_eff / (constants.mu_0 * params.mass * params.damping * L_eff)


def unseparated_threshold(m: float, Omega: float, omega_S: float, L_eff: float, Q_S: float, Q_Omega: float) -> float:
    """Threshold stored pump energy ``m Omega omega_S L_eff^2 / (2 Q_S Q_Omega)`` (J)."""
    for name, v in (("m", m), ("Omega", Omega), ("omega_S", omega_S), ("L_eff", L_eff), ("Q_S", Q_S), ("Q_Omega", Q_Omega)):
        _positive(name, v)
    return 0.5 * m * Omega * omega_S * L_eff**2 / (Q_S * Q_Omega)


def braginsky_threshold(m: float, omega_s: float, L: float, Q_i: float, Q_s: float) -> float:
    """Mirror-elastic-mode threshold ``m omega_s^2 L^2 / (2 Q_i Q_s)`` (J)."""
    for name, v in (("m", m), ("omega_s", omega_s), ("L", L), ("Q_i", Q_i), ("Q_s", Q_s)):
        _positive(name, v)
    return 0.5 * m * omega_s**2 * L**2 / (Q_i * Q_s)


# separated branch ---------------------------------------------------------


def pump_energy(B_p_abs: float, V_eff: float, constants: PhysicalConstants = CODATA) -> float:
    """Time-averaged stored pump energy ``|B_p|^2 V_eff / mu_0`` (J)."""
    return B_p_abs**2 * V_eff / constants.mu_0


def pump_field_from_energy(U_p: float, V_eff: float, constants: PhysicalConstants = CODATA) -> float:
    if U_p < 0:
        raise DomainError("stored energy must be non-negative")
    return math.sqrt(constants.mu_0 * U_p / V_eff)


def coupling_constants(
    pump: PumpDrive,
    params: MembraneParams,
    cav: SeparatedCavityParams,
    constants: PhysicalConstants = CODATA,
) -> tuple[float, float]:
    """Signal and idler coupling constants ``(K1, K2)``.

    The beat frequency is tuned to the signal mode, so ``Omega = omega_s``;
    ``params.Omega`` must agree with it.
    """
    Omega = cav.omega_s
    if not math.isclose(params.Omega, Omega, rel_tol=1e-9):
        raise DomainError(f"membrane Omega={params.Omega!r} must equal omega_s={Omega!r}")
    Bp = pump.amplitude
    K1 = cav.A_eff * Bp / (constants.mu_0 * params.mass * Omega)
    K2 = Omega * Bp / cav.L_eff
    return K1, K2


def growth_eigenvalue(K1: float, K2: float) -> tuple[float, float]:
    """Eigenvalues ``(+sqrt(K1 K2), -sqrt(K1 K2))`` of the loss-free coupling matrix."""
    if K1 < 0 or K2 < 0:
        raise DomainError("coupling constants must be non-negative")
    lam = math.sqrt(K1 * K2)
    return lam, -lam


def net_growth_rate(K1: float, K2: float, loss_signal: float, loss_idler: float, phase_sign: int = -1) -> float:
    """Leading eigenvalue of the loss-augmented system on the phase-locked branch.

    ``phase_sign=-1`` is the amplifying phase ``-pi/2`` (largest eigenvalue);
    ``+1`` is the de-amplifying phase ``+pi/2``.
    """
    mean = 0.5 * (loss_signal + loss_idler)
    root = math.sqrt(0.25 * (loss_signal - loss_idler) ** 2 + K1 * K2)
    return -mean + root if phase_sign < 0 else -mean - root


def separated_threshold(
    cav: SeparatedCavityParams,
    m: float,
    U_p: float | None = None,
    params: MembraneParams | None = None,
    constants: PhysicalConstants = CODATA,
) -> ThresholdReport:
    """Threshold pump energy and power of the separated oscillator.

    If a stored pump energy ``U_p`` is given, ``Lambda_at_pump`` and
    ``regime`` describe that operating point; otherwise they are evaluated
    at threshold. ``kappa_S`` is filled from ``params`` (the unseparated gain
    at the same pump field) when supplied.
    """
    _positive("m", m)
    U_thr = 4.0 * m * cav.omega_i * cav.omega_s * cav.L_eff**2 / (cav.Q_i * cav.Q_s)
    P_thr = U_thr / cav.tau_p
    U = U_thr if U_p is None else float(U_p)
    if U < 0:
        raise DomainError("stored pump energy must be non-negative")
    # K1 K2 = A |B_p|^2 / (mu_0 m L) = U / (m L^2)
    k1k2 = U / (m * cav.L_eff**2)
    lam = math.sqrt(k1k2)
    losses = cav.loss_signal * cav.loss_idler
    if math.isclose(k1k2, losses, rel_tol=1e-9):
        regime = "at"
    else:
        regime = "above" if k1k2 > losses else "below"
    kappa = None
    if params is not None:
        Bp = pump_field_from_energy(U, cav.V_eff, constants)
        kappa = stokes_gain(PumpDrive(Bp, cav.omega_p), params, cav.L_eff, constants)
    return ThresholdReport(
        U_p_threshold=U_thr,
        P_p_threshold=P_thr,
        Lambda_at_pump=lam,
        kappa_S=kappa,
        loss_rates={"idler": cav.loss_idler, "signal": cav.loss_signal},
        regime=regime,
    )


@dataclass
class EnvelopeRun:
    """Integrated envelopes with the fitted and predicted net growth rates (1/s)."""

    t: np.ndarray
    eps: np.ndarray
    B_i: np.ndarray
    fitted_rate: float
    predicted_rate: float
    K1: float
    K2: float

    CSV_HEADER = ("t_s", "eps_abs_m", "eps_phase_rad", "bi_abs_t", "bi_phase_rad")

    def states(self):
        for t, e, b in zip(self.t, self.eps, self.B_i):
            yield EnvelopeState(complex(e), complex(b), float(t))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.CSV_HEADER)
            for t, e, b in zip(self.t, self.eps, self.B_i):
                w.writerow([f"{v:.9g}" for v in (t, abs(e), cmath.phase(e), abs(b), cmath.phase(b))])


def _fit_rate(t, amp):
    half = len(t) // 2
    tt, aa = t[half:], amp[half:]
    ok = aa > 0
    if ok.sum() < 2:
        return float("-inf")
    slope, _ = np.polyfit(tt[ok], np.log(aa[ok]), 1)
    return float(slope)


def integrate_envelopes(
    cav: SeparatedCavityParams,
    pump: PumpDrive,
    params: MembraneParams,
    initial: EnvelopeState,
    phases: dict | None = None,
    t_end: float = 10.0,
    dt: float | None = None,
    constants: PhysicalConstants = CODATA,
    sample_every: int = 1,
) -> EnvelopeRun:
    """Integrate the coupled signal/idler envelopes with fixed-step RK4.

    The complex system is

        d eps/dt = +i K1 exp(i phi_p) conj(B_i) - (2/tau_s) eps
        d B_i/dt = +i K2 exp(i phi_p) conj(eps) - (2/tau_i) B_i

    whose magnitudes grow at the coupling rate when
    ``phi_p - phi_i - phi_s = -pi/2`` and decay when it is ``+pi/2``. The pump
    is undepleted. ``phases`` (keys ``phi_p``, ``phi_i``, ``phi_s``) override
    the phases of the pump and of the initial envelopes.

    The growth rate is a least-squares exponential fit to ``|eps|`` over the
    second half of the run.

    Above threshold the ``+pi/2`` configuration is the decaying eigenvector
    of an unstable system: rounding error seeds the growing mode, which
    overtakes the decay after roughly ``(|decay| + growth)^-1 * ln(1e16)``
    seconds. Keep ``t_end`` short (about 1 s at the default parameters) to
    observe the decay.

    Raises
    ------
    DetuningError
        ``|omega_p - omega_s - omega_i| * max(tau_s, tau_i) > 1``.
    StepSizeError
        ``dt > 0.01 / r_max`` with ``r_max`` the largest eigenvalue magnitude,
        ``(a_s + a_i)/2 + sqrt((a_s - a_i)^2/4 + K1 K2)`` for loss rates ``a``.
    NumericalError
        The state became non-finite; ``exc.partial`` holds the series so far.
    """
    tau = max(cav.tau_s, cav.tau_i)
    if abs(cav.detuning) * tau > 1.0:
        raise DetuningError(
            f"frequency mismatch {cav.detuning:.6g} rad/s exceeds the linewidth 1/tau = {1 / tau:.6g} rad/s"
        )
    phases = dict(phases or {})
    unknown = set(phases) - {"phi_p", "phi_i", "phi_s"}
    if unknown:
        raise DomainError(f"unknown phase keys {sorted(unknown)}")
    phi_p = phases.get("phi_p", pump.phase)
    eps0 = complex(initial.eps_Omega)
    b0 = complex(initial.B_i)
    if "phi_s" in phases:
        eps0 = cmath.rect(abs(eps0), phases["phi_s"])
    if "phi_i" in phases:
        b0 = cmath.rect(abs(b0), phases["phi_i"])

    K1, K2 = coupling_constants(pump, params, cav, constants)
    a_s, a_i = cav.loss_signal, cav.loss_idler
    # magnitude of the decaying eigenvalue, the fastest rate in the system
    fastest = -net_growth_rate(K1, K2, a_s, a_i, +1)
    if dt is None:
        dt = 0.01 / fastest
    elif dt > 0.01 / fastest * (1 + 1e-12):
        raise StepSizeError(f"dt={dt:.6g} s exceeds 0.01/max rate = {0.01 / fastest:.6g} s")
    n, h = fixed_steps(t_end, dt)

    c1 = 1j * K1 * cmath.exp(1j * phi_p)
    c2 = 1j * K2 * cmath.exp(1j * phi_p)

    def rhs(_t, y):
        e, b = y
        return np.array([c1 * b.conjugate() - a_s * e, c2 * e.conjugate() - a_i * b])

    y = np.array([eps0, b0], dtype=complex)
    ts, es, bs = [initial.t], [eps0], [b0]
    for k in range(1, n + 1):
        # overflow is reported below as NumericalError, not as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            y = rk4_step(rhs, initial.t + (k - 1) * h, y, h)
        if not np.all(np.isfinite(y)):
            partial = EnvelopeRun(np.array(ts), np.array(es), np.array(bs), float("nan"), float("nan"), K1, K2)
            raise NumericalError(f"non-finite envelope at step {k} (t={initial.t + k * h:.6g} s): {y}", partial)
        if k % sample_every == 0 or k == n:
            ts.append(initial.t + k * h)
            es.append(y[0])
            bs.append(y[1])
    t = np.array(ts)
    eps = np.array(es)
    bi = np.array(bs)
    predicted = _dominant_rate(np.array([[-a_s, c1], [c2.conjugate(), -a_i]]), np.array([eps0, b0.conjugate()]))
    return EnvelopeRun(t, eps, bi, _fit_rate(t, np.abs(eps)), predicted, K1, K2)


def _dominant_rate(M, u0):
    # linear in (eps, conj(B_i)); eigenvalues are real because c1 conj(c2) = K1 K2
    w, V = np.linalg.eig(M)
    coef = np.linalg.solve(V, u0)
    weight = np.abs(coef) * np.linalg.norm(V, axis=0)
    live = weight > 1e-9 * max(weight.max(), 1e-300)
    return float(np.max(w.real[live]))


def channel_powers(
    state: EnvelopeState,
    pump: PumpDrive,
    params: MembraneParams,
    cav: SeparatedCavityParams,
    constants: PhysicalConstants = CODATA,
) -> tuple[float, float]:
    """Coupling power delivered to the signal (membrane) and idler channels (W).

    Signal: ``-2 Im(B_p conj(B_i) A_eff Omega conj(eps) / mu_0)``. Idler: the
    motional field ``conj(nu) B_p`` acting on the idler supercurrent. Both
    equal ``2 A_eff Omega |B_p||B_i||eps| / mu_0`` at the optimal phase.
    """
    Omega = cav.omega_s
    eps, bi, bp = complex(state.eps_Omega), complex(state.B_i), complex(pump.B_p)
    p_signal = -2.0 * (bp * bi.conjugate() * cav.A_eff * Omega * eps.conjugate() / constants.mu_0).imag
    nu = -1j * Omega * eps
    E_i = motional_idler_field(nu, bp)
    p_idler = 2.0 * (bi.conjugate() * E_i / constants.mu_0 * cav.A_eff).real
    return p_signal, p_idler


def motional_idler_field(v: complex, B_p: complex) -> complex:
    """Idler motional electric field amplitude ``conj(v) B_p`` (V/m)."""
    return complex(v).conjugate() * complex(B_p)


def surface_current_from_field(B_i: complex, delta: float, constants: PhysicalConstants = CODATA) -> complex:
    """Idler supercurrent density ``B_i / (mu_0 delta)`` (A/m^2)."""
    _positive("delta", delta)
    return complex(B_i) / (constants.mu_0 * delta)
