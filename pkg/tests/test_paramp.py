import json
import math

import numpy as np
import pytest

from gempl.constants import CODATA
from gempl.errors import DetuningError, DomainError, NumericalError, StepSizeError
from gempl.paramp import (
    SLAVING_CHARGE,
    EnvelopeState,
    MembraneParams,
    PumpDrive,
    SeparatedCavityParams,
    beat_force,
    braginsky_threshold,
    channel_powers,
    coupling_constants,
    driven_sho_response,
    growth_eigenvalue,
    integrate_envelopes,
    magnetic_pressure,
    maxwell_stress,
    motional_idler_field,
    net_growth_rate,
    pump_energy,
    pump_field_from_energy,
    separated_threshold,
    stokes_gain,
    surface_current_from_field,
    unseparated_threshold,
)

MU0 = CODATA.mu_0
TWO_PI = 2 * math.pi
M = 2e-6


@pytest.fixture
def cav():
    return SeparatedCavityParams.nominal()


def membrane(cav, **kw):
    return MembraneParams(M, cav.omega_s, Q_Omega=1e10, **kw)


def pump_at(cav, fraction, phase=0.0):
    U = fraction * separated_threshold(cav, M).U_p_threshold
    return PumpDrive.polar(pump_field_from_energy(U, cav.V_eff), phase, cav.omega_p)


def matched_state(cav, pump, dphi=-1, b0=1e-12):
    """Initial state on the pure growing (dphi=-1) or decaying (dphi=+1) eigenvector."""
    K1, K2 = coupling_constants(pump, membrane(cav), cav)
    eps = math.sqrt(K1 / K2) * b0 * np.exp(1j * (-dphi * math.pi / 2))
    return EnvelopeState(eps, b0)


# stress chain --------------------------------------------------------------------------


def test_maxwell_stress_examples(rng):
    assert np.all(maxwell_stress(np.zeros(3), np.zeros(3)) == 0)
    By = 0.3
    T = maxwell_stress(np.zeros(3), [0, By, 0])
    assert np.allclose(np.diag(T), np.array([-1, 1, -1]) * By**2 / (2 * MU0), rtol=1e-14, atol=0)
    assert np.all(T == T.T)
    for _ in range(20):
        E = rng.normal(size=3) * 1e5
        B = np.cross(E, rng.normal(size=3))
        B *= 1e-3 / np.linalg.norm(B)
        trace = np.trace(maxwell_stress(E, B))
        expected = -(CODATA.eps_0 * E @ E / 2 + B @ B / (2 * MU0))
        assert trace == pytest.approx(expected, rel=1e-12)


def test_magnetic_pressure():
    assert magnetic_pressure(0.0) == 0.0
    assert magnetic_pressure(1.0) == pytest.approx(3.98e5, rel=1e-3)
    assert magnetic_pressure(2.0) == pytest.approx(4 * magnetic_pressure(1.0), rel=1e-15)


def test_beat_force():
    assert beat_force(1e-3, 0.0, 9e-4) == 0
    assert abs(beat_force(1e-3, 1e-6, 9e-4)) == pytest.approx(7.16e-7, rel=1e-3)
    F = beat_force(1e-3 * np.exp(0.7j), 1e-6 * np.exp(-0.2j), 9e-4)
    assert np.angle(F) == pytest.approx(0.9, rel=1e-12)
    with pytest.warns(RuntimeWarning):
        beat_force(1e-3, 5e-4, 9e-4)


def test_driven_sho_response():
    mem = MembraneParams(M, TWO_PI * 4e8, Q_Omega=1e5)
    assert driven_sho_response(0.0, mem) == (0, 0)
    F = beat_force(1e-3, 1e-6, 9e-4)
    z, v = driven_sho_response(F, mem)
    assert abs(z) == pytest.approx(5.7e-15, rel=0.01)
    assert abs(z) == pytest.approx(1e-9 * 9e-4 / (MU0 * M * mem.damping * mem.Omega), rel=1e-12)
    assert abs(v) == pytest.approx(mem.Omega * abs(z), rel=1e-14)


def test_membrane_validation_and_slaving():
    with pytest.raises(DomainError):
        MembraneParams(M, 1.0)  # neither gamma nor Q
    with pytest.raises(DomainError):
        MembraneParams(M, 1.0, gamma=1.0, Q_Omega=1.0)
    with pytest.raises(DomainError):
        MembraneParams(M, 1.0, gamma=0.0)
    assert MembraneParams(M, 1.0, gamma=1.0, q_mem=SLAVING_CHARGE).slaved
    assert not MembraneParams(M, 1.0, gamma=1.0, q_mem=1e-12).slaved
    assert MembraneParams(M, 10.0, Q_Omega=5.0).damping == 2.0


# unseparated branch -------------------------------------------------------------------


def test_stokes_gain():
    mem = MembraneParams(M, TWO_PI * 4e8, Q_Omega=1e5)
    assert mem.damping == pytest.approx(2.513e4, rel=1e-3)
    assert stokes_gain(PumpDrive(0.0, 1.0), mem, 0.03) == 0.0
    k = stokes_gain(PumpDrive(1e-3, 1.0), mem, 0.03)
    assert k == pytest.approx(0.95, rel=0.01)
    assert stokes_gain(PumpDrive(2e-3, 1.0), mem, 0.03) == pytest.approx(4 * k, rel=1e-14)


def test_unseparated_threshold():
    args = dict(m=M, Omega=TWO_PI * 4e8, omega_S=TWO_PI * 1.13e10, L_eff=0.03, Q_S=1e10, Q_Omega=1e5)
    U = unseparated_threshold(**args)
    # direct evaluation of m Omega omega_S L^2 / (2 Q_S Q_Omega)
    assert U == pytest.approx(1.606e-4, rel=1e-3)
    assert unseparated_threshold(**{**args, "Q_S": 1e30}) < 1e-23
    # kappa_S at threshold equals the Stokes loss rate
    mem = MembraneParams(M, args["Omega"], Q_Omega=1e5)
    V = 9e-4 * 0.03
    kappa = stokes_gain(PumpDrive(pump_field_from_energy(U, V), 1.0), mem, 0.03)
    assert kappa == pytest.approx(args["omega_S"] / args["Q_S"], rel=1e-12)


def test_gain_law_regression(cav):
    mem = MembraneParams(M, cav.omega_s, Q_Omega=1e5)
    p1, p2 = pump_at(cav, 1.0), pump_at(cav, 2.0)
    assert stokes_gain(p2, mem, cav.L_eff) == pytest.approx(2 * stokes_gain(p1, mem, cav.L_eff), rel=1e-12)
    l1 = growth_eigenvalue(*coupling_constants(p1, membrane(cav), cav))[0]
    l2 = growth_eigenvalue(*coupling_constants(p2, membrane(cav), cav))[0]
    assert l2 == pytest.approx(math.sqrt(2) * l1, rel=1e-12)


# separated branch ----------------------------------------------------------------------


def test_braginsky(rng):
    for _ in range(20):
        m, ws, wi, L, Qi, Qs = rng.uniform(0.1, 10, 6)
        cav = SeparatedCavityParams(ws, wi, ws + wi, Qs, Qi, 1.0, L)
        ratio = braginsky_threshold(m, ws, L, Qi, Qs) / separated_threshold(cav, m).U_p_threshold
        assert ratio == pytest.approx(ws / (8 * wi), rel=1e-14)
    cav = SeparatedCavityParams.nominal()
    assert braginsky_threshold(M, cav.omega_s, 0.03, 1e10, 1e10) / separated_threshold(cav, M).U_p_threshold == pytest.approx(1 / 8, rel=1e-14)
    assert braginsky_threshold(1, 1, 1, 2, 1) == pytest.approx(braginsky_threshold(1, 1, 1, 1, 1) / 2, rel=1e-15)


def test_coupling_constants(cav):
    mem = membrane(cav)
    assert coupling_constants(PumpDrive(0.0, cav.omega_p), mem, cav) == (0.0, 0.0)
    B = 1e-4
    K1, K2 = coupling_constants(PumpDrive(B * 1j, cav.omega_p), mem, cav)
    assert K1 * K2 == pytest.approx(cav.A_eff * B**2 / (MU0 * M * cav.L_eff), rel=1e-14)
    with pytest.raises(DomainError):
        coupling_constants(PumpDrive(B, cav.omega_p), MembraneParams(M, 1.0, Q_Omega=1.0), cav)


def test_growth_eigenvalue():
    assert growth_eigenvalue(0.0, 5.0) == (0.0, 0.0)
    assert growth_eigenvalue(4.0, 9.0) == (6.0, -6.0)
    with pytest.raises(DomainError):
        growth_eigenvalue(-1.0, 1.0)


def test_threshold_eigenvalue_identity(rng):
    for _ in range(100):
        ws, wi = TWO_PI * rng.uniform(1e9, 3e10, 2)
        cav = SeparatedCavityParams(ws, wi, ws + wi, *(10 ** rng.uniform(4, 11, 3)), rng.uniform(1e-3, 0.3), rng.uniform(1e-5, 1e-2))
        m = 10 ** rng.uniform(-9, -3)
        U = separated_threshold(cav, m).U_p_threshold
        pump = PumpDrive(pump_field_from_energy(U, cav.V_eff), cav.omega_p)
        K1, K2 = coupling_constants(pump, MembraneParams(m, ws, Q_Omega=1e6), cav)
        lam = growth_eigenvalue(K1, K2)[0]
        assert lam == pytest.approx(2 / math.sqrt(cav.tau_i * cav.tau_s), rel=1e-10)


def test_separated_threshold_nominal_values(cav):
    rep = separated_threshold(cav, M)
    assert rep.U_p_threshold == pytest.approx(2.84e-7, rel=2e-3)
    assert rep.P_p_threshold == pytest.approx(3.57e-6, rel=1e-3)
    assert abs(rep.P_p_threshold / 4e-6 - 1) < 0.15
    assert rep.Lambda_at_pump == pytest.approx(12.566, rel=1e-4)
    assert rep.regime == "at"
    assert rep.kappa_S is None
    low_q = separated_threshold(SeparatedCavityParams.nominal(Q=1e9), M)
    assert low_q.P_p_threshold == pytest.approx(1000 * rep.P_p_threshold, rel=1e-12)
    assert low_q.P_p_threshold == pytest.approx(3.57e-3, rel=1e-3)


def test_threshold_regimes(cav):
    U = separated_threshold(cav, M).U_p_threshold
    assert separated_threshold(cav, M, U_p=1.1 * U).regime == "above"
    assert separated_threshold(cav, M, U_p=0.9 * U).regime == "below"
    with pytest.raises(DomainError):
        separated_threshold(cav, M, U_p=-1.0)


def test_threshold_report_json(cav):
    rep = separated_threshold(cav, M, params=MembraneParams(M, TWO_PI * 4e8, Q_Omega=1e5))
    d = json.loads(rep.to_json())
    assert list(d) == ["U_p_threshold", "P_p_threshold", "Lambda_at_pump", "kappa_S", "loss_rates", "regime"]
    assert set(d["loss_rates"]) == {"idler", "signal"}
    assert d["kappa_S"] > 0
    assert all(v >= 0 for v in (d["U_p_threshold"], d["P_p_threshold"], d["Lambda_at_pump"], *d["loss_rates"].values()))


def test_pump_energy_round_trip():
    assert pump_field_from_energy(pump_energy(3e-4, 2.7e-5), 2.7e-5) == pytest.approx(3e-4, rel=1e-15)
    with pytest.raises(DomainError):
        pump_field_from_energy(-1.0, 1.0)


def test_motional_field_and_current():
    assert motional_idler_field(0, 1e-3) == 0
    assert abs(motional_idler_field(1e-6j, 1e-3)) == pytest.approx(1e-9, rel=1e-15)
    E = motional_idler_field(1e-6 * np.exp(0.4j), 1e-3 * np.exp(1.1j))
    assert np.angle(E) == pytest.approx(0.7, rel=1e-12)
    assert surface_current_from_field(0, 1e-7) == 0
    j = surface_current_from_field(1e-6, 1e-7)
    assert abs(j) == pytest.approx(7.96e6, rel=1e-3)
    assert j * 1e-7 * MU0 == pytest.approx(1e-6, rel=1e-15)
    with pytest.raises(DomainError):
        surface_current_from_field(1e-6, 0.0)


# envelope integration ------------------------------------------------------------------


def test_zero_pump_decays_at_loss_rate(cav):
    run = integrate_envelopes(cav, PumpDrive(0.0, cav.omega_p), membrane(cav), EnvelopeState(1e-12, 1e-9), t_end=0.5)
    assert run.fitted_rate == pytest.approx(-cav.loss_signal, rel=0.01)
    bi_rate = np.polyfit(run.t, np.log(np.abs(run.B_i)), 1)[0]
    assert bi_rate == pytest.approx(-cav.loss_idler, rel=0.01)


@pytest.mark.parametrize("fraction", [1.1, 0.9])
def test_envelope_rate_matches_eigenvalue(cav, fraction):
    pump = pump_at(cav, fraction)
    run = integrate_envelopes(cav, pump, membrane(cav), matched_state(cav, pump))
    lam_thr = 2 / math.sqrt(cav.tau_i * cav.tau_s)
    expected = math.sqrt(fraction) * lam_thr - 0.5 * (cav.loss_idler + cav.loss_signal)
    assert run.fitted_rate == pytest.approx(expected, rel=0.02)
    assert run.predicted_rate == pytest.approx(expected, rel=1e-10)
    assert np.sign(run.fitted_rate) == np.sign(fraction - 1)


def test_phase_flip_turns_growth_into_decay(cav):
    pump = pump_at(cav, 1.1)
    grow = integrate_envelopes(cav, pump, membrane(cav), matched_state(cav, pump, -1), t_end=1.0)
    # phi_s -> phi_s + pi
    decay = integrate_envelopes(cav, pump, membrane(cav), matched_state(cav, pump, +1), t_end=1.0)
    assert grow.fitted_rate > 0 > decay.fitted_rate
    assert np.all(np.diff(np.abs(decay.eps)) < 0)
    mean_loss = 0.5 * (cav.loss_signal + cav.loss_idler)
    assert decay.fitted_rate + mean_loss == pytest.approx(-(grow.fitted_rate + mean_loss), rel=0.02)
    K1, K2 = coupling_constants(pump, membrane(cav), cav)
    assert decay.fitted_rate == pytest.approx(net_growth_rate(K1, K2, cav.loss_signal, cav.loss_idler, +1), rel=0.02)


def test_phases_override(cav):
    pump = pump_at(cav, 1.1)
    st = EnvelopeState(1e-20, 1e-12)
    run = integrate_envelopes(cav, pump, membrane(cav), st, phases={"phi_p": 0.0, "phi_i": 0.0, "phi_s": math.pi / 2}, t_end=1.0)
    assert np.angle(run.eps[0]) == pytest.approx(math.pi / 2)
    with pytest.raises(DomainError):
        integrate_envelopes(cav, pump, membrane(cav), st, phases={"phi_x": 0.0})


def test_energy_flow_symmetry(cav):
    pump = pump_at(cav, 1.1)
    mem = membrane(cav)
    run = integrate_envelopes(cav, pump, mem, matched_state(cav, pump), t_end=2.0, sample_every=50)
    for state in run.states():
        ps, pi_ = channel_powers(state, pump, mem, cav)
        ref = 2 * cav.A_eff * cav.omega_s * pump.amplitude * abs(state.B_i) * abs(state.eps_Omega) / MU0
        assert ps == pytest.approx(pi_, rel=0.01)
        assert ps == pytest.approx(ref, rel=0.01)


def test_detuning_error(cav):
    detuned = SeparatedCavityParams(cav.omega_s, cav.omega_i, cav.omega_p + 10.0, cav.Q_s, cav.Q_i, cav.Q_p, cav.L_eff)
    assert abs(detuned.detuning) * max(detuned.tau_s, detuned.tau_i) > 1
    with pytest.raises(DetuningError):
        integrate_envelopes(detuned, pump_at(cav, 1.0), membrane(cav), EnvelopeState(1e-20, 1e-12))
    slight = SeparatedCavityParams(cav.omega_s, cav.omega_i, cav.omega_p + 1.0, cav.Q_s, cav.Q_i, cav.Q_p, cav.L_eff)
    integrate_envelopes(slight, pump_at(cav, 1.0), membrane(cav), EnvelopeState(1e-20, 1e-12), t_end=0.1)


def test_step_size_error(cav):
    with pytest.raises(StepSizeError):
        integrate_envelopes(cav, pump_at(cav, 1.1), membrane(cav), EnvelopeState(1e-20, 1e-12), dt=0.01)


def test_non_finite_state_aborts(cav):
    pump = pump_at(cav, 4.0)
    with pytest.raises(NumericalError) as info:
        integrate_envelopes(cav, pump, membrane(cav), matched_state(cav, pump, b0=1e306), t_end=10.0)
    partial = info.value.partial
    assert partial is not None and len(partial.t) > 1
    assert np.all(np.isfinite(partial.eps))


def test_envelope_csv(cav, tmp_path):
    run = integrate_envelopes(cav, pump_at(cav, 1.1), membrane(cav), EnvelopeState(1e-20, 1e-12), t_end=0.1, sample_every=100)
    p = tmp_path / "env.csv"
    run.write_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t_s,eps_abs_m,eps_phase_rad,bi_abs_t,bi_phase_rad"
    assert len(lines) == len(run.t) + 1
