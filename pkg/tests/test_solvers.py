"""
Lumped Solver Tests
===================

Heating and melting kernels against independent linear solves and a
closed-form melting oracle, guard location, truncation and the
Heating/Melting/Empty state machine.
"""

import dataclasses

import numpy as np
import pytest

from conftest import make_config
from cosim.config import Integration, InterfaceRole
from cosim.errors import ConfigurationError, FieldValidationError, PreconditionError, SolverFailure
from cosim.model import BoundarySpec, InterfaceVariables, InterfaceWaveform, SubdomainState
from cosim.solvers import (HEATING_TO_MELTING, MELTING_TO_EMPTY, Guard, LumpedSolver, Phase,
                           StateTransition, ThresholdParams, advance_empty, advance_heating,
                           advance_melting, step_state_machine)

DIRICHLET = InterfaceRole.DIRICHLET_RECEIVER
NEUMANN = InterfaceRole.NEUMANN_RECEIVER


class TestHeatingOracle:
    """Implicit heating steps against a direct solve of the step equations"""

    def test_dirichlet_step_matches_linear_solve(self):
        cfg = make_config(micro_step=100.0, boundary_exchange=True, residual_power=5.0,
                          boundary_temperature=3000.0)
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        face, h = 2100.0, 100.0
        outcome = advance_heating(state, InterfaceVariables(temperature=face), 0.0, h, cfg, DIRICHLET,
                                  neighbor="2")

        m, c, a, area, t_b = 100.0, 1000.0, 100.0, 1.0, 3000.0
        # unknowns: T, interface flux, boundary flux
        matrix = np.array([[m * c / h, area, area],
                           [-6.0 * a, 1.0, 0.0],
                           [-6.0 * a, 0.0, 1.0]])
        rhs = np.array([m * c * 2000.0 / h + m * 5.0,
                        -a * (4.0 * face + 2.0 * t_b),
                        -a * (4.0 * t_b + 2.0 * face)])
        temperature, flux, _ = np.linalg.solve(matrix, rhs)

        assert outcome.new_state.avg_temperature == pytest.approx(temperature, rel=1e-12)
        assert outcome.output.heat_flux == pytest.approx(flux, rel=1e-12)
        assert outcome.output.temperature == face
        assert outcome.end_time == h
        assert outcome.event is None

    def test_neumann_step_matches_linear_solve(self):
        cfg = make_config(micro_step=50.0, boundary_exchange=True, boundary_temperature=2500.0)
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        incoming, h = InterfaceVariables(heat_flux=3.0e4), 50.0
        outcome = advance_heating(state, incoming, 0.0, h, cfg, NEUMANN, neighbor="1")

        m, c, a, area, t_b = 100.0, 1000.0, 100.0, 1.0, 2500.0
        flux = -3.0e4
        # unknowns: T, face temperature, boundary flux
        matrix = np.array([[m * c / h, 0.0, area],
                           [-6.0, 4.0, 0.0],
                           [-6.0 * a, 2.0 * a, 1.0]])
        rhs = np.array([m * c * 2000.0 / h - area * flux,
                        -2.0 * t_b - flux / a,
                        -4.0 * a * t_b])
        temperature, face, _ = np.linalg.solve(matrix, rhs)

        assert outcome.new_state.avg_temperature == pytest.approx(temperature, rel=1e-12)
        assert outcome.output.temperature == pytest.approx(face, rel=1e-12)
        assert outcome.output.heat_flux == flux

    def test_explicit_neumann_without_boundary_is_linear_in_time(self):
        cfg = make_config(micro_step=10.0, integration=Integration.EXPLICIT_EULER)
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        outcome = advance_heating(state, InterfaceVariables(heat_flux=1.0e3), 0.0, 100.0, cfg, NEUMANN)
        # absorbed energy = flux * A * dt
        assert outcome.new_state.avg_temperature == pytest.approx(2000.0 + 1.0e3 * 100.0 / 1.0e5)

    def test_inflow_adds_mass_at_face_temperature(self):
        cfg = make_config(micro_step=100.0)
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        incoming = InterfaceVariables(temperature=2100.0, mass_flow_rate=0.05)
        outcome = advance_heating(state, incoming, 0.0, 100.0, cfg, DIRICHLET)
        assert outcome.new_state.mass == pytest.approx(105.0)
        assert outcome.output.mass_flow_rate == pytest.approx(-0.05)

    def test_non_finite_input_rejected(self, heating_config):
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        with pytest.raises(FieldValidationError):
            advance_heating(state, _nan_input(), 0.0, 10.0, heating_config, DIRICHLET)


def _nan_input():
    # InterfaceVariables refuses NaN, so bypass its validation
    value = InterfaceVariables(temperature=2000.0)
    object.__setattr__(value, "temperature", float("nan"))
    return value


class TestGuards:
    """Guard location and truncation"""

    def _heating(self, stop_at_event=True, dt=2000.0):
        cfg = make_config(density=500.0, heat_capacity=500.0, conductivity=1.25, length=0.05,
                          micro_step=10.0, boundary_temperature=2000.0,
                          fusion_enthalpy=1.5e5, fusion_temperature=2100.0)
        state = SubdomainState(mass=500.0 * 0.05, avg_temperature=2000.0)
        thresholds = ThresholdParams(melt_trigger=2300.0, residual_mass=5.0)
        return advance_heating(state, InterfaceVariables(heat_flux=2.0e4), 0.0, dt, cfg, NEUMANN,
                               thresholds=thresholds, stop_at_event=stop_at_event)

    def test_face_temperature_crossing_located(self):
        outcome = self._heating()
        # face = 2200 + 2.4 t once the flux is imposed (capacity 12500 J/K)
        capacity = 25.0 * 500.0
        rate = 1.5 * 2.0e4 / capacity
        expected = (2300.0 - 2200.0) / rate
        assert outcome.event is not None
        assert outcome.event.transition == HEATING_TO_MELTING
        assert outcome.event.event_time == pytest.approx(expected, rel=1e-9)
        assert outcome.truncated
        assert outcome.end_time == outcome.event.event_time
        assert outcome.output.temperature == pytest.approx(2300.0, rel=1e-9)

    def test_truncated_state_is_bit_identical_to_direct_run(self):
        truncated = self._heating()
        direct = self._heating(stop_at_event=False, dt=truncated.end_time)
        assert direct.new_state == truncated.new_state
        assert direct.output == truncated.output

    def test_recorded_event_keeps_integrating(self):
        outcome = self._heating(stop_at_event=False)
        assert outcome.event is not None
        assert not outcome.truncated
        assert outcome.end_time == 2000.0
        assert outcome.event.event_time < 2000.0

    def test_no_thresholds_no_event(self, heating_config):
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        outcome = advance_heating(state, InterfaceVariables(heat_flux=1.0e6), 0.0, 1000.0,
                                  heating_config, NEUMANN)
        assert outcome.event is None

    def test_last_micro_step_lands_on_step_end(self, heating_config):
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        outcome = advance_heating(state, InterfaceVariables(temperature=2000.0), 0.3, 250.0,
                                  heating_config, DIRICHLET)
        assert outcome.end_time == 0.3 + 250.0


class TestWaveformExchange:
    """Sampled outputs and time-resolved inputs"""

    def test_outputs_sampled_at_micro_step_ends(self):
        cfg = make_config(micro_step=10.0)
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        outcome = advance_heating(state, InterfaceVariables(temperature=2100.0), 0.0, 45.0, cfg,
                                  DIRICHLET, neighbor="2")
        waveform = outcome.waveforms["2"]
        assert waveform.times == pytest.approx((10.0, 20.0, 30.0, 40.0, 45.0))
        assert waveform.samples[-1] == outcome.output
        assert outcome.exchanged("2") is waveform

    def test_constant_waveform_matches_plain_input(self):
        cfg = make_config(micro_step=10.0, boundary_exchange=True)
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        value = InterfaceVariables(heat_flux=2.0e4)
        waveform = InterfaceWaveform.constant(value, 0.0, (10.0, 20.0, 30.0))
        plain = advance_heating(state, value, 0.0, 30.0, cfg, NEUMANN)
        sampled = advance_heating(state, waveform, 0.0, 30.0, cfg, NEUMANN)
        assert sampled.new_state == plain.new_state
        assert sampled.output == plain.output

    def test_implicit_step_reads_input_at_step_end(self):
        cfg = make_config(micro_step=100.0, boundary_exchange=True)
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        ramp = InterfaceWaveform(0.0, InterfaceVariables(heat_flux=0.0), (100.0,),
                                 (InterfaceVariables(heat_flux=3.0e4),))
        from_ramp = advance_heating(state, ramp, 0.0, 100.0, cfg, NEUMANN)
        from_end = advance_heating(state, InterfaceVariables(heat_flux=3.0e4), 0.0, 100.0, cfg, NEUMANN)
        assert from_ramp.new_state == from_end.new_state

    def test_explicit_step_reads_input_at_step_start(self):
        cfg = make_config(micro_step=100.0, integration=Integration.EXPLICIT_EULER)
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        ramp = InterfaceWaveform(0.0, InterfaceVariables(heat_flux=0.0), (100.0,),
                                 (InterfaceVariables(heat_flux=3.0e4),))
        outcome = advance_heating(state, ramp, 0.0, 100.0, cfg, NEUMANN)
        assert outcome.new_state.avg_temperature == pytest.approx(2000.0)


class TestBoundarySign:
    """The face-flux sign does not enter the energy balance"""

    @pytest.mark.parametrize("role, incoming", [
        (DIRICHLET, InterfaceVariables(temperature=2100.0)),
        (NEUMANN, InterfaceVariables(heat_flux=2.0e4)),
    ])
    def test_heating_and_cooling_signs_agree(self, role, incoming):
        heating = make_config(micro_step=10.0, boundary_exchange=True)
        cooling = dataclasses.replace(heating, boundary=BoundarySpec.constant(3000.0, sign=-1))
        state = SubdomainState(mass=100.0, avg_temperature=2000.0)
        first = advance_heating(state, incoming, 0.0, 100.0, heating, role)
        second = advance_heating(state, incoming, 0.0, 100.0, cooling, role)
        assert first.new_state == second.new_state
        assert first.output == second.output
        assert cooling.exchange_factor == heating.exchange_factor == 1.0


class TestMeltingOracle:
    """Linear mass decay of a slab held at the fusion temperature"""

    def test_linear_decay_and_empty_event(self, melting_config):
        state = SubdomainState(mass=500.0, avg_temperature=2100.0)
        thresholds = ThresholdParams(melt_trigger=2100.0, residual_mass=150.0)
        incoming = InterfaceVariables(heat_flux=1.5e4)
        outcome = advance_melting(state, incoming, 0.0, 5000.0, melting_config, thresholds)

        melt_rate = 1.5e4 / 1.5e5
        expected = (500.0 - 150.0) / melt_rate
        assert outcome.event.transition == MELTING_TO_EMPTY
        assert abs(outcome.event.event_time - expected) <= melting_config.micro_step
        assert outcome.output.mass_flow_rate == pytest.approx(melt_rate, rel=1e-9)
        assert outcome.output.temperature == 2100.0
        assert outcome.new_state.mass == pytest.approx(150.0, abs=melt_rate * melting_config.micro_step)

    def test_partial_decay_without_event(self, melting_config):
        state = SubdomainState(mass=500.0, avg_temperature=2100.0)
        thresholds = ThresholdParams(melt_trigger=2100.0, residual_mass=150.0)
        outcome = advance_melting(state, InterfaceVariables(heat_flux=1.5e4), 0.0, 1000.0,
                                  melting_config, thresholds)
        assert outcome.event is None
        assert outcome.new_state.mass == pytest.approx(400.0, rel=1e-9)

    def test_reversed_flow_returns_to_heating(self, melting_config):
        state = SubdomainState(mass=500.0, avg_temperature=2100.0)
        thresholds = ThresholdParams(melt_trigger=2100.0, residual_mass=150.0)
        outcome = advance_melting(state, InterfaceVariables(heat_flux=-1.5e4), 0.0, 100.0,
                                  melting_config, thresholds)
        assert outcome.event is not None
        assert outcome.event.transition.guard is Guard.MASS_FLOW_REVERSED
        assert outcome.event.event_time == melting_config.micro_step
        assert outcome.truncated

    def test_requires_mass_above_residual(self, melting_config):
        thresholds = ThresholdParams(melt_trigger=2100.0, residual_mass=150.0)
        with pytest.raises(PreconditionError):
            advance_melting(SubdomainState(mass=150.0, avg_temperature=2100.0),
                            InterfaceVariables(heat_flux=1.0), 0.0, 10.0, melting_config, thresholds)


class TestEmptyPhase:
    """Residue slab conducts but never raises an event"""

    def test_empty_never_fires(self, melting_config):
        state = SubdomainState(mass=150.0, avg_temperature=2100.0)
        outcome = advance_empty(state, InterfaceVariables(heat_flux=-1.0e5), 0.0, 1000.0, melting_config)
        assert outcome.event is None
        assert outcome.new_state.mass == 150.0

    def test_zero_mass_face_sits_on_boundary(self, melting_config):
        state = SubdomainState(mass=0.0, avg_temperature=2100.0)
        outcome = advance_empty(state, InterfaceVariables(heat_flux=10.0), 0.0, 100.0, melting_config)
        assert outcome.new_state == state
        assert outcome.output.temperature == 2100.0


class TestLumpedSolver:
    """The black-box wrapper and its state machine"""

    def _solver(self, melting_config, phase=Phase.HEATING, mass=500.0):
        return LumpedSolver("2", "1", melting_config, NEUMANN,
                            SubdomainState(mass=mass, avg_temperature=2100.0), 2100.0,
                            thresholds=ThresholdParams(melt_trigger=2100.0, residual_mass=150.0),
                            phase=phase)

    def test_advance_does_not_mutate(self, melting_config):
        solver = self._solver(melting_config)
        before = solver.checkpoint()
        solver.advance({"1": InterfaceVariables(heat_flux=1.0e4)}, 0.0, 100.0)
        assert solver.checkpoint()[0] == before[0]
        assert solver.phase is Phase.HEATING

    def test_commit_applies_transition(self, melting_config):
        solver = self._solver(melting_config, mass=500.0)
        solver.restore((SubdomainState(mass=500.0, avg_temperature=2090.0), Phase.HEATING,
                        {"1": InterfaceVariables(temperature=2090.0)}))
        outcome = step_state_machine(solver, 0.0, 1000.0, {"1": InterfaceVariables(heat_flux=1.0e5)})
        assert outcome.event is not None
        solver.commit(outcome, apply_transition=False)
        assert solver.phase is Phase.HEATING
        solver.commit(outcome)
        assert solver.phase is Phase.MELTING
        assert solver.exchanged_fields() == ("mass_flow_rate",)

    def test_exchanged_fields_by_role(self, heating_config):
        dirichlet = LumpedSolver("1", "2", heating_config, DIRICHLET,
                                 SubdomainState(mass=100.0, avg_temperature=2000.0), 2000.0)
        neumann = LumpedSolver("2", "1", heating_config, NEUMANN,
                               SubdomainState(mass=100.0, avg_temperature=2000.0), 2000.0)
        assert dirichlet.exchanged_fields() == ("heat_flux",)
        assert neumann.exchanged_fields() == ("temperature",)

    def test_initial_outputs_use_closure(self, heating_config):
        solver = LumpedSolver("1", "2", heating_config, DIRICHLET,
                              SubdomainState(mass=100.0, avg_temperature=2000.0), 2000.0)
        assert solver.initial_outputs()["2"].heat_flux == pytest.approx(100.0 * (12000.0 - 8000.0 - 6000.0))

    def test_missing_input_is_solver_failure(self, heating_config):
        solver = LumpedSolver("1", "2", heating_config, DIRICHLET,
                              SubdomainState(mass=100.0, avg_temperature=2000.0), 2000.0)
        with pytest.raises(SolverFailure) as exc:
            solver.advance({}, 0.0, 10.0)
        assert exc.value.solver_id == "1"

    def test_melting_precondition_is_solver_failure(self, melting_config):
        solver = self._solver(melting_config, phase=Phase.MELTING, mass=100.0)
        with pytest.raises(SolverFailure):
            solver.advance({"1": InterfaceVariables(heat_flux=1.0)}, 0.0, 10.0)

    def test_thresholds_require_neumann_receiver(self, melting_config):
        with pytest.raises(ConfigurationError):
            LumpedSolver("2", "1", melting_config, DIRICHLET,
                         SubdomainState(mass=500.0, avg_temperature=2000.0), 2000.0,
                         thresholds=ThresholdParams(melt_trigger=2100.0, residual_mass=150.0))

    def test_melting_phase_requires_thresholds(self, heating_config):
        with pytest.raises(ConfigurationError):
            LumpedSolver("2", "1", heating_config, NEUMANN,
                         SubdomainState(mass=100.0, avg_temperature=2000.0), 2000.0,
                         phase=Phase.MELTING)


class TestTransitionGraph:
    """Only the three documented edges exist"""

    def test_invalid_edge_rejected(self):
        with pytest.raises(FieldValidationError):
            StateTransition(Phase.EMPTY, Phase.HEATING, Guard.MASS_FLOW_REVERSED)

    def test_labels(self):
        assert HEATING_TO_MELTING.label == "heating->melting"
        assert MELTING_TO_EMPTY.label == "melting->empty"
