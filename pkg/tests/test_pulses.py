import math

import numpy as np
import pytest

from ccdsim.drive import Scheme, default_config, second_frame_unitary
from ccdsim.propagator import IntegratorSpec
from ccdsim.pulses import (
    CompileError,
    PulseProgram,
    PulseSegment,
    SegmentKind,
    compile_program,
    gate_pulse,
    idle_pulse,
    parse_program,
    readout_pad,
    simulate_program,
)
from ccdsim.qubit import QubitState, state_fidelity

CFG = default_config(Scheme.CMCCD)
PERIOD = CFG.mod_period


class TestSegments:
    def test_gate_duration_is_angle_over_mod_strength(self):
        seg = gate_pulse(math.pi, 0.0, CFG)
        assert seg.duration == pytest.approx(math.pi / CFG.mod_strength, rel=1e-15)
        assert seg.duration == pytest.approx(4 * math.pi / CFG.rabi, rel=1e-12)
        assert seg.theta_m == math.pi / 2
        assert seg.kind is SegmentKind.GATE

    def test_quarter_gate_spans_one_modulation_period(self):
        seg = gate_pulse(math.pi / 2, 0.0, CFG)
        assert seg.duration == pytest.approx(PERIOD, rel=1e-12)

    def test_full_rotation_duration(self):
        seg = gate_pulse(2 * math.pi, 0.0, CFG)
        assert seg.duration == pytest.approx(2 * math.pi / CFG.mod_strength, rel=1e-15)

    def test_gate_requires_modulation(self):
        bare = default_config(Scheme.BARE)
        with pytest.raises(ValueError):
            gate_pulse(math.pi, 0.0, bare)

    def test_idle_zero_duration_allowed(self):
        assert idle_pulse(0.0, CFG).duration == 0.0

    def test_segment_rejects_other_mod_phases(self):
        with pytest.raises(ValueError):
            PulseSegment(SegmentKind.GATE, 1e-6, theta_m=0.3)

    @pytest.mark.parametrize(
        "elapsed_periods,pad_periods",
        [(1.0, 0.0), (1.5, 0.5), (5.3, 0.7), (0.0, 0.0), (2.0000000001, 0.0)],
    )
    def test_readout_pad_modular_arithmetic(self, elapsed_periods, pad_periods):
        pad = readout_pad(elapsed_periods * PERIOD, CFG)
        assert pad.duration == pytest.approx(pad_periods * PERIOD, abs=1e-6 * PERIOD)
        assert pad.kind is SegmentKind.READOUT_PAD
        assert pad.theta_m == 0.0

    def test_readout_pad_restores_frame_match(self):
        elapsed = 3.7 * PERIOD
        pad = readout_pad(elapsed, CFG)
        u = second_frame_unitary(CFG, elapsed + pad.duration)
        assert np.allclose(np.abs(u), np.eye(2), atol=1e-7)


class TestCompile:
    def test_aligned_program_compiles(self):
        program = PulseProgram(
            [gate_pulse(math.pi / 2, 0.0, CFG), idle_pulse(2 * PERIOD, CFG)], CFG
        )
        pieces = compile_program(program)
        assert len(pieces) == 2
        assert pieces[0].t_end == pytest.approx(PERIOD)
        assert pieces[1].cfg.mod_phase == 0.0
        assert pieces[0].cfg.mod_phase == math.pi / 2

    def test_misaligned_boundary_names_segment(self):
        program = PulseProgram(
            [gate_pulse(math.pi / 2, 0.0, CFG), idle_pulse(0.31 * PERIOD, CFG, "stray")],
            CFG,
        )
        with pytest.raises(CompileError, match="segment 1"):
            compile_program(program)

    def test_zero_duration_segments_dropped(self):
        program = PulseProgram([idle_pulse(0.0, CFG), readout_pad(0.0, CFG)], CFG)
        assert compile_program(program) == []

    def test_total_duration_sums_segments(self):
        program = PulseProgram(
            [gate_pulse(math.pi, 0.0, CFG), idle_pulse(3 * PERIOD, CFG)], CFG
        )
        assert program.total_duration == pytest.approx(2 * PERIOD + 3 * PERIOD)


class TestSimulate:
    def test_empty_program_is_identity(self):
        program = PulseProgram([], CFG)
        out = simulate_program(program)
        assert state_fidelity(out, QubitState.zero()) == pytest.approx(1.0, abs=1e-12)

    def test_y_pi_gate_transfers_population(self):
        # CMCCD on resonance: the co-rotating drive is the only second-frame term
        program = PulseProgram(
            [gate_pulse(math.pi, 0.0, CFG), readout_pad(2 * PERIOD, CFG)], CFG
        )
        out = simulate_program(program)
        assert out.population_up() >= 1.0 - 1e-6

    def test_idle_full_turn_is_identity_up_to_phase(self):
        program = PulseProgram([idle_pulse(2 * math.pi / CFG.mod_strength, CFG)], CFG)
        out = simulate_program(program, QubitState.plus())
        assert state_fidelity(out, QubitState.plus()) == pytest.approx(1.0, abs=1e-9)

    def test_idle_quarter_turn_rotates_equator_azimuth(self):
        # z rotation at rate eps_m: after pi/(2 eps_m) the +x state moves to -+y
        duration = (math.pi / 2) / CFG.mod_strength
        program = PulseProgram([idle_pulse(duration, CFG)], CFG)
        out = simulate_program(program, QubitState.plus())
        vec = out.bloch()
        assert abs(vec.z) < 1e-8
        assert vec.x == pytest.approx(0.0, abs=1e-8)
        assert abs(vec.y) == pytest.approx(1.0, abs=1e-8)

    def test_first_and_second_frame_populations_agree_at_readout(self):
        # readout-matched programs: z populations agree across frames
        cfg = CFG.with_errors(detuning=0.08 * CFG.rabi, rabi_error=-0.05 * CFG.rabi)
        program = PulseProgram(
            [
                gate_pulse(math.pi / 2, 0.0, cfg),
                idle_pulse(2 * PERIOD, cfg),
                gate_pulse(math.pi / 2, 0.7, cfg),
                readout_pad(4 * PERIOD, cfg),
            ],
            cfg,
        )
        spec = IntegratorSpec(method="cf4", steps_per_fastest_period=400)
        first = simulate_program(program, frame="first", spec=spec)
        second = simulate_program(program, frame="second", spec=spec)
        assert first.population_up() == pytest.approx(second.population_up(), abs=1e-9)

    @pytest.mark.parametrize("seed", range(4))
    def test_random_programs_match_frames_at_readout(self, seed):
        # z populations of the two rotating-frame views agree at the padded
        # readout time for arbitrary lattice-aligned programs
        rng = np.random.default_rng(seed)
        scheme = [Scheme.AMCCD, Scheme.PMCCD, Scheme.CMCCD][seed % 3]
        cfg = default_config(
            scheme,
            detuning=float(rng.uniform(-0.1, 0.1)) * CFG.rabi,
            rabi_error=float(rng.uniform(-0.1, 0.1)) * CFG.rabi,
        )
        segments, elapsed = [], 0.0
        for _ in range(int(rng.integers(2, 6))):
            if rng.random() < 0.6:
                angle = float(rng.integers(1, 5)) * math.pi / 2
                seg = gate_pulse(angle, float(rng.uniform(0, 2 * math.pi)), cfg)
            else:
                seg = idle_pulse(float(rng.integers(0, 4)) * cfg.mod_period, cfg)
            segments.append(seg)
            elapsed += seg.duration
        segments.append(readout_pad(elapsed, cfg))
        program = PulseProgram(segments, cfg)
        spec = IntegratorSpec(method="cf4", steps_per_fastest_period=400)
        first = simulate_program(program, frame="first", spec=spec)
        second = simulate_program(program, frame="second", spec=spec)
        assert first.population_up() == pytest.approx(second.population_up(), abs=1e-9)

    def test_two_quarter_gates_phase_sweep_oscillates(self):
        # second pi/2 pulse with swept carrier phase: Pic = (1 + cos(phi))/2
        for phi in (0.0, math.pi / 3, math.pi, 1.7 * math.pi):
            program = PulseProgram(
                [gate_pulse(math.pi / 2, 0.0, CFG), gate_pulse(math.pi / 2, phi, CFG)],
                CFG,
            )
            out = simulate_program(program)
            assert out.population_up() == pytest.approx(
                (1.0 + math.cos(phi)) / 2.0, abs=1e-6
            )


class TestParseProgram:
    def test_round_trip_directives(self):
        text = """
        # a Y_pi gate, some idling, then readout matching
        gate 3.141592653589793 0.0
        idle 5.555555555555556e-07
        pad
        """
        program = parse_program(text, CFG)
        kinds = [seg.kind for seg in program.segments]
        assert kinds == [SegmentKind.GATE, SegmentKind.IDLE, SegmentKind.READOUT_PAD]
        assert program.segments[0].duration == pytest.approx(2 * PERIOD, rel=1e-12)

    def test_unknown_directive_reports_line(self):
        with pytest.raises(CompileError, match="line 2"):
            parse_program("gate 1.0 0.0\nwiggle 3\n", CFG)

    def test_bad_arity_reports_line(self):
        with pytest.raises(CompileError, match="line 1"):
            parse_program("idle\n", CFG)
