import numpy as np
import pytest

import ltipar as lp

from conftest import dc_pipeline, random_stable_model

T = 1e-5


def drive_discrete(rule=lp.TUSTIN, T=T):
    _, _, _, _, pm = dc_pipeline()
    return lp.discretize_parallel_model(pm, rule, T)


class TestInputSignal:
    def test_step(self):
        u = lp.InputSignal("step", amplitude=2.0).sample(0.1, 4, 1)
        np.testing.assert_allclose(u[:, 0], [2.0] * 5)

    def test_step_with_start(self):
        u = lp.InputSignal("step", amplitude=1.0, start=0.25).sample(0.1, 4, 1)
        np.testing.assert_allclose(u[:, 0], [0.0, 0.0, 0.0, 1.0, 1.0])

    def test_ramp(self):
        u = lp.InputSignal("ramp", amplitude=3.0).sample(0.5, 3, 1)
        np.testing.assert_allclose(u[:, 0], [0.0, 1.5, 3.0, 4.5])

    def test_sine(self):
        u = lp.InputSignal("sine", amplitude=1.0, frequency=0.25).sample(1.0, 2, 1)
        np.testing.assert_allclose(u[:, 0], [0.0, 1.0, 0.0], atol=1e-12)

    def test_table_exact(self):
        u = lp.InputSignal("table", samples=np.arange(5.0)).sample(0.1, 4, 1)
        np.testing.assert_allclose(u[:, 0], np.arange(5.0))

    def test_table_broadcast(self):
        u = lp.InputSignal("table", samples=np.ones(3)).sample(0.1, 2, 2)
        assert u.shape == (3, 2)

    def test_table_too_short(self):
        with pytest.raises(ValueError, match="consumes"):
            lp.InputSignal("table", samples=np.ones(10)).sample(0.1, 10, 1)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            lp.InputSignal("impulse").sample(0.1, 2, 1)


class TestSerial:
    def test_zero_input_zero_trace(self):
        model, _, _, _, _ = dc_pipeline()
        u = lp.InputSignal("step", amplitude=0.0)
        trace = lp.simulate_serial(model, lp.TUSTIN, T, 100, u)
        assert np.all(trace.outputs == 0.0)

    def test_first_order_step_response(self):
        model = lp.validate_model([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
        trace = lp.simulate_serial(model, lp.TUSTIN, 1e-3, 10000, lp.InputSignal("step"))
        # closed form 1 - exp(-t) at t = 10
        assert abs(trace.outputs[-1, 0] - 1.0) <= 1e-3

    def test_drive_terminal_slope(self):
        model, _, _, _, _ = dc_pipeline()
        trace = lp.simulate_serial(model, lp.TUSTIN, T, 100000, lp.InputSignal("step"))
        slope = (trace.outputs[-1, 0] - trace.outputs[-2, 0]) / T
        assert abs(slope - 1.0) <= 0.01

    def test_initial_state(self):
        model = lp.validate_model([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
        trace = lp.simulate_serial(
            model, lp.TUSTIN, 0.01, 10, lp.InputSignal("step", amplitude=0.0), x0=[5.0]
        )
        assert trace.outputs[0, 0] == 5.0
        assert trace.outputs[5, 0] < 5.0  # decays

    def test_invalid_steps(self):
        model, _, _, _, _ = dc_pipeline()
        with pytest.raises(ValueError):
            lp.simulate_serial(model, lp.TUSTIN, T, 0, lp.InputSignal("step"))


class TestParallel:
    def test_matches_serial_drive(self):
        model, _, _, _, _ = dc_pipeline()
        dpm = drive_discrete()
        u = lp.InputSignal("step")
        serial = lp.simulate_serial(model, lp.TUSTIN, T, 20000, u)
        parallel = lp.simulate_parallel(dpm, 20000, u, workers=3)
        assert lp.compare(serial, parallel).max_abs <= 1e-6

    def test_worker_count_determinism(self):
        dpm = drive_discrete()
        u = lp.InputSignal("step")
        traces = [lp.simulate_parallel(dpm, 10000, u, workers=w) for w in (1, 2, 3, 4)]
        for other in traces[1:]:
            assert np.array_equal(traces[0].outputs, other.outputs)

    def test_single_channel_equals_direct_stepping(self):
        dpm = drive_discrete()
        ch = dpm.channels[1]
        single = lp.DiscreteParallelModel((ch,), np.zeros((1, 1)), dpm.rule, dpm.T)
        u = lp.InputSignal("step")
        trace = lp.simulate_parallel(single, 500, u)
        states = lp.sim.run_recurrence(ch.phis, ch.gammas, u.sample(dpm.T, 500, 1))
        np.testing.assert_array_equal(trace.outputs, lp.sim.fold_outputs(states, ch.output_map))

    def test_output_only_path_is_bitwise_identical(self):
        # the memory-lean kernel must agree with the state-materializing one
        dpm = drive_discrete()
        u = lp.InputSignal("sine", amplitude=2.0, frequency=30.0)
        lean = lp.simulate_parallel(dpm, 3000, u)
        full = lp.simulate_parallel(dpm, 3000, u, keep_states=True)
        assert np.array_equal(lean.outputs, full.outputs)

    def test_empty_model(self):
        dpm = drive_discrete()
        empty = lp.DiscreteParallelModel((), np.zeros((1, 1)), dpm.rule, dpm.T)
        with pytest.raises(lp.EmptyModelError):
            lp.simulate_parallel(empty, 10, lp.InputSignal("step"))

    def test_per_channel_outputs_sum_to_trace(self):
        dpm = drive_discrete()
        u = lp.InputSignal("step")
        trace = lp.simulate_parallel(dpm, 1000, u, per_channel=True)
        total = trace.per_channel.sum(axis=0)
        np.testing.assert_allclose(total, trace.outputs, atol=1e-18)

    def test_superposition(self):
        dpm = drive_discrete()
        n = 2000
        t = np.arange(n + 1) * dpm.T
        u1 = np.ones(n + 1)
        u2 = np.sin(2 * np.pi * 40.0 * t)
        tr1 = lp.simulate_parallel(dpm, n, lp.InputSignal("table", samples=u1))
        tr2 = lp.simulate_parallel(dpm, n, lp.InputSignal("table", samples=u2))
        tr12 = lp.simulate_parallel(dpm, n, lp.InputSignal("table", samples=u1 + u2))
        combined = tr1.outputs + tr2.outputs
        assert np.max(np.abs(combined - tr12.outputs)) <= 1e-9

    def test_superposition_serial(self):
        model, _, _, _, _ = dc_pipeline()
        n = 2000
        t = np.arange(n + 1) * T
        u1 = np.ones(n + 1)
        u2 = np.sin(2 * np.pi * 40.0 * t)
        tr1 = lp.simulate_serial(model, lp.TUSTIN, T, n, lp.InputSignal("table", samples=u1))
        tr2 = lp.simulate_serial(model, lp.TUSTIN, T, n, lp.InputSignal("table", samples=u2))
        tr12 = lp.simulate_serial(
            model, lp.TUSTIN, T, n, lp.InputSignal("table", samples=u1 + u2)
        )
        assert np.max(np.abs(tr1.outputs + tr2.outputs - tr12.outputs)) <= 1e-9

    def test_worker_cap_env(self, monkeypatch):
        monkeypatch.setenv(lp.sim.WORKER_CAP_ENV, "1")
        dpm = drive_discrete()
        trace = lp.simulate_parallel(dpm, 1000, lp.InputSignal("step"), workers=8)
        uncapped = lp.simulate_parallel(dpm, 1000, lp.InputSignal("step"), workers=1)
        assert np.array_equal(trace.outputs, uncapped.outputs)

    @pytest.mark.parametrize("seed", range(6))
    def test_random_systems_equivalence(self, seed):
        rng = np.random.default_rng(1400 + seed)
        model = random_stable_model(rng)
        tf = lp.transfer_matrix(model)
        spectrum = lp.classify_spectrum(lp.find_roots(tf.denominator))
        pm = lp.realize_channels(lp.decompose_matrix(tf, spectrum), spectrum)
        dpm = lp.discretize_parallel_model(pm, lp.TUSTIN, 1e-3)
        u = lp.InputSignal("step")
        serial = lp.simulate_serial(model, lp.TUSTIN, 1e-3, 5000, u)
        parallel = lp.simulate_parallel(dpm, 5000, u, workers=2)
        scale = max(1.0, float(np.max(np.abs(serial.outputs))))
        assert lp.compare(serial, parallel).max_abs <= 1e-6 * scale


class TestCompare:
    def test_identical(self):
        dpm = drive_discrete()
        u = lp.InputSignal("step")
        a = lp.simulate_parallel(dpm, 100, u)
        stats = lp.compare(a, a)
        assert stats.max_abs == 0.0 and stats.rms == 0.0

    def test_single_point_difference(self):
        outputs = np.zeros((11, 1))
        a = lp.Trace(T=0.1, N=10, outputs=outputs)
        shifted = outputs.copy()
        shifted[7, 0] = 1e-7
        b = lp.Trace(T=0.1, N=10, outputs=shifted)
        stats = lp.compare(a, b)
        assert stats.max_abs == pytest.approx(1e-7)
        assert stats.argmax_step == 7

    def test_shape_mismatch(self):
        a = lp.Trace(T=0.1, N=10, outputs=np.zeros((11, 1)))
        b = lp.Trace(T=0.1, N=9, outputs=np.zeros((10, 1)))
        with pytest.raises(lp.ShapeMismatchError):
            lp.compare(a, b)


class TestBenchmark:
    def test_report_fields(self):
        model, _, _, _, pm = dc_pipeline()
        report = lp.benchmark(
            model, pm, lp.TUSTIN, T, 5000, lp.InputSignal("step"), worker_counts=(1,)
        )
        assert report.steps == 5000
        assert report.channels == 3
        assert report.serial_seconds > 0.0
        assert len(report.parallel_seconds) == 1
        assert len(report.per_channel_seconds[0]) == 3
        assert report.summation_seconds[0] >= 0.0
        expected = 100.0 * (1.0 - report.parallel_seconds[0] / report.serial_seconds)
        assert report.speedup_percent[0] == pytest.approx(expected)

    def test_multiple_worker_counts(self):
        model, _, _, _, pm = dc_pipeline()
        report = lp.benchmark(
            model, pm, lp.TUSTIN, T, 2000, lp.InputSignal("step"), worker_counts=(1, 2)
        )
        assert report.worker_counts == (1, 2)
        assert len(report.parallel_seconds) == 2
        text = str(report)
        assert "serial model" in text and "summation" in text
