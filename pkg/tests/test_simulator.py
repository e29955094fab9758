"""Tests for the free-boundary simulator: initialization, stepping,
long-run diagnostics, the modified background, and decay fitting."""

import numpy as np
import pytest

from conicshock.background import solve_background
from conicshock.gas import GasParams
from conicshock.simulator import (
    DecayFit,
    SimConfig,
    SimState,
    SimulationError,
    fit_decay,
    init_from_background,
    modified_background,
    run,
    shock_speed,
    step,
)

GAS = GasParams(A=1.0, gamma=2.0, rho0=1.0)
B0 = 4.0


@pytest.fixture(scope="module")
def sol():
    return solve_background(B0, GAS, n=3, grid_size=512)


@pytest.fixture(scope="module")
def cfg0():
    return SimConfig(n=3, gas=GAS, b0=B0, eps=0.0, grid_points=64, t_end=20.0)


@pytest.fixture(scope="module")
def res0(sol, cfg0):
    return run(cfg0, sol=sol)


@pytest.fixture(scope="module")
def res_eps(sol):
    cfg = SimConfig(n=3, gas=GAS, b0=B0, eps=0.01, grid_points=64, t_end=50.0)
    return run(cfg, sol=sol)


# ---------------------------------------------------------------------------
# configuration validation
# ---------------------------------------------------------------------------

class TestConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            SimConfig(n=5, gas=GAS, b0=B0)
        with pytest.raises(ValueError):
            SimConfig(n=3, gas=GAS, b0=B0, eps=-0.1)
        with pytest.raises(ValueError):
            SimConfig(n=3, gas=GAS, b0=B0, cfl=1.5)
        with pytest.raises(ValueError):
            SimConfig(n=3, gas=GAS, b0=B0, grid_points=8)
        with pytest.raises(ValueError):
            SimConfig(n=3, gas=GAS, b0=B0, t_end=0.5)

    def test_piston_path(self):
        cfg = SimConfig(n=3, gas=GAS, b0=B0, eps=0.01)
        t = 3.0
        assert cfg.sigma(t) == t * (B0 + 0.01 / (1 + t))
        h = 1e-7
        fd = (cfg.sigma(t + h) - cfg.sigma(t - h)) / (2 * h)
        assert cfg.dsigma(t) == pytest.approx(fd, rel=1e-6)


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

class TestInit:
    def test_unperturbed_init(self, sol, cfg0):
        st = init_from_background(sol, cfg0)
        assert st.sigma == pytest.approx(B0)
        assert st.zeta == pytest.approx(sol.s0)
        assert abs(st.phi[-1]) < 1e-10          # potential vanishes at the shock
        assert st.w[0] == pytest.approx(B0, abs=1e-9)   # wall condition
        assert np.all(st.density(GAS) > 0)

    def test_initial_shock_consistency(self, sol, cfg0):
        # the sampled state satisfies the Rankine-Hugoniot relation: the
        # fitted shock speed equals the self-similar speed s0
        st = init_from_background(sol, cfg0)
        zdot, margin = shock_speed(st.v[-1], st.w[-1], GAS)
        assert margin > 0
        assert zdot == pytest.approx(sol.s0, rel=1e-8)

    def test_compatibility_at_shock(self, sol, cfg0):
        st = init_from_background(sol, cfg0)
        zdot, _ = shock_speed(st.v[-1], st.w[-1], GAS)
        assert st.v[-1] + zdot * st.w[-1] == pytest.approx(0.0, abs=1e-8)

    def test_thin_layer_perturbed_init_nonempty(self):
        # piston displacement exceeds the stand-off: the profile for the
        # instantaneous piston speed keeps the initial domain nonempty
        gas = GasParams(A=1.0, gamma=1.4, rho0=1.0)
        s = solve_background(40.0, gas, n=3, grid_size=256)
        cfg = SimConfig(n=3, gas=gas, b0=40.0, eps=0.01, grid_points=64)
        st = init_from_background(s, cfg)
        assert st.sigma < st.zeta
        assert st.sigma == pytest.approx(cfg.sigma(1.0))


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

class TestStep:
    def test_self_similar_single_step(self, sol, cfg0):
        st = init_from_background(sol, cfg0)
        st1 = step(st, cfg0)
        dt = st1.t - st.t
        assert abs(st1.zeta / st1.t - sol.s0) < 1e-6 * dt + 1e-12

    def test_entropy_margin_positive(self, sol, cfg0):
        st = init_from_background(sol, cfg0)
        for _ in range(10):
            st = step(st, cfg0)
            _, margin = shock_speed(st.v[-1], st.w[-1], GAS)
            assert margin > 0

    def test_two_half_steps_vs_one(self, sol):
        cfg = SimConfig(n=3, gas=GAS, b0=B0, eps=0.01, grid_points=64)
        st = init_from_background(sol, cfg)
        diffs = []
        for dt in (4e-4, 2e-4):
            one = step(st, cfg, dt=dt)
            two = step(step(st, cfg, dt=dt / 2), cfg, dt=dt / 2)
            diffs.append(np.max(np.abs(one.v - two.v)))
            assert abs(one.zeta - two.zeta) < dt ** 2
        # halving dt shrinks the mismatch at 2nd order (ratio ~4)
        assert diffs[0] / diffs[1] > 3.0

    def test_bad_dt_rejected(self, sol, cfg0):
        st = init_from_background(sol, cfg0)
        with pytest.raises(SimulationError):
            step(st, cfg0, dt=-1.0)


# ---------------------------------------------------------------------------
# full runs
# ---------------------------------------------------------------------------

class TestRun:
    def test_self_similarity_preserved(self, res0):
        h = 1.0 / (res0.config.grid_points - 1)
        assert np.max(res0.zeta_dev) < 10.0 * h ** 2

    def test_refinement_order(self, sol, res0):
        cfg32 = SimConfig(n=3, gas=GAS, b0=B0, eps=0.0, grid_points=32, t_end=20.0)
        res32 = run(cfg32, sol=sol)
        order = np.log2(np.max(res32.zeta_dev) / np.max(res0.zeta_dev))
        assert order >= 1.5

    def test_residuals_small(self, res0):
        h = 1.0 / (res0.config.grid_points - 1)
        assert np.max(res0.rh_residual) < 1e-10
        assert np.max(res0.mass_residual[1:]) < h ** 2
        assert np.max(res0.phi_shock) < 1e-8
        assert np.min(res0.entropy_margin) > 0

    def test_perturbed_run_diagnostics(self, res_eps):
        assert res_eps.completed
        assert np.min(res_eps.entropy_margin) > 0
        mask = res_eps.t >= 5.0
        # deviation decays monotonically after the transient
        assert np.all(np.diff(res_eps.sup_dev[mask]) < 0)

    def test_shock_window_small_perturbation(self, sol):
        # for perturbations below the extension margin the shock stays
        # inside [b0 t, (s0 + tau0) t]
        cfg = SimConfig(n=3, gas=GAS, b0=B0, eps=1e-4, grid_points=64, t_end=10.0)
        res = run(cfg, sol=sol)
        margin = B0 ** (-4.0 / (GAS.gamma - 1.0)) * sol.delta
        assert np.all(res.zeta / res.t >= B0)
        assert np.all(res.zeta / res.t <= sol.s0 + margin)

    def test_n2_short_run(self):
        gas = GasParams(A=1.0, gamma=2.0, rho0=1.0)
        s2 = solve_background(B0, gas, n=2, grid_size=256)
        cfg = SimConfig(n=2, gas=gas, b0=B0, eps=0.0, grid_points=48, t_end=5.0)
        res = run(cfg, sol=s2)
        assert res.completed
        assert np.max(res.zeta_dev) < 1e-4
        assert np.min(res.entropy_margin) > 0

    def test_wall_clock_budget_truncates(self, sol):
        cfg = SimConfig(n=3, gas=GAS, b0=B0, eps=0.0, grid_points=64, t_end=50.0)
        res = run(cfg, sol=sol, wall_clock_budget=0.2)
        assert not res.completed

    def test_csv_and_json_deterministic(self, sol, tmp_path):
        import json

        cfg = SimConfig(n=3, gas=GAS, b0=B0, eps=0.0, grid_points=32, t_end=2.0)
        paths = []
        for k in (0, 1):
            res = run(cfg, sol=sol)
            p = tmp_path / f"run{k}.csv"
            res.to_csv(p)
            paths.append(p.read_bytes())
            res.to_json(tmp_path / f"run{k}.json")
        assert paths[0] == paths[1]
        data = json.loads((tmp_path / "run0.json").read_text())
        assert data["completed"] is True
        assert data["min_entropy_margin"] > 0


# ---------------------------------------------------------------------------
# modified background
# ---------------------------------------------------------------------------

class TestModifiedBackground:
    def test_identity_at_zero_amplitude(self, sol):
        cfg = SimConfig(n=3, gas=GAS, b0=B0, eps=0.0, grid_points=64)
        mb = modified_background(sol, cfg)
        r = np.linspace(cfg.sigma(3.0), 3.0 * sol.s0, 40)
        assert np.all(mb.f_a(3.0, r) == 0.0)
        assert np.all(mb.E(np.array([1.0, 5.0, 50.0])) == 0.0)

    def test_piston_condition_residual(self, sol):
        cfg = SimConfig(n=3, gas=GAS, b0=B0, eps=0.01, grid_points=64)
        mb = modified_background(sol, cfg)
        worst = max(mb.piston_residual(t) for t in np.linspace(1.0, 100.0, 120))
        assert worst < 1e-8

    def test_decay_envelope(self, sol):
        # t |f_a| / eps stays bounded on t in [1, 100] at mid-layer
        cfg = SimConfig(n=3, gas=GAS, b0=B0, eps=0.01, grid_points=64)
        mb = modified_background(sol, cfg)
        ts = np.linspace(1.0, 100.0, 200)
        vals = [abs(float(mb.f_a(t, 0.5 * (cfg.sigma(t) + sol.s0 * t)))) * t / cfg.eps
                for t in ts]
        assert max(vals) < 10.0

    def test_amplitude_linear_in_eps(self, sol):
        vals = []
        for eps in (1e-3, 2e-3):
            cfg = SimConfig(n=3, gas=GAS, b0=B0, eps=eps, grid_points=64)
            mb = modified_background(sol, cfg)
            vals.append(float(mb.E(2.0)))
        assert vals[1] == pytest.approx(2.0 * vals[0], rel=1e-2)


# ---------------------------------------------------------------------------
# decay fitting
# ---------------------------------------------------------------------------

class TestFitDecay:
    def test_exact_power_law(self):
        t = np.geomspace(1.0, 100.0, 200)
        fit = fit_decay(t, 3.0 * (1 + t) ** -1.0, window=(2.0, None))
        assert fit.m0_est == pytest.approx(1.0, abs=0.01)
        assert fit.residual < 1e-12

    def test_noisy_power_law(self):
        rng = np.random.default_rng(11)
        t = np.geomspace(1.0, 100.0, 400)
        dev = 2.0 * (1 + t) ** -1.3 * (1.0 + 0.01 * rng.standard_normal(len(t)))
        fit = fit_decay(t, dev, window=(2.0, None))
        assert fit.m0_est == pytest.approx(1.3, abs=0.05)

    def test_nonpositive_rejected(self):
        t = np.geomspace(1.0, 100.0, 50)
        dev = (1 + t) ** -1.0
        dev[30] = 0.0
        with pytest.raises(ValueError):
            fit_decay(t, dev, window=(2.0, None))

    def test_short_window_rejected(self):
        t = np.linspace(5.0, 6.0, 50)
        with pytest.raises(ValueError):
            fit_decay(t, (1 + t) ** -1.0, window=(5.0, 6.0))

    def test_floor_exclusion(self):
        t = np.geomspace(1.0, 100.0, 200)
        dev = np.maximum((1 + t) ** -1.0, 5e-2)
        fit = fit_decay(t, dev, window=(2.0, None), floor=6e-2)
        assert fit.m0_est == pytest.approx(1.0, abs=0.05)

    def test_simulated_decay_rate(self, res_eps):
        fit = fit_decay(res_eps.t, res_eps.sup_dev, window=(5.0, 50.0))
        assert fit.m0_est >= 0.5
        assert isinstance(fit, DecayFit)
