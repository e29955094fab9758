"""Radially symmetric free-boundary simulator for the piston-driven shock.

The unsteady potential flow between the expanding piston r = sigma(t) and
the fitted shock r = zeta(t) is evolved as a first-order system for
(v, w) = (dt Phi, dr Phi) in the mapped coordinate y = (r - sigma)/(zeta -
sigma) in [0, 1].  The shock is a tracked boundary moved by the
Rankine-Hugoniot relation, so the interior stays smooth and a
non-dissipative centered scheme applies; no shock capturing is involved.

Boundary closure:
  y = 0 (piston): w = dsigma/dt (solid-wall condition); v advanced from
      the interior with one-sided differences.
  y = 1 (shock): dzeta/dt = H w / (H - rho0) with H the density recovered
      from the Bernoulli relation, and v = -(dzeta/dt) w from
      differentiating the continuity of the potential along the front; w
      advanced from the interior.  The Rankine-Hugoniot residual of the
      recomputed state is logged each output.

The module also builds the modified background potential
Phi_a = (1 + f_a) * Phi_hat whose radial correction factor makes the
piston condition exact for the perturbed piston, and fits decay exponents
from recorded deviation series.
"""

from __future__ import annotations

import json
import time as _time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .background import SelfSimilarSolution, solve_background
from .gas import GasParams, density_from_state


class SimulationError(RuntimeError):
    """Fatal integration failure; the message carries the failing time."""


def _default_h(t):
    return 1.0 / (1.0 + t)


def _default_dh(t):
    return -1.0 / (1.0 + t) ** 2


@dataclass(frozen=True)
class SimConfig:
    """Run parameters for the free-boundary integration.

    The piston speed is b(t) = b0 + eps * h(t) with h and its derivative
    supplied as callables (default h = 1/(1+t), which satisfies the
    decaying-derivative bounds the stability theory assumes).
    """

    n: int
    gas: GasParams
    b0: float
    eps: float = 0.0
    grid_points: int = 128
    cfl: float = 0.4
    t_end: float = 50.0
    t0: float = 1.0
    outputs_per_decade: int = 200
    h: Callable = _default_h
    dh: Callable = _default_dh

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError("dimension n must be 2 or 3")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("cfl must lie in (0, 1)")
        if self.grid_points < 32:
            raise ValueError("grid_points must be at least 32")
        if self.t_end <= self.t0:
            raise ValueError("t_end must exceed t0")

    def b(self, t):
        return self.b0 + self.eps * self.h(t)

    def sigma(self, t):
        return t * self.b(t)

    def dsigma(self, t):
        return self.b(t) + t * self.eps * self.dh(t)


@dataclass
class SimState:
    """Flow state on the mapped grid y in [0, 1] at a single time."""

    t: float
    sigma: float
    zeta: float
    y: np.ndarray
    v: np.ndarray       # dt Phi at fixed x
    w: np.ndarray       # dr Phi
    phi: np.ndarray     # potential, recovered by time quadrature along y-lines

    @property
    def r(self) -> np.ndarray:
        return self.sigma + self.y * (self.zeta - self.sigma)

    def density(self, gas: GasParams) -> np.ndarray:
        return density_from_state(self.v, self.w ** 2, gas)


# ---------------------------------------------------------------------------
# background samplers
# ---------------------------------------------------------------------------

class BackgroundSampler:
    """Cubic-spline samplers for the self-similar profile as functions of
    s = r/t, with linear extrapolation using the endpoint slopes outside
    [b0, s0] (needed when the perturbed piston leaves the background span)."""

    def __init__(self, sol: SelfSimilarSolution):
        sl = slice(sol.i0, sol.i1 + 1)
        # interpolate in the offset variable to keep precision on thin layers
        x = sol.s_off[sl]
        if x[-1] - x[0] <= 0:
            raise ValueError("background span insufficient for interpolation")
        self.b0 = sol.b0
        self.s0 = sol.s0
        self.delta = sol.delta
        self.gas = sol.gas
        self._u = CubicSpline(x, sol.u_off[sl], bc_type="natural", extrapolate=False)
        self._phi = CubicSpline(x, sol.phi[sl], bc_type="natural", extrapolate=False)
        self._rho = CubicSpline(x, sol.rho[sl], bc_type="natural", extrapolate=False)
        self._lo = x[0]
        self._hi = x[-1]
        self._du_lo = float(sol.du[sl][0])
        self._du_hi = float(sol.du[sl][-1])
        self._u_lo = float(sol.u_off[sl][0])
        self._u_hi = float(sol.u_off[sl][-1])
        self._phi_lo = float(sol.phi[sl][0])
        self._phi_hi = float(sol.phi[sl][-1])

    def u(self, s):
        """Velocity profile u(s); linear in s outside the solved span."""
        x = np.asarray(s, dtype=float) - self.b0
        out = self.b0 + self._u(np.clip(x, self._lo, self._hi))
        lo, hi = x < self._lo, x > self._hi
        out = np.where(lo, self.b0 + self._u_lo + self._du_lo * (x - self._lo), out)
        out = np.where(hi, self.b0 + self._u_hi + self._du_hi * (x - self._hi), out)
        return out

    def phi(self, s):
        """Potential profile phi(s) with phi(s0) = 0; linear outside."""
        x = np.asarray(s, dtype=float) - self.b0
        out = self._phi(np.clip(x, self._lo, self._hi))
        lo, hi = x < self._lo, x > self._hi
        u_lo = self.b0 + self._u_lo
        u_hi = self.b0 + self._u_hi
        out = np.where(lo, self._phi_lo + u_lo * (x - self._lo), out)
        out = np.where(hi, self._phi_hi + u_hi * (x - self._hi), out)
        return out


# ---------------------------------------------------------------------------
# modified background
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModifiedBackground:
    """Radial modified background Phi_a = (1 + f_a) * Phi_hat.

    For a radial piston the correction transport equation integrates along
    rays, so f_a(t, r) = E(t) * (r - sigma(t)) with
    E(t) = (dsigma/dt - u(sigma/t)) / Phi_hat(t, sigma); by construction
    dr Phi_a = dsigma/dt on the piston.  E vanishes identically when the
    perturbation amplitude is zero.
    """

    sampler: BackgroundSampler
    config: SimConfig

    def E(self, t):
        t = np.asarray(t, dtype=float)
        s_p = self.config.sigma(t) / t
        phi_hat = t * self.sampler.phi(s_p)
        if np.any(np.abs(phi_hat) < 1e-300):
            raise ZeroDivisionError("background potential vanishes at the piston")
        if self.config.eps == 0.0:
            return np.zeros_like(t)
        return (self.config.dsigma(t) - self.sampler.u(s_p)) / phi_hat

    def f_a(self, t, r):
        return self.E(t) * (np.asarray(r, dtype=float) - self.config.sigma(t))

    def phi_a(self, t, r):
        s = np.asarray(r, dtype=float) / t
        return (1.0 + self.f_a(t, r)) * t * self.sampler.phi(s)

    def grad_phi_a(self, t, r):
        """(dt Phi_a, dr Phi_a) at fixed x; dE/dt by a centered difference
        (diagnostic accuracy only)."""
        r = np.asarray(r, dtype=float)
        s = r / t
        u = self.sampler.u(s)
        phi = self.sampler.phi(s)          # per-unit-time potential
        fa = self.f_a(t, r)
        dt = 1e-6 * t
        dE = (self.E(t + dt) - self.E(t - dt)) / (2.0 * dt)
        dfa_dt = dE * (r - self.config.sigma(t)) - self.E(t) * self.config.dsigma(t)
        # Phi_hat = t * phi(r/t): dt Phi_hat = phi - s u, dr Phi_hat = u
        d_t = (1.0 + fa) * (phi - s * u) + dfa_dt * t * phi
        d_r = (1.0 + fa) * u + self.E(t) * t * phi
        return d_t, d_r

    def piston_residual(self, t):
        """Residual of the solid-wall condition dr Phi_a - dsigma/dt at r = sigma."""
        _, d_r = self.grad_phi_a(t, np.asarray(self.config.sigma(t), dtype=float))
        return float(np.max(np.abs(d_r - self.config.dsigma(t))))


def modified_background(sol: SelfSimilarSolution, config: SimConfig) -> ModifiedBackground:
    return ModifiedBackground(sampler=BackgroundSampler(sol), config=config)


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def init_from_background(sol: SelfSimilarSolution, config: SimConfig) -> SimState:
    """Initial state at t = t0 sampled from the self-similar profile.

    The piston starts at sigma = t0 * b(t0).  When the perturbed piston
    still lies inside the base profile's span the shock starts at
    zeta = s0 * t0 of the supplied solution; when eps * h(t0) exceeds the
    stand-off (thin layers) the profile for the instantaneous piston speed
    b(t0) is solved instead, which keeps the initial domain nonempty and
    reduces to the same state as eps -> 0.
    """
    t0 = config.t0
    sigma = config.sigma(t0)
    if sigma / t0 < sol.s0 - 0.25 * sol.delta:
        base = sol
    else:
        base = solve_background(config.b(t0), sol.gas, n=sol.n,
                                grid_size=max(256, config.grid_points))
    sampler = BackgroundSampler(base)
    zeta = base.s0 * t0
    if not sigma < zeta:
        raise SimulationError(f"empty initial domain at t={t0}: sigma={sigma} >= zeta={zeta}")
    y = np.linspace(0.0, 1.0, config.grid_points)
    r = sigma + y * (zeta - sigma)
    s = r / t0
    u = sampler.u(s)
    phi = t0 * sampler.phi(s)
    # self-similar time derivative of t*phi(r/t) at fixed x
    v = sampler.phi(s) - s * u
    w = u.copy()
    # make the sampled data compatible with the wall and shock conditions at
    # t0 (the perturbed piston speed differs from the profile wall speed by
    # O(eps)); the correction acts along the incoming characteristics only
    _apply_bcs(t0, v, w, config)
    return SimState(t=t0, sigma=sigma, zeta=zeta, y=y, v=v, w=w, phi=phi)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def _dy_centered(f, dy):
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dy)
    # 2nd-order one-sided stencils at the walls
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dy)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dy)
    return out


def shock_speed(v, w, gas: GasParams):
    """Radial Rankine-Hugoniot shock velocity H w / (H - rho0) from the
    boundary state; raises on entropy violation H <= rho0."""
    H = density_from_state(v, w ** 2, gas)
    margin = H - gas.rho0
    if margin <= 0.0:
        raise SimulationError(f"entropy condition violated at shock: H - rho0 = {margin}")
    return H * w / margin, margin


def _rates(t, sigma, zeta, y, v, w, phi, config: SimConfig):
    """Tendencies of (v, w, phi, zeta) in the mapped frame."""
    gas = config.gas
    L = zeta - sigma
    if L <= 0.0:
        raise SimulationError(f"piston overtook the shock at t={t}")
    dy = y[1] - y[0]
    rho = density_from_state(v, w ** 2, gas)
    csq = gas.A * gas.gamma * rho ** (gas.gamma - 1.0)
    r = sigma + y * L

    zdot, _ = shock_speed(v[-1], w[-1], gas)
    sdot = config.dsigma(t)
    V = sdot + y * (zdot - sdot)      # grid node velocity

    dv = _dy_centered(v, dy)
    dw = _dy_centered(w, dy)
    v_t = ((V - 2.0 * w) * dv - (w ** 2 - csq) * dw) / L + csq * (config.n - 1) * w / r
    w_t = (dv + V * dw) / L
    phi_t = v + w * V
    return v_t, w_t, phi_t, zdot, sdot


def _sound(v, w, gas: GasParams):
    rho = density_from_state(v, w ** 2, gas)
    return np.sqrt(gas.A * gas.gamma * rho ** (gas.gamma - 1.0))


def _apply_bcs(t, v, w, config: SimConfig):
    """Impose the wall and shock conditions by correcting the boundary state
    along the incoming characteristic direction (dv, dw) = (-(w -+ c), 1),
    which leaves the outgoing Riemann combination untouched.
    """
    gas = config.gas
    # piston: prescribe w = dsigma/dt along the (w + c)-characteristic
    c0 = float(_sound(v[0], w[0], gas))
    alpha = config.dsigma(t) - w[0]
    v[0] -= (w[0] + c0) * alpha
    w[0] += alpha
    # shock: enforce potential-continuity compatibility v = -zeta' w with
    # zeta' from the Rankine-Hugoniot relation; Newton in the correction
    # amplitude along the (w - c)-characteristic direction
    v1, w1 = float(v[-1]), float(w[-1])
    c1 = float(_sound(v1, w1, gas))
    slope = w1 - c1
    alpha = 0.0

    def g(a):
        vv, ww = v1 - slope * a, w1 + a
        zdot, _ = shock_speed(vv, ww, gas)
        return vv + zdot * ww

    ga = g(alpha)
    h = 1e-8 * max(1.0, abs(w1))
    for _ in range(12):
        dg = (g(alpha + h) - ga) / h
        step_a = -ga / dg
        alpha += step_a
        ga = g(alpha)
        if abs(ga) < 1e-12 * max(1.0, abs(v1)):
            break
    v[-1] = v1 - slope * alpha
    w[-1] = w1 + alpha


def step(state: SimState, config: SimConfig, dt: float | None = None) -> SimState:
    """Advance one step with classical 4-stage explicit Runge-Kutta.

    The 4-stage scheme is used (rather than a 2-stage one) because its
    stability region covers the imaginary axis, which neutral centered
    differences require; accuracy order exceeds the 2nd-order target.
    """
    gas = config.gas
    t, y = state.t, state.y
    dy = y[1] - y[0]
    if dt is None:
        rho = state.density(gas)
        c = np.sqrt(gas.A * gas.gamma * rho ** (gas.gamma - 1.0))
        zdot, _ = shock_speed(state.v[-1], state.w[-1], gas)
        sdot = config.dsigma(t)
        V = sdot + y * (zdot - sdot)
        L = state.zeta - state.sigma
        speed = np.max(np.abs(state.w - V) + c) / L
        dt = config.cfl * dy / speed
    if not np.isfinite(dt) or dt <= 0:
        raise SimulationError(f"CFL step size invalid at t={t}: dt={dt}")

    def rhs(tt, zz, vv, ww, pp):
        sig = config.sigma(tt)
        return _rates(tt, sig, zz, y, vv, ww, pp, config)

    v0, w0, p0, z0 = state.v, state.w, state.phi, state.zeta
    k1 = rhs(t, z0, v0, w0, p0)
    v1, w1 = v0 + 0.5 * dt * k1[0], w0 + 0.5 * dt * k1[1]
    _apply_bcs(t + 0.5 * dt, v1, w1, config)
    k2 = rhs(t + 0.5 * dt, z0 + 0.5 * dt * k1[3], v1, w1, p0 + 0.5 * dt * k1[2])
    v2, w2 = v0 + 0.5 * dt * k2[0], w0 + 0.5 * dt * k2[1]
    _apply_bcs(t + 0.5 * dt, v2, w2, config)
    k3 = rhs(t + 0.5 * dt, z0 + 0.5 * dt * k2[3], v2, w2, p0 + 0.5 * dt * k2[2])
    v3, w3 = v0 + dt * k3[0], w0 + dt * k3[1]
    _apply_bcs(t + dt, v3, w3, config)
    k4 = rhs(t + dt, z0 + dt * k3[3], v3, w3, p0 + dt * k3[2])

    tn = t + dt
    vn = v0 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    wn = w0 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    pn = p0 + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    zn = z0 + dt / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    _apply_bcs(tn, vn, wn, config)
    sn = config.sigma(tn)
    if not sn < zn:
        raise SimulationError(f"piston overtook the shock at t={tn}")
    return SimState(t=tn, sigma=sn, zeta=zn, y=y, v=vn, w=wn, phi=pn)


# ---------------------------------------------------------------------------
# run driver
# ---------------------------------------------------------------------------

@dataclass
class SimResult:
    """Output series of a run; one row per output time."""

    config: SimConfig
    s0: float
    t: np.ndarray
    zeta: np.ndarray
    sigma: np.ndarray
    sup_dev: np.ndarray
    rh_residual: np.ndarray
    entropy_margin: np.ndarray
    phi_shock: np.ndarray
    mass_residual: np.ndarray
    completed: bool
    wall_clock: float
    steps: int

    @property
    def zeta_dev(self) -> np.ndarray:
        return np.abs(self.zeta / self.t - self.s0)

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "zeta", "sigma", "sup_dev", "rh_residual",
                         "entropy_margin"])
            for row in zip(self.t, self.zeta, self.sigma, self.sup_dev,
                           self.rh_residual, self.entropy_margin):
                wr.writerow([repr(float(x)) for x in row])

    def summary(self) -> dict:
        return {
            "n": self.config.n,
            "gamma": self.config.gas.gamma,
            "b0": self.config.b0,
            "eps": self.config.eps,
            "grid_points": self.config.grid_points,
            "t_end": self.config.t_end,
            "completed": self.completed,
            "steps": self.steps,
            "wall_clock": self.wall_clock,
            "max_zeta_dev": float(np.max(self.zeta_dev)),
            "max_rh_residual": float(np.max(self.rh_residual)),
            "min_entropy_margin": float(np.min(self.entropy_margin)),
            "max_mass_residual": float(np.max(self.mass_residual[1:]))
            if len(self.mass_residual) > 1 else 0.0,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _mass_integral(state: SimState, gas: GasParams, n: int) -> float:
    rho = state.density(gas)
    r = state.r
    return float(np.trapezoid(rho * r ** (n - 1), r))


def run(config: SimConfig, sol: SelfSimilarSolution | None = None,
        wall_clock_budget: float | None = None) -> SimResult:
    """Integrate from t0 to t_end, recording deviation diagnostics.

    Records at logarithmically spaced output times: shock/piston radii, the
    sup-norm gradient deviation from the modified background, the
    Rankine-Hugoniot residual of the current shock state, the entropy
    margin H - rho0, the potential trace at the shock (continuity check),
    and a weak-form mass-balance residual between consecutive outputs.
    If wall_clock_budget (seconds) is exceeded the partial series is
    returned with completed=False.
    """
    if sol is None:
        sol = solve_background(config.b0, config.gas, n=config.n,
                               grid_size=max(512, 2 * config.grid_points))
    mb = modified_background(sol, config)
    state = init_from_background(sol, config)
    gas = config.gas

    n_out = max(2, int(np.log10(config.t_end / config.t0) * config.outputs_per_decade))
    out_times = np.geomspace(config.t0, config.t_end, n_out)

    rows = {k: [] for k in ("t", "zeta", "sigma", "sup_dev", "rh", "margin",
                            "phi_shock", "mass")}
    prev_mass = None
    prev = None

    def record(st: SimState):
        nonlocal prev_mass, prev
        zdot, margin = shock_speed(st.v[-1], st.w[-1], gas)
        H = margin + gas.rho0
        rh = abs(H * st.w[-1] - (H - gas.rho0) * zdot)
        d_t, d_r = mb.grad_phi_a(st.t, st.r)
        sup_dev = float(max(np.max(np.abs(st.v - d_t)), np.max(np.abs(st.w - d_r))))
        mass = _mass_integral(st, gas, config.n)
        if prev is None:
            mres = 0.0
        else:
            # weak mass balance: d/dt int rho r^{n-1} dr = rho0 zeta^{n-1} zeta'
            dt_out = st.t - prev[0]
            swept = gas.rho0 * (st.zeta ** config.n - prev[1] ** config.n) / config.n
            mres = abs((mass - prev_mass) - swept) / max(abs(mass), 1.0)
        prev_mass, prev = mass, (st.t, st.zeta)
        rows["t"].append(st.t)
        rows["zeta"].append(st.zeta)
        rows["sigma"].append(st.sigma)
        rows["sup_dev"].append(sup_dev)
        rows["rh"].append(rh)
        rows["margin"].append(margin)
        rows["phi_shock"].append(abs(st.phi[-1]))
        rows["mass"].append(mres)

    record(state)
    start = _time.monotonic()
    steps = 0
    next_out = 1
    completed = True
    while state.t < config.t_end:
        state = step(state, config)
        steps += 1
        while next_out < n_out and state.t >= out_times[next_out]:
            record(state)
            next_out += 1
        if wall_clock_budget is not None and _time.monotonic() - start > wall_clock_budget:
            completed = bool(state.t >= config.t_end)
            break
    if completed and (not rows["t"] or rows["t"][-1] < state.t):
        record(state)

    return SimResult(
        config=config,
        s0=sol.s0,
        t=np.array(rows["t"]),
        zeta=np.array(rows["zeta"]),
        sigma=np.array(rows["sigma"]),
        sup_dev=np.array(rows["sup_dev"]),
        rh_residual=np.array(rows["rh"]),
        entropy_margin=np.array(rows["margin"]),
        phi_shock=np.array(rows["phi_shock"]),
        mass_residual=np.array(rows["mass"]),
        completed=completed,
        wall_clock=_time.monotonic() - start,
        steps=steps,
    )


# ---------------------------------------------------------------------------
# decay fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    """Least-squares decay exponent of a deviation series: dev ~ (1+t)^(-m0)."""

    m0_est: float
    residual: float
    window: tuple
    t: np.ndarray = field(repr=False)
    dev: np.ndarray = field(repr=False)


def fit_decay(t, dev, window: tuple = (2.0, None), floor: float | None = None) -> DecayFit:
    """Fit log(dev) vs log(1+t) on the window (excludes the initial
    transient; default start t = 2).  Values at or below the floor
    (discretization noise) are excluded; an empty or degenerate window
    raises with a hint to shrink it.
    """
    t = np.asarray(t, dtype=float)
    dev = np.asarray(dev, dtype=float)
    lo = window[0] if window[0] is not None else t[0]
    hi = window[1] if window[1] is not None else t[-1]
    mask = (t >= lo) & (t <= hi)
    if floor is not None:
        mask &= dev > floor
    if np.any(dev[mask] <= 0.0):
        raise ValueError(
            "non-positive deviations in the fit window: the series has hit "
            "the discretization floor; shrink the window or pass floor=")
    tm, dm = t[mask], dev[mask]
    if len(tm) < 4 or tm[-1] / tm[0] < 10.0 ** 0.5:
        raise ValueError("fit window too short: need a decent span in t")
    coeffs, res, *_ = np.polyfit(np.log1p(tm), np.log(dm), 1, full=True)
    residual = float(np.sqrt(res[0] / len(tm))) if len(res) else 0.0
    return DecayFit(m0_est=float(-coeffs[0]), residual=residual,
                    window=(float(lo), float(hi)), t=tm, dev=dm)
