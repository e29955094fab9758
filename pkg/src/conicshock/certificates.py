"""Energy-multiplier certificates for the conic shock background.

The stability argument for the perturbed shock rests on a weighted
vector-field multiplier

    M = A(t, r) dt + B(t, r) dr,    A = t^mu * r,  B = t^(mu+1) * b_sigma(r/t),

applied to the wave operator of the perturbation potential.  Integrating by
parts turns the bulk term into a quadratic form in (dt phi, dr phi, Z phi)
whose coefficients K00, K0r, Krr, Knn are explicit functionals of the
background profile, and turns the shock-surface term into a quadratic form
with coefficients beta_1j.  The multiplier "certifies" a decay rate t^(-m0)
when every sign condition holds pointwise:

    K00 > 0,   K0r^2 - 4*K00*Krr < 0,   Knn > 0   in the bulk,

plus positivity/negativity of the combined boundary coefficients.  This
module evaluates all of these on a solved background, together with the
closed-form admissible window for the weight exponent mu, the tilt constant
e entering b_sigma, and the certified decay exponent.

All certificate evaluations use the unperturbed multiplier (the tilt enters
through the background shape only), which is the regime where the sign
conditions are meaningful.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .background import SelfSimilarSolution, solve_background
from .gas import GasParams, enthalpy


class DegenerateShockError(RuntimeError):
    """The leading boundary coefficient B1 vanishes; the oblique-derivative
    reduction of the shock condition is undefined."""


# ---------------------------------------------------------------------------
# closed-form constants: decay exponent, mu-window, tilt constant
# ---------------------------------------------------------------------------

def _check_n(n: int) -> None:
    if n not in (2, 3):
        raise ValueError(f"dimension n must be 2 or 3, got {n}")


def decay_exponent(n: int, gamma: float) -> float:
    """Supremum of certified decay rates m0 for the perturbation potential.

    The multiplier argument yields decay t^(-m0) for every
    m0 < 5/4 - sqrt((gamma+1)/2)/4 in dimension 2 and
    m0 < 3/2 - sqrt((gamma+7)/2)/4 in dimension 3.
    """
    _check_n(n)
    if n == 2:
        return 1.25 - 0.25 * np.sqrt((gamma + 1.0) / 2.0)
    return 1.5 - 0.25 * np.sqrt((gamma + 7.0) / 2.0)


@dataclass(frozen=True)
class MuWindow:
    """Open interval of weight exponents for which the multiplier signs close."""

    lo: float
    hi: float

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, mu: float) -> bool:
        return bool(self.lo < mu < self.hi)


def admissible_mu(n: int, gamma: float) -> MuWindow:
    """Admissible open window for the weight exponent mu.

    n=3: (-4, -1 - sqrt((gamma+7)/2)/2);  n=2: (-3, -1/2 - sqrt((gamma+1)/2)/2).
    """
    _check_n(n)
    if n == 2:
        return MuWindow(-3.0, -0.5 - 0.5 * np.sqrt((gamma + 1.0) / 2.0))
    return MuWindow(-4.0, -1.0 - 0.5 * np.sqrt((gamma + 7.0) / 2.0))


def multiplier_e(n: int, gamma: float) -> float:
    """Tilt constant in the radial weight b_sigma = s^2 (1 + (e/b0)(s - b0)).

    n=3: e = sqrt((gamma+7)/2)/2 - 1;  n=2: e = sqrt((gamma+1)/2)/2 - 1/2.
    The tilt makes the bulk quadratic form strictly definite inside the
    mu-window.
    """
    _check_n(n)
    if n == 2:
        return 0.5 * np.sqrt((gamma + 1.0) / 2.0) - 0.5
    return 0.5 * np.sqrt((gamma + 7.0) / 2.0) - 1.0


def symbolic_conditions(n: int, gamma: float, mu: float, e: float) -> dict:
    """The three closed-form inequalities equivalent to the leading-order
    bulk sign pattern: K00 > 0, discriminant < 0, Knn > 0.

    n=3: 2+e-mu > 0, 2+e+mu < 0, gamma+7-2(e-mu)^2 < 0; for n=2 the same
    with 2 -> 1 and gamma+7 -> gamma+1.
    """
    _check_n(n)
    base = 2.0 if n == 3 else 1.0
    gshift = 7.0 if n == 3 else 1.0
    return {
        "k00_leading": base + e - mu,
        "knn_leading": -(base + e + mu),
        "disc_leading": -(gamma + gshift - 2.0 * (e - mu) ** 2),
    }


# ---------------------------------------------------------------------------
# multiplier choice
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierChoice:
    """The concrete weighted multiplier A = t^mu r a(s), B = t^(mu+1) b_sigma(s).

    The radial factor a is identically 1; b_sigma carries the tilt constant e.
    """

    n: int
    gamma: float
    b0: float
    mu: float
    e: float

    @classmethod
    def standard(cls, n: int, gamma: float, b0: float, mu: float | None = None) -> "MultiplierChoice":
        """Tilt from the closed form; mu defaults to the window midpoint."""
        if mu is None:
            mu = admissible_mu(n, gamma).midpoint
        return cls(n=n, gamma=gamma, b0=b0, mu=float(mu), e=float(multiplier_e(n, gamma)))

    def a(self, s):
        return np.ones_like(np.asarray(s, dtype=float))

    def b_sigma(self, s):
        s = np.asarray(s, dtype=float)
        return s ** 2 * (1.0 + (self.e / self.b0) * (s - self.b0))

    def db_sigma(self, s):
        s = np.asarray(s, dtype=float)
        return 2.0 * s * (1.0 + (self.e / self.b0) * (s - self.b0)) + s ** 2 * (self.e / self.b0)

    # closed-form weights and their derivatives (s = r/t); these are the only
    # place the chain rule is applied, and they are unit-tested against
    # finite differences.

    def A_weight(self, t, r):
        return t ** self.mu * r

    def B_weight(self, t, r):
        return t ** (self.mu + 1.0) * self.b_sigma(r / t)

    def dA_dt(self, t, r):
        return self.mu * t ** (self.mu - 1.0) * r

    def dA_dr(self, t, r):
        return t ** self.mu * np.ones_like(np.asarray(r, dtype=float))

    def dB_dt(self, t, r):
        s = r / t
        return t ** self.mu * ((self.mu + 1.0) * self.b_sigma(s) - s * self.db_sigma(s))

    def dB_dr(self, t, r):
        return t ** self.mu * self.db_sigma(r / t)


# ---------------------------------------------------------------------------
# transport-coefficient polynomials of the background profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PCoeffs:
    """First-order coefficient functions of the perturbation wave operator,
    sampled on the background range [b0, s0], plus the s-derivatives needed
    by the divergence computation."""

    s: np.ndarray
    P1: np.ndarray          # u
    P2: np.ndarray          # u^2 - c^2
    P3: np.ndarray          # c^2
    P4: np.ndarray          # (gamma-1)((n-1) u + s u')
    P5: np.ndarray          # (n-1)(gamma-1) u^2 - (n-1) c^2 - 2 s^2 u' + (gamma+1) s u u'
    dP1: np.ndarray
    dP2: np.ndarray
    dP3: np.ndarray
    n: int
    gamma: float
    b0: float


def P_coeffs(sol: SelfSimilarSolution) -> PCoeffs:
    """Evaluate the wave-operator coefficient polynomials on [b0, s0].

    All derivatives come from the background ODE right-hand side (no finite
    differencing), so the samples are exact functionals of the profile.
    """
    g = sol.gas.gamma
    n = sol.n
    sl = slice(sol.i0, sol.i1 + 1)
    s = sol.s[sl]
    u = sol.u[sl]
    du = sol.du[sl]
    rho = sol.rho[sl]
    drho = sol.drho[sl]
    csq = sol.csq[sl]
    dcsq = (g - 1.0) * csq * drho / rho
    return PCoeffs(
        s=s,
        P1=u,
        P2=u ** 2 - csq,
        P3=csq,
        P4=(g - 1.0) * ((n - 1) * u + s * du),
        P5=(n - 1) * (g - 1.0) * u ** 2 - (n - 1) * csq - 2.0 * s ** 2 * du
        + (g + 1.0) * s * u * du,
        dP1=du,
        dP2=2.0 * u * du - dcsq,
        dP3=dcsq,
        n=n,
        gamma=g,
        b0=sol.b0,
    )


# ---------------------------------------------------------------------------
# shock-boundary coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryCoeffs:
    """Coefficients of the linearized shock condition at s0.

    The condition reduces to an oblique derivative dr phi + mu1 dt phi plus
    mu2 times the shock displacement; mu3 is the (negative) factor relating
    the potential trace to the displacement.
    """

    B1: float
    B2: float
    B3: float
    mu1: float
    mu2: float
    mu3: float


def boundary_coeffs(sol: SelfSimilarSolution) -> BoundaryCoeffs:
    """Evaluate the linearized shock-condition coefficients at s = s0.

    Raises DegenerateShockError if the leading coefficient B1 is numerically
    zero.  For b0 >= 40 the signs mu1 > 0, mu2 < 0 are asserted (they are
    what makes the oblique boundary condition dissipative).
    """
    gas = sol.gas
    i = sol.i1
    s0 = sol.s0
    u = float(sol.u[i])
    rho = float(sol.rho[i])
    csq = float(sol.csq[i])
    du = float(sol.du[i])
    drho = float(sol.drho[i])
    # Bernoulli deficit across the layer: (1/2) u^2 - h(rho) + h(rho0)
    q = 0.5 * u ** 2 - float(enthalpy(rho, gas)) + gas.B0

    B1 = 2.0 * rho * u - (rho * u / csq) * q
    B2 = rho - gas.rho0 - (rho / csq) * q
    B3 = (
        2.0 * rho * u * du
        + drho * q
        - (rho - gas.rho0) * (u * du + (csq / rho) * drho)
    )
    if abs(B1) < 1e-10 * gas.rho0 * max(1.0, sol.b0):
        raise DegenerateShockError("leading shock-condition coefficient B1 ~ 0")
    mu1 = B2 / B1
    mu2 = B3 / B1
    mu3 = -u  # trace factor: minus the particle speed just behind the shock
    if sol.b0 >= 40.0 and not (mu1 > 0.0 and mu2 < 0.0):
        raise RuntimeError(
            f"boundary coefficient signs mu1={mu1}, mu2={mu2} violate the "
            "dissipativity pattern expected for b0 >= 40"
        )
    return BoundaryCoeffs(B1=B1, B2=B2, B3=B3, mu1=mu1, mu2=mu2, mu3=mu3)


def shock_flux_betas(sol: SelfSimilarSolution, choice: MultiplierChoice,
                     bc: BoundaryCoeffs | None = None) -> dict:
    """Quadratic form of the multiplier energy flux through the shock surface.

    Combining the radial flux components with the surface motion gives, per
    unit surface measure at t = 1,

        beta11 (dt phi)^2 + beta12 dt phi dr phi + beta13 (dr phi)^2
        + beta14 |Z phi / r|^2,

    and eliminating dr phi through the oblique boundary condition
    (dr phi = -mu1 dt phi + ...) yields the hatted coefficients whose signs
    control whether the boundary terms are absorbable:
    beta_hat11 > 0, beta_hat13 < 0, beta_hat14 > 0.
    """
    if bc is None:
        bc = boundary_coeffs(sol)
    s0 = sol.s0
    u = float(sol.u[sol.i1])
    p0 = float(sol.csq[sol.i1])
    bs = float(choice.b_sigma(s0))
    beta11 = -0.5 * bs + u * s0 - 0.5 * s0 ** 2
    beta12 = s0 * (u ** 2 - p0 - bs)
    beta13 = bs * (0.5 * u ** 2 - 0.5 * p0 - s0 * u) + 0.5 * s0 ** 2 * (u ** 2 - p0)
    beta14 = 0.5 * p0 * (bs - s0 ** 2)
    m1 = bc.mu1
    return {
        "beta11": beta11,
        "beta12": beta12,
        "beta13": beta13,
        "beta14": beta14,
        "beta_hat11": beta11 - m1 * beta12 + m1 ** 2 * beta13,
        "beta_hat12": beta12 - 2.0 * m1 * beta13,
        "beta_hat13": beta13,
        "beta_hat14": beta14,
    }


# ---------------------------------------------------------------------------
# bulk K-coefficient table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierCertificate:
    """Result of evaluating every multiplier sign condition on a background.

    K-samples are given at t = 1; the exact time dependence of each is the
    common factor t^mu (Knn is reported against the scaled angular gradient
    Z phi / r, which restores the t^mu homogeneity of the raw table).
    """

    choice: MultiplierChoice
    s: np.ndarray
    K00: np.ndarray
    K0r: np.ndarray
    Krr: np.ndarray
    Knn: np.ndarray
    discriminant: np.ndarray
    conditions: dict            # name -> value; all must be > 0
    betas: dict
    mu_window: MuWindow
    mu_in_window: bool
    symbolic_pass: bool
    k00_positive: bool
    disc_negative: bool
    knn_positive: bool
    boundary_pass: bool
    in_asymptotic_regime: bool
    boundary: BoundaryCoeffs | None = None
    notes: tuple = field(default=())

    @property
    def numeric_pass(self) -> bool:
        return (self.k00_positive and self.disc_negative and self.knn_positive
                and self.boundary_pass)

    @property
    def status(self) -> str:
        if self.symbolic_pass and self.numeric_pass:
            return "pass"
        if not self.in_asymptotic_regime:
            return "outside asymptotic regime"
        return "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def summary(self) -> dict:
        out = {
            "n": self.choice.n,
            "gamma": self.choice.gamma,
            "b0": self.choice.b0,
            "mu": float(self.choice.mu),
            "e": float(self.choice.e),
            "mu_window": [float(self.mu_window.lo), float(self.mu_window.hi)],
            "mu_in_window": self.mu_in_window,
            "conditions": {k: float(v) for k, v in self.conditions.items()},
            "symbolic_pass": self.symbolic_pass,
            "K00_min": float(np.min(self.K00)),
            "discriminant_max": float(np.max(self.discriminant)),
            "Knn_min": float(np.min(self.Knn)),
            "k00_positive": self.k00_positive,
            "disc_negative": self.disc_negative,
            "knn_positive": self.knn_positive,
            "betas": {k: float(v) for k, v in self.betas.items()},
            "boundary_pass": self.boundary_pass,
            "in_asymptotic_regime": self.in_asymptotic_regime,
            "status": self.status,
            "notes": list(self.notes),
        }
        if self.boundary is not None:
            out["boundary"] = {
                "B1": float(self.boundary.B1),
                "B2": float(self.boundary.B2),
                "B3": float(self.boundary.B3),
                "mu1": float(self.boundary.mu1),
                "mu2": float(self.boundary.mu2),
                "mu3": float(self.boundary.mu3),
            }
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _k_samples(pc: PCoeffs, choice: MultiplierChoice, t: float = 1.0):
    """Pointwise divergence coefficients of the multiplier energy identity.

    Each K is the coefficient of the corresponding quadratic gradient term
    after moving all derivatives of (A, B) onto the weights analytically;
    the spatial profile multiplies the exact factor t^mu (Knn measured
    against |Z phi / r|^2 times r^2 / t^2, i.e. the s-scaled angular slot).
    """
    mu = choice.mu
    n = pc.n
    s = pc.s
    bs = choice.b_sigma(s)
    dbs = choice.db_sigma(s)
    P1, P2, P3, P4, P5 = pc.P1, pc.P2, pc.P3, pc.P4, pc.P5
    dP1, dP2, dP3 = pc.dP1, pc.dP2, pc.dP3

    k00 = (-0.5 * mu * s + 0.5 * dbs - (P1 + s * dP1) + P4
           + (n - 1) * bs / (2.0 * s) - (n - 1) * P1)
    k0r = (-((mu + 1.0) * bs - s * dbs) - (P2 + s * dP2) + P5
           + bs * P4 / s - (n - 1) * P2)
    krr = (-((mu + 1.0) * bs * P1 - s * (dbs * P1 + bs * dP1))
           + 0.5 * s * (mu * P2 - s * dP2)
           - 0.5 * (dbs * P2 + bs * dP2)
           + bs * P5 / s
           - (n - 1) * bs * P2 / (2.0 * s))
    knn = s ** 2 * (
        -(mu * P3 - s * dP3) / (2.0 * s)
        - 0.5 * ((dbs * P3 + bs * dP3) / s ** 2 - 2.0 * bs * P3 / s ** 3)
        - (n - 1) * bs * P3 / (2.0 * s ** 3)
    )
    scale = t ** mu
    return scale * k00, scale * k0r, scale * krr, scale * knn


def K_coeffs(sol: SelfSimilarSolution, choice: MultiplierChoice,
             bc: BoundaryCoeffs | None = None) -> MultiplierCertificate:
    """Evaluate the full sign certificate for a multiplier choice.

    Combines: the closed-form window/inequality checks on (mu, e); the
    pointwise bulk signs K00 > 0, K0r^2 - 4 K00 Krr < 0, Knn > 0 on
    s in [b0, s0]; and the shock-flux coefficient signs
    beta_hat11 > 0 (vs the reference level (gamma-1) b0^2 / 8),
    beta_hat13 < 0 (vs -(gamma-1) b0^4 / 2), beta_hat14 > 0.
    """
    g = sol.gas.gamma
    pc = P_coeffs(sol)
    K00, K0r, Krr, Knn = _k_samples(pc, choice, t=1.0)
    disc = K0r ** 2 - 4.0 * K00 * Krr

    window = admissible_mu(choice.n, g)
    conds = symbolic_conditions(choice.n, g, choice.mu, choice.e)
    mu_ok = window.contains(choice.mu)
    symbolic_pass = mu_ok and all(v > 0.0 for v in conds.values())

    notes = []
    try:
        if bc is None:
            bc = boundary_coeffs(sol)
        betas = shock_flux_betas(sol, choice, bc)
        ref11 = (g - 1.0) * sol.b0 ** 2 / 8.0
        ref13 = (g - 1.0) * sol.b0 ** 4 / 2.0
        boundary_pass = bool(
            betas["beta_hat11"] > 0.0
            and 0.5 < betas["beta_hat11"] / ref11 < 2.0
            and betas["beta_hat13"] < 0.0
            and 0.5 < -betas["beta_hat13"] / ref13 < 2.0
            and betas["beta_hat14"] > 0.0
        )
    except DegenerateShockError as exc:
        bc = None
        betas = {}
        boundary_pass = False
        notes.append(str(exc))

    in_regime = sol.b0 >= 40.0
    if not in_regime:
        notes.append("b0 < 40: sign checks reported outside the asymptotic regime")

    return MultiplierCertificate(
        choice=choice,
        s=pc.s,
        K00=K00,
        K0r=K0r,
        Krr=Krr,
        Knn=Knn,
        discriminant=disc,
        conditions=conds,
        betas=betas,
        mu_window=window,
        mu_in_window=mu_ok,
        symbolic_pass=symbolic_pass,
        k00_positive=bool(np.all(K00 > 0.0)),
        disc_negative=bool(np.all(disc < 0.0)),
        knn_positive=bool(np.all(Knn > 0.0)),
        boundary_pass=boundary_pass,
        in_asymptotic_regime=in_regime,
        boundary=bc,
        notes=tuple(notes),
    )


def certify(n: int, gamma: float, b0: float, mu: float,
            gas: GasParams | None = None, grid_size: int = 1024) -> MultiplierCertificate:
    """Solve the background and run the complete multiplier certificate."""
    _check_n(n)
    if gas is None:
        gas = GasParams(A=1.0, gamma=gamma, rho0=1.0)
    elif gas.gamma != gamma:
        raise ValueError("gas.gamma disagrees with the gamma argument")
    sol = solve_background(b0, gas, n=n, grid_size=grid_size)
    choice = MultiplierChoice.standard(n, gamma, b0, mu=mu)
    return K_coeffs(sol, choice)


# ---------------------------------------------------------------------------
# Hardy-identity backbone of the boundary absorption step
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HardyReport:
    identity_residual: float
    inequality_slack: float
    lhs: float
    boundary_term: float


def hardy_identity_check(phi, dphi, mu: float, T: float,
                         n_points: int = 10001) -> HardyReport:
    """Verify the weighted integration-by-parts identity on a trace phi(t).

        int_1^T t^(mu-1) phi^2 dt
          = (1/mu) [t^mu phi^2]_1^T - (2/mu) int_1^T t^mu phi phi' dt,

    by Simpson quadrature, and the Cauchy-Schwarz consequence

        int t^(mu-1) phi^2
          <= (1/|mu|) |[t^mu phi^2]_1^T|
             + (2/|mu|) (int t^(mu-1) phi^2)^(1/2) (int t^(mu+1) phi'^2)^(1/2).

    phi and dphi are callables on [1, T]; mu must be < -1 so the weights
    integrate at infinity.
    """
    if mu >= -1.0:
        raise ValueError("hardy check requires mu < -1")
    from scipy.integrate import simpson

    # log-spaced nodes: the weights are steepest near t = 1, and Simpson on
    # a graded mesh keeps the quadrature error near roundoff there
    t = np.exp(np.linspace(0.0, np.log(T), n_points))
    f = np.asarray(phi(t), dtype=float)
    df = np.asarray(dphi(t), dtype=float)
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(df))):
        raise ValueError("trace values must be finite on [1, T]")

    lhs = simpson(t ** (mu - 1.0) * f ** 2, x=t)
    cross = simpson(t ** mu * f * df, x=t)
    bndry = T ** mu * f[-1] ** 2 - f[0] ** 2
    rhs = bndry / mu - 2.0 * cross / mu
    residual = abs(lhs - rhs) / max(1.0, abs(lhs))

    grad = simpson(t ** (mu + 1.0) * df ** 2, x=t)
    bound = (abs(bndry) + 2.0 * np.sqrt(max(lhs, 0.0) * max(grad, 0.0))) / abs(mu)
    slack = bound - lhs
    return HardyReport(identity_residual=float(residual),
                       inequality_slack=float(slack),
                       lhs=float(lhs),
                       boundary_term=float(bndry))
