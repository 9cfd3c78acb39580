"""Blow-up boundary profiles.

The profile h is built two ways: by inverting the integral identity

    int_{h(t)}^inf ds/sqrt(2 F(s)) = int_0^t k(s) ds        (k-integrand)
    int_{h(t)}^inf ds/sqrt(2 F(s)) = int_0^t sqrt(k(s)) ds  (sqrt-k-integrand)

and, for singular absorption terms, as the solution of h'' = g(h) with
h(0) = h'(0) = 0.  The two integral variants correspond to the two weight
normalizations b ~ c*k^2(d) and b ~ c*k(d); they coexist and are never
converted into one another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .ioutil import atomic_write_text, fmt
from .karamata import Antiderivative, KFunction, Nonlinearity, keller_osserman, xi0_power
from .numerics import classify_origin_integral, find_root_monotone, integrate_finite

VARIANT_K = "k-integrand"          # Phi(h) = int_0^t k;      pairs with b ~ c k^2(d)
VARIANT_SQRT_K = "sqrt-k-integrand"  # Phi(h) = int_0^t sqrt(k); pairs with b ~ c k(d)

# profile variant <-> weight normalization tag used by radial solutions
VARIANT_NORMALIZATION = {VARIANT_K: "k2", VARIANT_SQRT_K: "k"}


def tail_map(nl: Nonlinearity, tol: float = 1e-9):
    """Phi(y) = int_y^inf (2F(s))^(-1/2) ds via s = y/(1-w), w in (0,1).

    tol below ~1e-9 is refused by the quadrature error estimator on the
    fractional-power tails left after grading; the achieved accuracy is
    better (the profile round-trip check is enforced independently).
    """
    F = nl.F
    memo: dict[float, float] = {}

    def phi(y: float) -> float:
        if y <= 0.0:
            raise ValueError("tail map defined for y > 0")
        if y in memo:
            return memo[y]

        def integrand(w):
            om = 1.0 - w
            if om <= 0.0:
                return 0.0
            s = y / om
            Fs = F(s)
            if not math.isfinite(Fs):
                return 0.0
            return (2.0 * Fs) ** -0.5 * y / (om * om)

        value, _ = integrate_finite(integrand, 0.0, 1.0, tol)
        memo[y] = value
        return value

    return phi


@dataclass
class BlowupProfile:
    """Monotone table of the profile h with its rate constants.

    h decreases in t with h(t) -> inf as t -> 0+; interpolation is
    monotone cubic in log-log; queries outside the table raise (no silent
    extrapolation).  xi0 multiplies h in the predicted boundary rate; the
    optional (chi, varpi) pair enables the two-term rate.
    """

    variant: str
    f: Nonlinearity
    k: KFunction
    c: float
    xi0: float | None
    t: np.ndarray
    h: np.ndarray
    chi: float | None = None
    varpi: float | None = None
    roundtrip_err: float = 0.0
    _phi: object = field(default=None, repr=False)
    _interp: object = field(default=None, repr=False)
    _k_fast: object = field(default=None, repr=False)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        if np.any(np.diff(self.t) <= 0.0):
            raise ValueError("profile table t must be increasing")
        if np.any(np.diff(self.h) >= 0.0):
            raise ValueError("profile h must be decreasing in t")
        self._interp = PchipInterpolator(np.log(self.t), np.log(self.h))

    @property
    def normalization(self) -> str:
        return VARIANT_NORMALIZATION[self.variant]

    def h_at(self, d: float) -> float:
        if not (self.t[0] <= d <= self.t[-1]):
            raise ValueError(
                f"d={d!r} outside the profile table [{self.t[0]!r}, {self.t[-1]!r}]; "
                "extrapolation refused"
            )
        return float(math.exp(self._interp(math.log(d))))

    def h_prime(self, t: float) -> float:
        """h'(t) = -w(t) sqrt(2 F(h(t))) with w = k or sqrt(k) per variant."""
        kt = self._k_value(t)
        return -kt * math.sqrt(2.0 * self.f.F(self.h_at(t)))

    def h_second(self, t: float) -> float:
        """h'' from differentiating the defining identity (not differences)."""
        kt = self._k_value(t)
        dkt = self._k_deriv(t)
        h = self.h_at(t)
        return kt * kt * self.f.f(h) - dkt * math.sqrt(2.0 * self.f.F(h))

    def _k_value(self, t: float) -> float:
        if self._k_fast is None:
            self._k_fast = self.k.k.fast()
        v = self._k_fast(t)
        return v if self.variant == VARIANT_K else math.sqrt(v)

    def _k_deriv(self, t: float) -> float:
        kv = self.k.k.fast()(t)
        dv = self.k.k.derivative_fn().fast()(t)
        if self.variant == VARIANT_K:
            return dv
        return 0.5 * dv / math.sqrt(kv)

    def export_csv(self, path):
        lines = [f"# variant={self.variant}", "t,h,h_prime"]
        for ti in self.t:
            lines.append(f"{fmt(ti)},{fmt(self.h_at(float(ti)))},{fmt(self.h_prime(float(ti)))}")
        atomic_write_text(path, "\n".join(lines) + "\n")


def build_profile(f: Nonlinearity, k: KFunction, variant: str = VARIANT_K,
                  t_grid=None, c: float = 1.0, tol: float = 1e-10) -> BlowupProfile:
    """Invert the integral identity for h on a geometric t-grid.

    Requires the Keller-Osserman integral of f to converge (the identity is
    vacuous otherwise).  h(t) is found by monotone root-finding on the tail
    map Phi; the round-trip Phi(h(t)) = int_0^t (k or sqrt k) is checked to
    1e-8 relative on the whole table.
    """
    if variant not in (VARIANT_K, VARIANT_SQRT_K):
        raise ValueError(f"unknown profile variant {variant!r}")
    ko = keller_osserman(f)
    if not ko.is_convergent:
        raise ValueError(
            f"Keller-Osserman integral is {ko.status}; large solutions do not exist, "
            "so no blow-up profile is defined"
        )
    if t_grid is None:
        t_grid = k.nu * 2.0 ** (-np.arange(1, 33, dtype=float))
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    if t_grid[0] <= 0.0 or t_grid[-1] >= k.nu * (1.0 + 1e-12):
        raise ValueError("t_grid must lie inside (0, nu)")

    k_fast = k.k.fast()
    if variant == VARIANT_K:
        weight = k_fast
    else:
        def weight(s):
            return math.sqrt(k_fast(s))
    I_k = Antiderivative(weight, tol=min(tol, 1e-11))
    phi = tail_map(f, tol=1e-9)

    hs = np.empty_like(t_grid)
    h_prev = None
    rho = f.rho if (f.rho is not None and math.isfinite(f.rho)) else 4.0
    for idx in range(t_grid.size - 1, -1, -1):
        t = float(t_grid[idx])
        target = I_k(t)
        if target <= 0.0:
            raise ValueError(f"int_0^t weight vanished at t={t!r}")
        if h_prev is None:
            lo, hi = 1e-8, 10.0
        else:
            # warm start: h scales like t^(-2/rho) between neighbouring nodes
            factor = (t_grid[idx + 1] / t) ** (2.0 / max(rho, 1e-3))
            lo, hi = h_prev, h_prev * max(factor, 1.0 + 1e-6) * 1.5
        hs[idx] = find_root_monotone(phi, target, lo, hi, tol=tol * abs(target))
        h_prev = hs[idx]

    # round-trip check of the defining identity
    rel = 0.0
    for t, h in zip(t_grid, hs):
        lhs, rhs = phi(float(h)), I_k(float(t))
        rel = max(rel, abs(lhs - rhs) / (abs(rhs) + 1e-300))
    if rel > 1e-8:
        raise ValueError(f"profile round-trip error {rel:.3e} exceeds 1e-8")

    xi0 = None
    if f.rho is not None:
        if math.isfinite(f.rho) and f.rho > 0.0:
            xi0 = xi0_power(f.rho, k.ell1, c)
        elif f.rho == math.inf:
            xi0 = 1.0  # limit of ((2 + ell1 rho)/(c(2+rho)))^(1/rho)
    return BlowupProfile(variant=variant, f=f, k=k, c=c, xi0=xi0,
                         t=t_grid, h=hs, roundtrip_err=rel)


def predicted_rate(profile: BlowupProfile, d: float, order: str = "one") -> float:
    """xi0*h(d), or xi0*h(d)*(1 + chi d^varpi) for the two-term rate."""
    if profile.xi0 is None:
        raise ValueError("profile has no rate constant xi0 (rho unavailable)")
    base = profile.xi0 * profile.h_at(d)
    if order == "one":
        return base
    if order == "two":
        if profile.chi is None or profile.varpi is None:
            raise ValueError("two-term rate requires chi and varpi on the profile")
        return base * (1.0 + profile.chi * d ** profile.varpi)
    raise ValueError("order must be 'one' or 'two'")


# ---------------------------------------------------------------------------
# The sub-solution profile h'' = g(h), h(0) = h'(0) = 0
# ---------------------------------------------------------------------------

@dataclass
class OdeProfile:
    """Grid solution of h'' = g(h) from a singular-origin power start.

    Invariants (checked by callers/tests): h, h' nondecreasing, h'' = g(h)
    nonincreasing, t h'(t) <= 2 h(t), and h(t) <= C t^(2/(1+alpha)) near 0.
    """

    t: np.ndarray
    h: np.ndarray
    hp: np.ndarray
    hpp: np.ndarray
    alpha: float
    c0: float
    power_coef: float  # C of the local start h ~ C t^(2/(1+alpha))

    def lh_constants(self, p: float) -> tuple[float, float]:
        """(c1, c2) with (h')^p <= c1 g(h) + c2: c1 = 2 h(T), c2 = h'(T)^2+1."""
        if not 0.0 < p <= 2.0:
            raise ValueError("the gradient power p must lie in (0, 2]")
        return 2.0 * float(self.h[-1]), float(self.hp[-1]) ** 2 + 1.0

    def export_csv(self, path):
        lines = ["t,h,h_prime"]
        for ti, hi, hpi in zip(self.t, self.h, self.hp):
            lines.append(f"{fmt(ti)},{fmt(hi)},{fmt(hpi)}")
        atomic_write_text(path, "\n".join(lines) + "\n")


def profile_ode_g(g: Nonlinearity, t_max: float, n_points: int = 400,
                  tol: float = 1e-11) -> OdeProfile:
    """Integrate h'' = g(h) with h(0) = h'(0) = 0.

    Gate: int_0 g must converge (origin integrability), otherwise the flat
    start h'(0) = 0 is not attainable and this raises.  The start matches
    the local power solution h ~ C t^beta, beta = 2/(1+alpha), obtained
    from g ~ C0 s^-alpha near 0.
    """
    if t_max <= 0.0:
        raise ValueError("t_max must be positive")
    g_call = g.f.fast()
    verdict = classify_origin_integral(lambda s: g_call(s), 1.0, 1e-8)
    if not verdict.is_convergent:
        raise ValueError(
            f"g is not integrable at the origin ({verdict.status}); "
            "h''=g(h) admits no profile with h(0)=h'(0)=0"
        )
    if g.alpha_sing is not None:
        alpha, c0 = g.alpha_sing, g.sing_c0
    else:
        near = np.geomspace(1e-8, 1e-3, 11)
        vals = np.array([g_call(float(s)) for s in near])
        if np.any(vals <= 0.0):
            raise ValueError("g must be positive near the origin")
        alpha = -float(np.polyfit(np.log(near), np.log(vals), 1)[0])
        alpha = max(alpha, 0.0)
        c0 = float(np.median(vals * near ** alpha))
    if alpha >= 1.0:
        raise ValueError(f"origin exponent alpha={alpha:.3f} >= 1 contradicts integrability")

    beta = 2.0 / (1.0 + alpha)
    coef = (c0 / (beta * (beta - 1.0))) ** (1.0 / (1.0 + alpha))

    t0 = 1e-6 * t_max
    y0 = (coef * t0 ** beta, coef * beta * t0 ** (beta - 1.0))

    def rhs(t, y):
        return (y[1], g_call(y[0]))

    grid = np.geomspace(t0 * 2.0, t_max, n_points)
    sol = solve_ivp(rhs, (t0, t_max), y0, method="RK45", rtol=tol, atol=tol * 1e-2,
                    dense_output=True)
    if not sol.success:
        raise ValueError(f"profile ODE integration failed: {sol.message}")
    vals = sol.sol(grid)
    h, hp = vals[0], vals[1]
    hpp = np.array([g_call(float(v)) for v in h])
    return OdeProfile(t=grid, h=h, hp=hp, hpp=hpp, alpha=alpha, c0=c0, power_coef=coef)
