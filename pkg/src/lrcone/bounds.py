"""Lieb-Robinson bound formulas for 2d < alpha < 2d+1 power-law interactions.

Two families of bounds are manipulated here:

* exponential bounds ``c r^xi exp((v t - r) / ell)`` (:class:`ExpBoundParams`),
  built up range scale by range scale through the velocity recursion, and
* algebraic bounds ``C log^kappa(r*) t^gamma / r^beta`` (:class:`AlgBoundParams`),
  tightened towards the fixed point gamma -> (alpha - d)/(alpha - 2d).

All logarithms are natural. Constants the derivation leaves existential
(nu, C1, C2, c and the K_i chain) are arguments with documented defaults.
Functions accept ``fractions.Fraction`` wherever exact bookkeeping matters
(:func:`combine_bounds`, :func:`extend_time`, :func:`compare_bounds`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from numbers import Rational
from typing import Any

from lrcone.errors import ConvergenceError, DomainError

__all__ = [
    "DEFAULT_NU",
    "DegenerateScaleWarning",
    "ExpBoundParams",
    "AlgBoundParams",
    "RecursionTrace",
    "FixpointTrace",
    "TimeExtension",
    "LightCone",
    "BoundComparison",
    "base_bound",
    "xi_constant",
    "g_epsilon",
    "g_tilde_epsilon",
    "lambda_constant",
    "recursion_step",
    "choose_L",
    "choose_n",
    "run_recursion",
    "vn_closed_form",
    "vn_general_form",
    "combine_bounds",
    "extend_time",
    "delta_constant",
    "tighten_step",
    "seed_exponents",
    "fixpoint_gamma",
    "fixpoint_limit",
    "epsilon_domain",
    "theorem_envelope",
    "light_cone_exponent",
    "untrunc_exponent",
    "compare_bounds",
    "correlator_envelope",
    "k3_constant",
    "analytic_time_horizon",
]

DEFAULT_NU = 4 * math.e


class DegenerateScaleWarning(RuntimeWarning):
    """Range base L <= 1: the lattice is too small for the recursion to mean anything."""

INF = math.inf


def _check_window(alpha, d):
    if not 2 * d < alpha < 2 * d + 1:
        raise DomainError(f"alpha must lie in the open interval (2d, 2d+1) = ({2 * d}, {2 * d + 1}); got {alpha}")


# --------------------------------------------------------------------------
# exponential bounds and the velocity recursion


@dataclass(frozen=True)
class ExpBoundParams:
    """``c * r**xi_poly * exp((v t - r) / ell)``, valid for ``t <= dt``."""

    c: Any
    xi_poly: Any
    v: Any
    ell: Any
    dt: Any = INF

    def __post_init__(self):
        if self.c < 1:
            raise DomainError(f"bound coefficient must be >= 1, got {self.c}")
        if self.xi_poly < 0:
            raise DomainError(f"polynomial exponent must be >= 0, got {self.xi_poly}")
        if self.v < 0:
            raise DomainError(f"velocity must be >= 0, got {self.v}")
        if self.ell < 1:
            raise DomainError(f"length scale must be >= 1, got {self.ell}")

    def evaluate(self, r: float, t: float) -> float:
        return float(self.c) * float(r) ** float(self.xi_poly) * math.exp((float(self.v) * t - r) / float(self.ell))

    def is_valid(self, t: float) -> bool:
        return t <= self.dt


def base_bound(tau: float, ell1: float) -> ExpBoundParams:
    """Nearest-scale bound with velocity v_1 = 4 e tau ell_1."""
    if tau <= 0:
        raise DomainError(f"tau must be positive, got {tau}")
    if ell1 < 1:
        raise DomainError(f"ell_1 must be >= 1, got {ell1}")
    return ExpBoundParams(c=1, xi_poly=0, v=4 * math.e * tau * ell1, ell=ell1)


def xi_constant(d: int) -> int:
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    return 4 * (4 * d + 13)


def _check_shell_epsilon(eps):
    if not 0 < eps <= 0.5:
        raise DomainError(f"shell epsilon must lie in (0, 1/2], got {eps}")


def g_epsilon(eps: float, d: int) -> float:
    """Constant with x^d <= g_eps e^{eps x} for all x >= 0: d! / eps^d."""
    return math.factorial(d) / eps**d


def g_tilde_epsilon(eps: float, d: int) -> float:
    # Collects the factors in front of R^{2d}/ell_k^alpha once the shell
    # polynomials are traded for exponentials:
    #   g_eps^2 * e^{2 eps + eps sqrt(d)} * (1 + e^{1+eps})^2 * 2^{2d}
    g = g_epsilon(eps, d)
    return g**2 * math.exp(2 * eps + eps * math.sqrt(d)) * (1 + math.exp(1 + eps)) ** 2 * 2 ** (2 * d)


def lambda_constant(shell_epsilon: float, d: int) -> float:
    """Hypercube interaction strength prefactor lambda(eps, d).

    lambda = g~ * e^2/(e-1) * e^{2+sqrt d} * (e/(e-1) + g) * e^{1/(1-eps)} * (1-eps)^{2d}
    with g = d!/eps^d and g~ from :func:`g_tilde_epsilon`.
    """
    _check_shell_epsilon(shell_epsilon)
    eps = shell_epsilon
    e = math.e
    g = g_epsilon(eps, d)
    return (
        g_tilde_epsilon(eps, d)
        * e**2 / (e - 1)
        * math.exp(2 + math.sqrt(d))
        * (e / (e - 1) + g)
        * math.exp(1 / (1 - eps))
        * (1 - eps) ** (2 * d)
    )


def recursion_step(v_k, ell_k, ell_next, r_star, xi, nu, lam, alpha, d) -> float:
    """v_{k+1} = xi log(r*) v_k + nu lambda ell_{k+1}^{2d+1} / ell_k^alpha."""
    if not ell_next > ell_k:
        raise DomainError(f"range scales must increase: ell_k={ell_k}, ell_next={ell_next}")
    if ell_k < 1:
        raise DomainError(f"ell_k must be >= 1, got {ell_k}")
    if r_star < math.e * (1 - 1e-15):
        raise DomainError(f"lattice diameter must be >= e so that log r* >= 1, got {r_star}")
    # log space: ell^{2d+1} overflows long before v does
    ratio = math.exp((2 * d + 1) * math.log(ell_next) - alpha * math.log(ell_k))
    return xi * math.log(r_star) * v_k + nu * lam * ratio


def choose_L(r_star: float, xi: float, alpha: float, d: int) -> float:
    """L = (xi log r*)^{1/(2d+1-alpha)}, which balances both recursion terms."""
    _check_window(alpha, d)
    x = xi * math.log(r_star)
    if x <= 0:
        raise DomainError(f"xi log r* must be positive, got {x}")
    L = x ** (1 / (2 * d + 1 - alpha))
    if L <= 1:
        warnings.warn(
            f"L = {L} <= 1 (xi log r* = {x}): configuration lies outside the asymptotic regime of the bound",
            DegenerateScaleWarning,
            stacklevel=2,
        )
    return L


@dataclass(frozen=True)
class NChoice:
    n: int
    clamped: bool
    raw: float


def choose_n(r: float, t: float, alpha: float, d: int, eta: float, L: float, *, detail: bool = False):
    """n = floor(log[r (t / r^{alpha-2d})^eta] / log L), clamped below at 1.

    With ``detail=True`` an :class:`NChoice` carrying the clamp flag is returned.
    """
    if not 0 < eta < 1 / (alpha - d):
        raise DomainError(f"eta must lie in (0, 1/(alpha-d)) = (0, {1 / (alpha - d)}), got {eta}")
    if L <= 1:
        raise DomainError(f"L must exceed 1, got {L}")
    if r <= 0 or t <= 0:
        raise DomainError("r and t must be positive")
    raw = (math.log(r) + eta * (math.log(t) - (alpha - 2 * d) * math.log(r))) / math.log(L)
    # absorb one-ulp noise so exact integer ratios such as log 100 / log 10 floor correctly
    n = math.floor(raw + 1e-12)
    clamped = n < 1
    n = max(n, 1)
    return NChoice(n, clamped, raw) if detail else n


@dataclass
class RecursionTrace:
    """Scales and velocities of the range-by-range recursion, k = 1..n."""

    ells: list[float]
    velocities: list[float]
    inputs: dict

    def to_dict(self) -> dict:
        return {
            "inputs": self.inputs,
            "steps": [{"k": k + 1, "ell": l, "v": v} for k, (l, v) in enumerate(zip(self.ells, self.velocities))],
        }

    @property
    def v_n(self) -> float:
        return self.velocities[-1]


def run_recursion(tau, L, n, xi, nu, lam, alpha, d, r_star) -> RecursionTrace:
    """Iterate :func:`recursion_step` from the base bound with ell_k = L^k."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if L <= 1:
        raise DomainError(f"L must exceed 1, got {L}")
    ells = [L**k for k in range(1, n + 1)]
    v = [base_bound(tau, ells[0]).v]
    for k in range(1, n):
        v.append(recursion_step(v[-1], ells[k - 1], ells[k], r_star, xi, nu, lam, alpha, d))
    inputs = {"tau": tau, "L": L, "n": n, "xi": xi, "nu": nu, "lambda": lam, "alpha": alpha, "d": d, "r_star": r_star}
    return RecursionTrace(ells, v, inputs)


def vn_general_form(v1, L, n, xi, nu, lam, alpha, d, r_star) -> float:
    """Closed-form v_n for arbitrary L (geometric series in L^{2d+1-alpha}/x)."""
    x = xi * math.log(r_star)
    q = L ** (2 * d + 1 - alpha) / x
    series = sum(q**j for j in range(n))
    scale = nu * lam * L ** (2 * d + 1)
    return x ** (n - 1) * (v1 - scale) + x ** (n - 1) * scale * series


def vn_closed_form(v1, L, n, xi, nu, lam, d, r_star) -> float:
    """v_n = x^{n-1} [v_1 + (n-1) L^{2d+1} nu lambda], valid when L^{2d+1-alpha} = x."""
    x = xi * math.log(r_star)
    return x ** (n - 1) * (v1 + (n - 1) * L ** (2 * d + 1) * nu * lam)


def combine_bounds(b1: ExpBoundParams, b2: ExpBoundParams, d: int) -> ExpBoundParams:
    """Bound for running evolution 1 then evolution 2 (requires ell_2 >= ell_1)."""
    if b2.ell < b1.ell:
        raise DomainError(f"second bound needs the larger length scale: ell_1={b1.ell}, ell_2={b2.ell}")
    return ExpBoundParams(
        c=2 ** (d + 5) * b1.c * b2.c,
        xi_poly=b1.xi_poly + b2.xi_poly + d + 1,
        v=b1.v + b2.v,
        ell=b2.ell,
        dt=min(b1.dt, b2.dt),
    )


@dataclass(frozen=True)
class TimeExtension:
    params: ExpBoundParams
    chi: float
    base: ExpBoundParams

    def all_time(self, r: float, t: float) -> float:
        """exp(chi t / dt + (v t - r) / ell); holds for every t."""
        b = self.base
        return math.exp(self.chi * t / float(b.dt) + (float(b.v) * t - r) / float(b.ell))


def extend_time(b0: ExpBoundParams, d: int, k: int, r: float) -> TimeExtension:
    """Stretch a bound valid for t <= dt to t <= 2^k dt.

    c_k = 2^{(d+5)(2^k-1)} c_0^{2^k}, xi_k = (2^k-1)(d+1) + 2^k xi_0, and the
    all-time exponent chi = 2 [log(2^{d+5} c_0) + (d+1+xi_0) log r].
    """
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    p = 2**k
    params = replace(
        b0,
        c=2 ** ((d + 5) * (p - 1)) * b0.c**p,
        xi_poly=(p - 1) * (d + 1) + p * b0.xi_poly,
        dt=b0.dt * p,
    )
    chi = 2 * (math.log(2 ** (d + 5) * float(b0.c)) + (d + 1 + float(b0.xi_poly)) * math.log(r))
    return TimeExtension(params, chi, b0)


# --------------------------------------------------------------------------
# algebraic bounds and the tightening iteration


@dataclass(frozen=True)
class AlgBoundParams:
    """``C log^kappa(r*) t^gamma / r^beta`` valid for ``t^gamma <= c r^beta / log^delta(r*)``."""

    C: float
    kappa: float
    gamma: float
    beta: float
    c: float = 1.0
    delta: float = 0.0

    def evaluate(self, r: float, t: float, r_star: float) -> float:
        return self.C * math.log(r_star) ** self.kappa * t**self.gamma / r**self.beta

    def is_valid(self, r: float, t: float, r_star: float) -> bool:
        return t**self.gamma <= self.c * r**self.beta / math.log(r_star) ** self.delta


def delta_constant(alpha, d, eta) -> float:
    """delta = (2d+1) / ((2d+1-alpha)(1 + eta(2d+1-alpha)))."""
    _check_window(alpha, d)
    if eta < 0:
        raise DomainError(f"eta must be positive, got {eta}")
    gap = 2 * d + 1 - alpha
    return (2 * d + 1) / (gap * (1 + eta * gap))


def _tighten(b: AlgBoundParams, alpha, d, eta, delta) -> AlgBoundParams:
    kappa = max(b.kappa - delta * (b.beta - d) / b.beta + (alpha - d) / (2 * d + 1 - alpha), delta)
    gamma = b.gamma * d / b.beta + 1 - eta * (alpha - d)
    beta = alpha - d - eta * (alpha - 2 * d) * (alpha - d)
    if not beta > d:
        raise DomainError(f"tightened distance exponent {beta} is not above d={d}")
    return replace(b, kappa=kappa, gamma=gamma, beta=beta, delta=delta)


def tighten_step(b: AlgBoundParams, alpha, d, eta, delta) -> AlgBoundParams:
    """One tightening step on (gamma, beta, kappa): re-insert the long-range terms and re-bound."""
    _check_window(alpha, d)
    if not 0 < eta < 1 / (alpha - d):
        raise DomainError(f"eta must lie in (0, 1/(alpha-d)) = (0, {1 / (alpha - d)}), got {eta}")
    if not b.beta > d:
        raise DomainError(f"beta must exceed d: beta={b.beta}, d={d}")
    if b.kappa < delta:
        raise DomainError(f"kappa must be >= delta: kappa={b.kappa}, delta={delta}")
    return _tighten(b, alpha, d, eta, delta)


def seed_exponents(alpha, d) -> tuple[float, float]:
    """Starting (gamma_0, beta_0) = (alpha(alpha-d+1)/(alpha-2d), alpha-d)."""
    return alpha * (alpha - d + 1) / (alpha - 2 * d), alpha - d


def fixpoint_limit(alpha, d, eta) -> float:
    return (alpha - d - eta * (alpha - 2 * d) * (alpha - d)) / (alpha - 2 * d)


@dataclass
class FixpointTrace:
    gammas: list[float]
    betas: list[float]
    kappas: list[float]
    inputs: dict
    converged: bool = False
    limit: float = math.nan
    closed_form: float = math.nan

    def to_dict(self) -> dict:
        return {
            "inputs": self.inputs,
            "converged": self.converged,
            "limit": self.limit,
            "closed_form": self.closed_form,
            "iterations": [
                {"m": m, "gamma": g, "beta": b, "kappa": k}
                for m, (g, b, k) in enumerate(zip(self.gammas, self.betas, self.kappas))
            ],
        }


def _affine_limit(xs: list[float], rate: float) -> float:
    """Fixed point of an affine map x -> rate x + b from its last two iterates.

    A plain stop at step < tol leaves an error of tol * rate / (1 - rate),
    which exceeds 10 tol once rate > 10/11 (alpha just above 2d).
    """
    if len(xs) < 3:  # the seed is not on the affine orbit
        return xs[-1]
    x1, x2 = xs[-2:]
    return x2 + (x2 - x1) * rate / (1 - rate)


def fixpoint_gamma(alpha, d, eta, tol: float = 1e-12, max_iter: int = 10_000) -> FixpointTrace:
    """Iterate the tightening map from the seed bound until gamma stops moving.

    Entry m = 0 is the seed; entry m >= 1 is the m-th tightened bound, so the
    betas are constant from m = 1 on. The reported ``limit`` adds the
    geometric tail of the final step (the map is affine with rate d/beta)
    to the last iterate. Raises :class:`ConvergenceError` (carrying the
    partial trace) if ``max_iter`` steps do not reach ``tol``.
    """
    _check_window(alpha, d)
    if not 0 <= eta < 1 / (alpha - d):
        raise DomainError(f"eta must lie in [0, 1/(alpha-d)) = [0, {1 / (alpha - d)}), got {eta}")
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    delta = delta_constant(alpha, d, eta)
    gamma0, beta0 = seed_exponents(alpha, d)
    b = AlgBoundParams(C=1.0, kappa=delta, gamma=gamma0, beta=beta0, delta=delta)
    trace = FixpointTrace(
        [b.gamma], [b.beta], [b.kappa],
        inputs={"alpha": alpha, "d": d, "eta": eta, "tol": tol, "max_iter": max_iter},
        closed_form=fixpoint_limit(alpha, d, eta),
    )
    for _ in range(max_iter):
        nb = _tighten(b, alpha, d, eta, delta)
        trace.gammas.append(nb.gamma)
        trace.betas.append(nb.beta)
        trace.kappas.append(nb.kappa)
        if abs(nb.gamma - b.gamma) < tol:
            trace.converged = True
            trace.limit = _affine_limit(trace.gammas, d / nb.beta)
            return trace
        b = nb
    raise ConvergenceError(f"gamma iteration not converged after {max_iter} steps (tol={tol})", trace)


# --------------------------------------------------------------------------
# final envelope and exponent bookkeeping


def epsilon_domain(alpha, d) -> float:
    """Upper end of the admissible epsilon interval, (alpha-2d)^2 / ((alpha-2d)^2 + alpha - d)."""
    a = alpha - 2 * d
    return a**2 / (a**2 + alpha - d)


@dataclass(frozen=True)
class EnvelopeValue:
    value: float
    valid: bool
    first_term: float
    tail_term: float


def theorem_envelope(r, t, alpha, d, epsilon, C1=1.0, C2=1.0, c=1.0) -> EnvelopeValue:
    """C1 (t / r^{alpha-2d-eps})^{(alpha-d)/(alpha-2d) - eps/2} + C2 t / r^{alpha-d}.

    ``valid`` reports whether t <= c r^{alpha-2d-eps}.
    """
    _check_window(alpha, d)
    top = epsilon_domain(alpha, d)
    if not 0 < epsilon < top:
        raise DomainError(f"epsilon must lie in (0, {top!r}) for alpha={alpha}, d={d}; got {epsilon}")
    if min(C1, C2, c) <= 0:
        raise DomainError("C1, C2 and c must be positive")
    cone = alpha - 2 * d - epsilon
    power = (alpha - d) / (alpha - 2 * d) - epsilon / 2
    first = C1 * (t / r**cone) ** power
    tail = C2 * t / r ** (alpha - d)
    return EnvelopeValue(first + tail, t <= c * r**cone, first, tail)


@dataclass(frozen=True)
class LightCone:
    regime: str
    exponent: float | None  # t >~ r^exponent; None for the logarithmic regime


def light_cone_exponent(alpha, d) -> LightCone:
    if alpha <= d:
        raise DomainError(f"no light cone is claimed for alpha <= d (alpha={alpha}, d={d})")
    if alpha <= 2 * d:
        return LightCone("logarithmic", None)
    if alpha <= 2 * d + 1:
        return LightCone("polynomial", alpha - 2 * d)
    return LightCone("linear", 1.0)


def untrunc_exponent(alpha, d, epsilon) -> float:
    """Exponent xi in r_0 = r^xi used when removing the lattice-size dependence."""
    if not 2 * d < alpha:
        raise DomainError(f"alpha must exceed 2d, got alpha={alpha}, d={d}")
    top = epsilon_domain(alpha, d)
    if not 0 <= epsilon <= top:
        raise DomainError(f"epsilon must lie in [0, {top!r}], got {epsilon}")
    a = alpha - 2 * d
    b = alpha - d
    value = (1 + b / a - epsilon) * (a - epsilon) / (a - epsilon * (a**2 + b) / a + epsilon**2)
    if value < b / a - 1e-12:
        raise ArithmeticError(f"untruncation exponent {value} fell below (alpha-d)/(alpha-2d) = {b / a}")
    return value


def _exact(x):
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(str(x))


@dataclass
class BoundComparison:
    alpha: Fraction
    d: int
    rows: dict[str, dict[str, Fraction]]
    differences: dict[str, dict[str, Any]] = field(default_factory=dict)

    def to_dict(self, exact: bool = False) -> dict:
        conv = (lambda q: str(q)) if exact else float
        return {
            "alpha": conv(self.alpha),
            "d": self.d,
            "rows": {name: {k: conv(v) for k, v in row.items()} for name, row in self.rows.items()},
            "differences": {
                name: {k: (conv(v) if isinstance(v, Fraction) else v) for k, v in diff.items()}
                for name, diff in self.differences.items()
            },
        }


def compare_bounds(alpha, d) -> BoundComparison:
    """Exponents (gamma, beta, gamma', beta') of bounds B1-B3 and phi = gamma'/beta'.

    Arithmetic is exact; float ``alpha`` is read through its decimal repr.
    Closed-form expressions for phi_B1 - phi_B2 and phi_B1 - phi_B3 are
    reported next to the direct differences; a mismatch is flagged, not
    reconciled.
    """
    a = _exact(alpha)
    d = int(d)
    _check_window(a, d)
    g1 = (a - d) / (a - 2 * d)
    g2 = a * (a - d + 1) / (a - 2 * d)
    rows = {
        "B1": {"gamma": g1, "beta": a - d, "gamma_prime": g1 + 1, "beta_prime": a - d},
        "B2": {"gamma": g2, "beta": a - d, "gamma_prime": g2 + 1, "beta_prime": a - d},
        "B3": {"gamma": a - d, "beta": a - 2 * d, "gamma_prime": a - d, "beta_prime": a - 2 * d},
    }
    for row in rows.values():
        row["phi"] = row["gamma_prime"] / row["beta_prime"]
    formulas = {
        "B1-B2": -((a - 1) * (a - d) + a) / ((a - d) * (a - 2 * d)),
        "B1-B3": -((a - d) ** 2 + d) / ((a - 2 * d) * (a - d)),
    }
    diffs = {}
    for key, formula in formulas.items():
        other = key.split("-")[1]
        direct = rows["B1"]["phi"] - rows[other]["phi"]
        diffs[key] = {"direct": direct, "formula": formula, "discrepancy": direct != formula}
    return BoundComparison(a, d, rows, diffs)


def correlator_envelope(c, gamma, beta, r, t) -> float:
    """2^{beta+2} c t^gamma / r^beta."""
    if min(c, gamma, beta) <= 0:
        raise DomainError("c, gamma and beta must be positive")
    return 2 ** (beta + 2) * c * t**gamma / r**beta


# --------------------------------------------------------------------------
# analytic-mode helpers: explicit constants only, unpinned K_i default to 1


def k3_constant(tau, xi, nu, lam) -> float:
    """Prefactor (4 e tau + nu lambda / xi) of the crude v_n bound."""
    return 4 * math.e * tau + nu * lam / xi


def analytic_time_horizon(r, r_star, alpha, d, eta, tau, nu=DEFAULT_NU, lam=None, shell_epsilon=0.5) -> float:
    """Largest t for which v_n t <= r/2 is guaranteed with the explicit constants.

    t <= r^{alpha-2d} / [2 K3 log(r*)^{(2d+1)/(2d+1-alpha)}]^{1/(1+eta(2d+1-alpha))}
    """
    _check_window(alpha, d)
    lam = lambda_constant(shell_epsilon, d) if lam is None else lam
    K3 = k3_constant(tau, xi_constant(d), nu, lam)
    gap = 2 * d + 1 - alpha
    denom = (2 * K3 * math.log(r_star) ** ((2 * d + 1) / gap)) ** (1 / (1 + eta * gap))
    return r ** (alpha - 2 * d) / denom
