"""Exact constants, exponents and extremal profiles (no discretization).

Everything here is a pure function of scalar parameters: the Hardy constant,
Hardy--Sobolev exponents, the best constant S(lambda, s) of the weighted
Hardy--Sobolev inequality and the energy level of its extremals, the
(tau, p, sigma) exponents that govern the coupling weight h, and the
algebraic root analysis used to bound mountain-pass levels from below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.special import gammaln

__all__ = [
    "InvalidParameter",
    "HypothesisViolation",
    "Regime",
    "HWeight",
    "ProblemParams",
    "CouplingCalculus",
    "ScalarProfileParams",
    "HReport",
    "hardy_constant",
    "critical_exponent",
    "profile_eval",
    "best_constant",
    "critical_level",
    "coupling_calculus",
    "validate_h",
    "sigma_inf",
]


class InvalidParameter(ValueError):
    """A scalar parameter lies outside its admissible range."""


class HypothesisViolation(ValueError):
    """One of the structural inequalities on (alpha, beta, s1, s2, s3) fails.

    ``inequality`` carries the text of the failing condition.
    """

    def __init__(self, inequality: str, detail: str = ""):
        self.inequality = inequality
        msg = f"hypothesis violated: {inequality}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


BALANCE_INEQ = "alpha/2*_{s1}+beta/2*_{s2} ≤ 1"
ORDER_INEQ = "s3 ≥ s1*alpha/2*_{s1}+s2*beta/2*_{s2}"

# tolerance for deciding alpha/2*_{s1}+beta/2*_{s2} == 1
_CRIT_TOL = 1e-12


def hardy_constant(N: int) -> float:
    """Best constant (N-2)^2/4 of the Hardy inequality in R^N."""
    if int(N) != N or N < 3:
        raise InvalidParameter(f"dimension must be an integer >= 3, got {N}")
    return (N - 2) ** 2 / 4.0


def critical_exponent(N: int, s: float) -> float:
    """Hardy--Sobolev exponent 2*_s = 2(N-s)/(N-2)."""
    hardy_constant(N)
    if not 0.0 <= s < 2.0:
        raise InvalidParameter(f"singularity order must lie in [0, 2), got {s}")
    return 2.0 * (N - s) / (N - 2)


def _check_lambda(N: int, lam: float) -> float:
    L = hardy_constant(N)
    if lam >= L:
        raise InvalidParameter(f"lambda={lam} is not below the Hardy constant {L}")
    if lam < 0:
        raise InvalidParameter(f"lambda must be nonnegative, got {lam}")
    return L


def _log_best_constant(N: int, lam: float, s: float) -> float:
    L = _check_lambda(N, lam)
    critical_exponent(N, s)
    k = (N - s) / (2.0 - s)
    inner = (
        math.log((N - 2) / (2.0 * (2.0 - s) * math.sqrt(L - lam)))
        + math.log(2.0)
        + 0.5 * N * math.log(math.pi)
        - gammaln(0.5 * N)
        + 2.0 * gammaln(k)
        - gammaln(2.0 * k)
    )
    return math.log(4.0 * (L - lam) * (N - s) / (N - 2)) + inner / k


def best_constant(N: int, lam: float, s: float) -> float:
    """S(lambda, s): sharp constant of ``S ||u||_{2*_s,s}^2 <= ||u||_lambda^2``.

    The Gamma factors are combined in log space; Gamma(2(N-s)/(2-s))
    overflows a double long before s reaches 2.
    """
    return math.exp(_log_best_constant(N, lam, s))


def critical_level(N: int, lam: float, s: float) -> float:
    """Energy (2-s)/(2(N-s)) * S^{(N-s)/(2-s)} of the scalar extremals."""
    k = (N - s) / (2.0 - s)
    return math.exp(k * _log_best_constant(N, lam, s)) / (2.0 * k)


class Regime(str, Enum):
    SUBCRITICAL = "Subcritical"
    CRITICAL = "Critical"


@dataclass(frozen=True)
class HWeight:
    """Coupling weight h(r) = h0 r^(sigma+p) / (1+r)^(p+q).

    ``h / r^sigma`` then behaves like r^p at the origin and r^-q at infinity,
    so it is continuous at both ends and vanishes there.
    """

    h0: float = 1.0
    p: float = 1.0
    q: float = 6.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.h0 <= 0 or self.p <= 0 or self.q <= 0:
            raise InvalidParameter("h0, p and q must all be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.h0 * np.exp((self.sigma + self.p) * np.log(r) - (self.p + self.q) * np.log1p(r))

    def tilde(self, r):
        """h(r) / r^sigma."""
        r = np.asarray(r, dtype=float)
        return self.h0 * np.exp(self.p * np.log(r) - (self.p + self.q) * np.log1p(r))


@dataclass(frozen=True)
class ProblemParams:
    """Full parameter tuple of the coupled system.

    Range checks that do not involve the structural inequalities are done
    at construction; the balance/order conditions are checked by
    :func:`coupling_calculus` so that a violation can be reported by name.
    """

    N: int
    lambda1: float
    lambda2: float
    s1: float
    s2: float
    s3: float
    alpha: float
    beta: float
    nu: float = 0.0
    h0: float = 1.0
    h_p: float = 1.0
    h_q: float | None = None

    def __post_init__(self):
        L = hardy_constant(self.N)
        for name in ("lambda1", "lambda2"):
            lam = getattr(self, name)
            if not 0.0 < lam < L:
                raise InvalidParameter(f"{name}={lam} must lie in (0, {L})")
        for name in ("s1", "s2", "s3"):
            s = getattr(self, name)
            if not 0.0 < s < 2.0:
                raise InvalidParameter(f"{name}={s} must lie in (0, 2)")
        if self.alpha <= 1 or self.beta <= 1:
            raise HypothesisViolation("alpha, beta > 1", f"alpha={self.alpha}, beta={self.beta}")
        if self.nu < 0:
            raise InvalidParameter(f"nu must be nonnegative, got {self.nu}")
        if self.h_q is None:
            object.__setattr__(self, "h_q", float(self.N + 2))

    @property
    def p1(self) -> float:
        return critical_exponent(self.N, self.s1)

    @property
    def p2(self) -> float:
        return critical_exponent(self.N, self.s2)

    @property
    def hardy(self) -> float:
        return hardy_constant(self.N)

    @cached_property
    def calculus(self) -> "CouplingCalculus":
        return coupling_calculus(self)

    @cached_property
    def h(self) -> HWeight:
        return HWeight(self.h0, self.h_p, self.h_q, self.calculus.sigma)

    @cached_property
    def c1(self) -> float:
        return critical_level(self.N, self.lambda1, self.s1)

    @cached_property
    def c2(self) -> float:
        return critical_level(self.N, self.lambda2, self.s2)

    def with_nu(self, nu: float) -> "ProblemParams":
        from dataclasses import replace

        return replace(self, nu=float(nu))


@dataclass(frozen=True)
class CouplingCalculus:
    tau: float
    frak_p: float  # math.inf in the critical regime
    sigma: float
    regime: Regime
    balance: float  # alpha/2*_{s1} + beta/2*_{s2}


def coupling_calculus(params: ProblemParams) -> CouplingCalculus:
    """Exponents (tau, p, sigma) for which h must lie in L^{p,sigma}.

    In the critical regime p is infinite and sigma is taken equal to tau,
    the exponent in the boundedness condition on h / |x|^tau.
    """
    P = params
    balance = P.alpha / P.p1 + P.beta / P.p2
    if balance > 1.0 + _CRIT_TOL:
        raise HypothesisViolation(BALANCE_INEQ, f"value {balance:.12g}")
    weighted = P.s1 * P.alpha / P.p1 + P.s2 * P.beta / P.p2
    tau = P.s3 - weighted
    if tau < -_CRIT_TOL:
        raise HypothesisViolation(ORDER_INEQ, f"s3={P.s3} < {weighted:.12g}")
    tau = max(tau, 0.0)
    if abs(1.0 - balance) <= _CRIT_TOL:
        return CouplingCalculus(tau, math.inf, tau, Regime.CRITICAL, balance)
    frak_p = 1.0 / (1.0 - balance)
    return CouplingCalculus(tau, frak_p, tau * frak_p, Regime.SUBCRITICAL, balance)


@dataclass
class HReport:
    regime: Regime
    checks: dict = field(default_factory=dict)  # name -> bool
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def as_dict(self) -> dict:
        return {"regime": self.regime.value, "ok": self.ok, **self.checks, "notes": list(self.notes)}


def validate_h(params: ProblemParams, require_radial_monotone: bool = False) -> HReport:
    """Check the hypotheses on h for the built-in weight family.

    Integrability is decided by exponent comparison of the radial integrand
    of (h / r^tau)^p = h^p r^-sigma near 0 and near infinity.
    """
    cc = params.calculus
    h = params.h
    N = params.N
    rep = HReport(cc.regime)
    # h/r^sigma ~ h0 r^p at 0 and ~ h0 r^-q at infinity; both exponents > 0
    rep.checks["tilde_vanishes_at_0"] = h.p > 0
    rep.checks["tilde_vanishes_at_inf"] = h.q > 0
    rep.checks["sigma_in_range"] = 0.0 <= cc.sigma < 2.0
    if cc.sigma >= 2.0:
        rep.notes.append(f"sigma={cc.sigma:.6g} is outside (0, 2); treated as a hypothesis violation")
    if cc.regime is Regime.SUBCRITICAL:
        fp = cc.frak_p
        # r^{N-1} h^p r^{-sigma}: exponent at 0 and at infinity
        e0 = N - 1 + fp * (cc.sigma + h.p) - cc.sigma
        einf = N - 1 + fp * (cc.sigma - h.q) - cc.sigma
        rep.checks["integrable_at_0"] = e0 > -1
        rep.checks["integrable_at_inf"] = einf < -1
    else:
        # only boundedness of h/r^tau (= h/r^sigma here) is required
        rep.checks["tilde_bounded"] = True
        rep.notes.append("critical regime: only boundedness of h/r^tau and its limits are checked")
    monotone = False
    if require_radial_monotone:
        rep.checks["radial_nonincreasing"] = monotone
    rep.notes.append(
        "h is never radially non-increasing in this family (h(0)=0 < h(r) for r>0); "
        "the monotone-h hypothesis and h/r^sigma -> 0 at 0 are only compatible for flat h"
    )
    return rep


@dataclass(frozen=True)
class ScalarProfileParams:
    """Parameters of the extremal z_mu^{lambda,s}."""

    N: int
    lam: float
    s: float
    mu: float = 1.0

    def __post_init__(self):
        _check_lambda(self.N, self.lam)
        critical_exponent(self.N, self.s)
        if self.mu <= 0:
            raise InvalidParameter(f"scale mu must be positive, got {self.mu}")

    @property
    def a_lambda(self) -> float:
        L = hardy_constant(self.N)
        return math.sqrt(L) - math.sqrt(L - self.lam)

    @property
    def A(self) -> float:
        L = hardy_constant(self.N)
        return 2.0 * (L - self.lam) * (self.N - self.s) / math.sqrt(L)

    @property
    def decay(self) -> tuple[float, float]:
        """Power-law exponents (at 0, at infinity) of the profile: r^-a and r^-(N-2-a)."""
        a = self.a_lambda
        return a, self.N - 2 - a


def profile_eval(p: ScalarProfileParams, r):
    """Evaluate z_mu^{lambda,s}(r) = mu^{-(N-2)/2} z_1(r/mu); accepts arrays."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise InvalidParameter("profile is only defined for r > 0")
    N, s, a = p.N, p.s, p.a_lambda
    rho = r / p.mu
    b = (2.0 - s) * (1.0 - 2.0 * a / (N - 2))
    logz = (
        (N - 2) / (2.0 * (2.0 - s)) * math.log(p.A)
        - a * np.log(rho)
        - (N - 2) / (2.0 - s) * np.logaddexp(0.0, b * np.log(rho))
        - 0.5 * (N - 2) * math.log(p.mu)
    )
    out = np.exp(logz)
    return float(out) if out.ndim == 0 else out


def sigma_inf(P: float, Q: float, R: float, nu: float, params, *,
              lo: float = 1e-12, hi: float = 1e6, tol: float = 1e-10) -> float:
    """Infimum of {sigma > 0 : P s^(2/2*_1) + Q s^(2/2*_2) < (P+Q) s + R nu s^(alpha/2*_1+beta/2*_2)}.

    ``params`` needs N, s1, s2, alpha, beta (a ProblemParams or any object
    with those attributes). The returned value is the left end of the final
    bisection bracket, so it is never itself in the set. Returns math.inf
    when the set does not meet the search window.
    """
    if min(P, Q, R) <= 0 or nu < 0:
        raise InvalidParameter("P, Q, R must be positive and nu nonnegative")
    p1 = critical_exponent(params.N, params.s1)
    p2 = critical_exponent(params.N, params.s2)
    gamma = params.alpha / p1 + params.beta / p2
    if gamma > 1.0 + _CRIT_TOL:
        raise HypothesisViolation(BALANCE_INEQ, f"value {gamma:.12g}")

    def defect(x):
        return P * x ** (2.0 / p1) + Q * x ** (2.0 / p2) - (P + Q) * x - R * nu * x ** gamma

    xs = np.geomspace(lo, hi, 4001)
    d = defect(xs)
    neg = np.flatnonzero(d < 0)
    if neg.size == 0:
        return math.inf
    k = neg[0]
    if k == 0:
        return lo
    a, b = float(xs[k - 1]), float(xs[k])
    while b - a > tol:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if defect(m) < 0:
            b = m
        else:
            a = m
    return a
