"""Discrete energy functional of the coupled system, its gradient and the Nehari machinery.

The energy is

    J(u, v) = 1/2 (||u||_l1^2 + ||v||_l2^2) - A/2*_1 - B/2*_2 - nu C

with A, B the critical Hardy--Sobolev integrals and C the h-weighted
coupling integral. The gradient is the exact derivative of the *discrete*
energy, so descent methods see no discretization mismatch. Each component
carries the power-law tails u ~ r^-a_l at 0 and u ~ r^-(N-2-a_l) at
infinity that every finite-energy solution has; the coupling integral gets
no tail because h/r^sigma vanishes at both ends.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.linalg import solveh_banded

from .closedform import InvalidParameter, ProblemParams, Regime, ScalarProfileParams
from .grid import RadialField, RadialGrid, StatePair

__all__ = [
    "DegenerateState",
    "OffManifold",
    "EnergyBreakdown",
    "NehariProjection",
    "EnergyModel",
    "model_for",
    "component_decay",
    "lambda_norm_sq",
    "energy",
    "energy_truncated",
    "gradient",
    "pairing",
    "nehari_residual",
    "nehari_curvature",
    "nehari_project",
    "constrained_energy_forms",
    "holder_bound_check",
]


class DegenerateState(ValueError):
    """The state (or direction) carries nothing to scale: zero or no nonlinear mass."""


class OffManifold(ValueError):
    """The state is too far from the Nehari manifold for the requested identity."""


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet_u: float
    dirichlet_v: float
    hardy_u: float
    hardy_v: float
    crit_u: float
    crit_v: float
    coupling: float
    total: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NehariProjection:
    t: float
    projected: StatePair
    residual: float


def component_decay(N: int, lam: float) -> tuple[float, float]:
    return ScalarProfileParams(N, lam, 0.0).decay


def _spow(x: np.ndarray, e: float) -> np.ndarray:
    """sign(x) |x|^e, with 0 mapped to 0."""
    return np.sign(x) * np.abs(x) ** e


_BAND = 5  # half-bandwidth of the sixth-order Dirichlet matrix


class EnergyModel:
    """Precomputed weights for one (params, grid) pair; works on raw arrays."""

    def __init__(self, params: ProblemParams, grid: RadialGrid):
        if params.N != grid.N:
            raise InvalidParameter(f"params are for N={params.N}, grid for N={grid.N}")
        P, g = params, grid
        self.params, self.grid = P, g
        self.om = g.omega
        self.w = g.w
        self.p1, self.p2 = P.p1, P.p2
        self.lam = (P.lambda1, P.lambda2)
        self.decay = (component_decay(P.N, P.lambda1), component_decay(P.N, P.lambda2))
        self.forms = tuple(g.dirichlet_form(d) for d in self.decay)
        self.hw = tuple(g.lp_weights(2.0, 2.0, d) for d in self.decay)
        self.cw = (g.lp_weights(self.p1, P.s1, self.decay[0]),
                   g.lp_weights(self.p2, P.s2, self.decay[1]))
        self.kw = g.w * P.h(g.r) * g.r ** (-P.s3)
        self.mats = tuple(self.om * (f.matrix - sparse.diags(lam * hw))
                          for f, lam, hw in zip(self.forms, self.lam, self.hw))
        # diagonal scaling that makes the stiffness entries O(1/dy)
        self._scale = g.r ** (-(P.N - 2) / 2.0)
        self._banded = tuple(self._band(i) for i in (0, 1))

    # quadratic part --------------------------------------------------------

    def _band(self, i: int) -> np.ndarray:
        """Upper banded storage of the scaled matrix S M_i S."""
        s = self._scale
        M = sparse.diags(s) @ self.mats[i] @ sparse.diags(s)
        ab = np.zeros((_BAND + 1, self.grid.n))
        for k in range(_BAND + 1):
            ab[_BAND - k, k:] = M.diagonal(k)
        return ab

    def matvec(self, i: int, u: np.ndarray) -> np.ndarray:
        return self.mats[i] @ u

    def dirichlet(self, i: int, u: np.ndarray) -> float:
        return self.om * self.forms[i](u)

    def hardy(self, i: int, u: np.ndarray) -> float:
        return self.om * float(np.dot(self.hw[i], u * u))

    def norm_sq(self, i: int, u: np.ndarray) -> float:
        return self.dirichlet(i, u) - self.lam[i] * self.hardy(i, u)

    def riesz(self, gu: np.ndarray, gv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Solve M_i x = g_i: Euclidean gradient -> gradient in the D-inner product."""
        s = self._scale
        xu = s * solveh_banded(self._banded[0], s * gu, check_finite=False)
        xv = s * solveh_banded(self._banded[1], s * gv, check_finite=False)
        return xu, xv

    # nonlinear terms -------------------------------------------------------

    def crit(self, i: int, u: np.ndarray, truncated: bool = False) -> float:
        x = np.maximum(u, 0.0) if truncated else np.abs(u)
        p = self.p1 if i == 0 else self.p2
        return self.om * float(np.dot(self.cw[i], x ** p))

    def coupling(self, u: np.ndarray, v: np.ndarray, truncated: bool = False) -> float:
        if truncated:
            a, b = np.maximum(u, 0.0), np.maximum(v, 0.0)
        else:
            a, b = np.abs(u), np.abs(v)
        P = self.params
        return self.om * float(np.dot(self.kw, a ** P.alpha * b ** P.beta))

    def breakdown(self, u, v, truncated: bool = False) -> EnergyBreakdown:
        P = self.params
        du, dv = self.dirichlet(0, u), self.dirichlet(1, v)
        hu, hv = self.hardy(0, u), self.hardy(1, v)
        A, B = self.crit(0, u, truncated), self.crit(1, v, truncated)
        C = self.coupling(u, v, truncated)
        total = (0.5 * (du + dv) - 0.5 * P.lambda1 * hu - 0.5 * P.lambda2 * hv
                 - A / self.p1 - B / self.p2 - P.nu * C)
        return EnergyBreakdown(du, dv, hu, hv, A, B, C, total)

    def energy(self, u, v, truncated: bool = False) -> float:
        return self.breakdown(u, v, truncated).total

    def ray(self, u, v, truncated: bool = False) -> tuple[float, float, float, float]:
        """(D, A, B, C): squared D-norm, critical integrals and coupling."""
        D = self.norm_sq(0, u) + self.norm_sq(1, v)
        return D, self.crit(0, u, truncated), self.crit(1, v, truncated), self.coupling(u, v, truncated)

    def psi(self, u, v, truncated: bool = False) -> float:
        D, A, B, C = self.ray(u, v, truncated)
        P = self.params
        return D - A - B - P.nu * (P.alpha + P.beta) * C

    def euclid_grad(self, u, v, truncated: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Partial derivatives of the discrete energy with respect to nodal values."""
        P, om = self.params, self.om
        if truncated:
            up, vp = np.maximum(u, 0.0), np.maximum(v, 0.0)
            cu = up ** (self.p1 - 1)
            cv = vp ** (self.p2 - 1)
            ku = P.alpha * up ** (P.alpha - 1) * vp ** P.beta
            kv = P.beta * up ** P.alpha * vp ** (P.beta - 1)
        else:
            au, av = np.abs(u), np.abs(v)
            cu = _spow(u, self.p1 - 1)
            cv = _spow(v, self.p2 - 1)
            ku = P.alpha * _spow(u, P.alpha - 1) * av ** P.beta
            kv = P.beta * au ** P.alpha * _spow(v, P.beta - 1)
        gu = self.matvec(0, u) - om * self.cw[0] * cu - P.nu * om * self.kw * ku
        gv = self.matvec(1, v) - om * self.cw[1] * cv - P.nu * om * self.kw * kv
        return gu, gv

    def project(self, u, v, truncated: bool = False, rtol: float = 1e-12) -> float:
        """Scaling t with (t u, t v) on the Nehari manifold."""
        D, A, B, C = self.ray(u, v, truncated)
        return solve_scaling(D, A, B, C, self.params, rtol)


@lru_cache(maxsize=32)
def model_for(params: ProblemParams, grid: RadialGrid) -> EnergyModel:
    return EnergyModel(params, grid)


def solve_scaling(D: float, A: float, B: float, C: float, params: ProblemParams,
                  rtol: float = 1e-12) -> float:
    """Unique t > 0 with D = t^(2*_1-2) A + t^(2*_2-2) B + nu (alpha+beta) t^(alpha+beta-2) C.

    Solved in x = ln t, where the defect is strictly increasing; Newton steps
    are kept inside a sign-change bracket and replaced by bisection when
    they leave it.
    """
    P = params
    kc = P.nu * (P.alpha + P.beta) * C
    if D <= 0:
        raise DegenerateState(f"squared norm is not positive ({D:.3e})")
    if A <= 0 and B <= 0 and kc <= 0:
        raise DegenerateState("no critical or coupling mass along this direction")
    e1, e2, e3 = P.p1 - 2, P.p2 - 2, P.alpha + P.beta - 2

    def f(x):
        t1, t2, t3 = A * math.exp(e1 * x), B * math.exp(e2 * x), kc * math.exp(e3 * x)
        return t1 + t2 + t3 - D, e1 * t1 + e2 * t2 + e3 * t3

    lo, hi = 0.0, 0.0
    step = 1.0
    if f(0.0)[0] < 0:
        while f(hi)[0] < 0:
            lo, hi = hi, hi + step
            step *= 2
    else:
        while f(lo)[0] > 0:
            lo, hi = lo - step, lo
            step *= 2
    x = 0.5 * (lo + hi)
    for _ in range(200):
        val, der = f(x)
        if abs(val) <= rtol * D:
            break
        if val > 0:
            hi = x
        else:
            lo = x
        xn = x - val / der if der > 0 else 0.5 * (lo + hi)
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if xn == x:
            break
        x = xn
    return math.exp(x)


def _model(state: StatePair, params: ProblemParams) -> EnergyModel:
    return model_for(params, state.grid)


def lambda_norm_sq(u: RadialField, lam: float) -> float:
    """||u||_lambda^2 = int |grad u|^2 - lambda int u^2/|x|^2, tails from the field's decay."""
    from .grid import dirichlet_energy, weighted_lp

    L = (u.grid.N - 2) ** 2 / 4.0
    if not 0.0 <= lam < L:
        raise InvalidParameter(f"lambda={lam} must lie in [0, {L})")
    return dirichlet_energy(u) - lam * weighted_lp(u, 2.0, 2.0) ** 2


def energy(state: StatePair, params: ProblemParams) -> EnergyBreakdown:
    return _model(state, params).breakdown(state.u.values, state.v.values)


def energy_truncated(state: StatePair, params: ProblemParams) -> EnergyBreakdown:
    """Energy with u+, v+ in the critical and coupling terms."""
    return _model(state, params).breakdown(state.u.values, state.v.values, truncated=True)


def gradient(state: StatePair, params: ProblemParams, truncated: bool = False) -> StatePair:
    """L^2(w) representative of the energy derivative.

    ``pairing(gradient(s), d)`` equals the directional derivative of the
    discrete energy along ``d``.
    """
    m = _model(state, params)
    gu, gv = m.euclid_grad(state.u.values, state.v.values, truncated)
    scale = 1.0 / (m.om * m.w)
    return StatePair(state.u.with_values(gu * scale), state.v.with_values(gv * scale))


def pairing(a: StatePair, b: StatePair) -> float:
    """omega * sum_k w_k (a_u b_u + a_v b_v)."""
    g = a.grid
    return g.omega * float(np.dot(g.w, a.u.values * b.u.values + a.v.values * b.v.values))


def nehari_residual(state: StatePair, params: ProblemParams, truncated: bool = False) -> float:
    """Psi(u, v) = <J'(u, v), (u, v)>."""
    if not (np.any(state.u.values) or np.any(state.v.values)):
        raise DegenerateState("Nehari residual is undefined at the zero state")
    return _model(state, params).psi(state.u.values, state.v.values, truncated)


def nehari_curvature(state: StatePair, params: ProblemParams) -> float:
    """<Psi'(u, v), (u, v)> in the form valid on the Nehari manifold.

    (2 - 2*_1) A + (2 - 2*_2) B + nu (alpha+beta)(2-alpha-beta) C, negative
    for every nonzero state.
    """
    P = params
    _, A, B, C = _model(state, params).ray(state.u.values, state.v.values)
    ab = P.alpha + P.beta
    return (2 - P.p1) * A + (2 - P.p2) * B + P.nu * ab * (2 - ab) * C


def nehari_project(state: StatePair, params: ProblemParams, truncated: bool = False,
                   rtol: float = 1e-12) -> NehariProjection:
    m = _model(state, params)
    t = m.project(state.u.values, state.v.values, truncated, rtol)
    proj = state.scaled(t)
    return NehariProjection(t, proj, m.psi(proj.u.values, proj.v.values, truncated))


def constrained_energy_forms(state: StatePair, params: ProblemParams,
                             tol: float = 1e-8) -> tuple[float, float, float]:
    """The energy evaluated three ways that coincide on the Nehari manifold.

    (direct value,
     (1/2 - 1/(a+b)) ||.||^2 + (1/(a+b) - 1/2*_1) A + (1/(a+b) - 1/2*_2) B,
     (1/2 - 1/2*_1) A + (1/2 - 1/2*_2) B + nu (a+b-2)/2 C)
    """
    P = params
    m = _model(state, params)
    u, v = state.u.values, state.v.values
    D, A, B, C = m.ray(u, v)
    if D <= 0:
        raise DegenerateState("zero state")
    psi = D - A - B - P.nu * (P.alpha + P.beta) * C
    if abs(psi) > tol * D:
        raise OffManifold(f"|Psi|/||.||^2 = {abs(psi) / D:.3e} exceeds {tol:.1e}")
    ab = P.alpha + P.beta
    f1 = 0.5 * D - A / P.p1 - B / P.p2 - P.nu * C
    f2 = (0.5 - 1 / ab) * D + (1 / ab - 1 / P.p1) * A + (1 / ab - 1 / P.p2) * B
    f3 = (0.5 - 1 / P.p1) * A + (0.5 - 1 / P.p2) * B + P.nu * (ab - 2) / 2 * C
    return f1, f2, f3


@lru_cache(maxsize=32)
def _h_tau_norm(params: ProblemParams, grid: RadialGrid) -> float:
    cc = params.calculus
    f = params.h(grid.r) * grid.r ** (-cc.tau)
    return grid.integrate(f ** cc.frak_p) ** (1.0 / cc.frak_p)


def holder_bound_check(state: StatePair, params: ProblemParams) -> dict:
    """Compare the coupling integral with its Hoelder bound ||h/r^tau||_p A^(a/2*_1) B^(b/2*_2)."""
    P = params
    if P.calculus.regime is not Regime.SUBCRITICAL:
        raise InvalidParameter("the L^p Hoelder bound needs the subcritical regime")
    m = _model(state, params)
    u, v = state.u.values, state.v.values
    C = m.coupling(u, v)
    A, B = m.crit(0, u), m.crit(1, v)
    hn = _h_tau_norm(params, state.grid)
    bound = hn * A ** (P.alpha / P.p1) * B ** (P.beta / P.p2)
    ratio = C / bound if bound > 0 else (0.0 if C == 0 else math.inf)
    return {"coupling": C, "bound": bound, "h_norm": hn, "slack_ratio": ratio, "holds": C <= bound}
