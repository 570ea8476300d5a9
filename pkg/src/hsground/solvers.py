"""Ground states, semitrivial states and mountain-pass bound states.

All searches run on the Nehari manifold: every trial state is clipped to
be nonnegative and rescaled by the one-dimensional Nehari projection, and
steps use the gradient in the product Dirichlet inner product (Riesz
representative), which makes unit steps meaningful at every scale of the
log-radial mesh.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from enum import Enum

import numpy as np

from .closedform import InvalidParameter, ProblemParams, ScalarProfileParams
from .functional import DegenerateState, EnergyModel, model_for
from .grid import RadialField, RadialGrid, StatePair, sample_profile

__all__ = [
    "SolverConfig",
    "Classification",
    "SolveResult",
    "MountainPassResult",
    "ConcentrationReport",
    "RegimeViolation",
    "semitrivial",
    "classify_components",
    "ground_state",
    "multistart_inits",
    "multistart_ground_state",
    "mountain_pass",
    "mountain_pass_case",
    "concentration_report",
    "write_trace",
]

COMPONENT_RATIO = 1e-6


class RegimeViolation(ValueError):
    """Parameters outside the two-sided level window required by the mountain pass."""


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 400
    step0: float = 1.0
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    grad_tol: float = 1e-8
    energy_tol: float = 1e-12
    path_points: int = 21
    deform_rounds: int = 40

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise InvalidParameter(f"{f.name} must be positive")
        for name in ("armijo_c", "armijo_shrink"):
            if not getattr(self, name) < 1:
                raise InvalidParameter(f"{name} must lie in (0, 1)")
        if self.grad_tol < 1e-12 or self.energy_tol < 1e-12:
            raise InvalidParameter("grad_tol and energy_tol must be at least 1e-12")
        if self.path_points < 3:
            raise InvalidParameter("a path needs at least 3 points")


class Classification(str, Enum):
    COUPLED = "Coupled"
    SEMITRIVIAL_U = "SemitrivialU"
    SEMITRIVIAL_V = "SemitrivialV"
    FAILED = "Failed"


@dataclass
class SolveResult:
    state: StatePair
    energy: float
    nehari_residual: float
    grad_norm: float
    classification: Classification
    trace: list = field(default_factory=list)
    nu: float = 0.0
    iters: int = 0
    converged: bool = False
    message: str = ""

    def record(self) -> dict:
        """Flat JSON-ready summary (fields are never nested)."""
        return {
            "energy": float(self.energy),
            "nehari_residual": float(self.nehari_residual),
            "grad_norm": float(self.grad_norm),
            "classification": self.classification.value,
            "nu": self.nu,
            "iters": self.iters,
            "converged": self.converged,
            "message": self.message,
        }


@dataclass
class MountainPassResult(SolveResult):
    c_mp: float = math.nan
    c_mp_history: list = field(default_factory=list)
    path_max_history: list = field(default_factory=list)
    initial_path_max: float = math.nan
    path_energies: list = field(default_factory=list)
    endpoint_energies: tuple = (math.nan, math.nan)

    def record(self) -> dict:
        out = super().record()
        out.update(c_mp=float(self.c_mp), initial_path_max=float(self.initial_path_max),
                   endpoint_energy_first=self.endpoint_energies[0],
                   endpoint_energy_second=self.endpoint_energies[1])
        return out


@dataclass(frozen=True)
class ConcentrationReport:
    rho_0_u: float
    rho_inf_u: float
    rho_0_v: float
    rho_inf_v: float


# -- construction --------------------------------------------------------------

def semitrivial(which: str, mu: float, params: ProblemParams, grid: RadialGrid) -> StatePair:
    """(z_mu^(1), 0) for ``which="First"``, (0, z_mu^(2)) for ``"Second"``."""
    if not mu > 0:
        raise InvalidParameter(f"mu must be positive, got {mu}")
    P = params
    if which == "First":
        z = sample_profile(ScalarProfileParams(P.N, P.lambda1, P.s1, mu), grid)
        return StatePair(z, RadialField.zeros(grid, z.decay))
    if which == "Second":
        z = sample_profile(ScalarProfileParams(P.N, P.lambda2, P.s2, mu), grid)
        return StatePair(RadialField.zeros(grid, z.decay), z)
    raise InvalidParameter(f"which must be 'First' or 'Second', got {which!r}")


def classify_components(model: EnergyModel, u: np.ndarray, v: np.ndarray) -> Classification:
    nu_, nv_ = (math.sqrt(max(model.norm_sq(i, x), 0.0)) for i, x in ((0, u), (1, v)))
    if nu_ < COMPONENT_RATIO * nv_:
        return Classification.SEMITRIVIAL_V
    if nv_ < COMPONENT_RATIO * nu_:
        return Classification.SEMITRIVIAL_U
    return Classification.COUPLED


# -- descent on the Nehari manifold ---------------------------------------------

class _Manifold:
    """Nehari-constrained evaluation of the truncated energy for one model."""

    def __init__(self, model: EnergyModel):
        self.m = model

    def project(self, u, v):
        u, v = np.maximum(u, 0.0), np.maximum(v, 0.0)
        t = self.m.project(u, v, truncated=True)
        return t * u, t * v

    def energy(self, u, v) -> float:
        return self.m.energy(u, v, truncated=True)

    def gradient(self, u, v):
        """Euclidean gradient (gu, gv) and its Riesz representative (xu, xv)."""
        gu, gv = self.m.euclid_grad(u, v, truncated=True)
        xu, xv = self.m.riesz(gu, gv)
        return gu, gv, xu, xv

    def step(self, u, v, du, dv, tau):
        return self.project(u + tau * du, v + tau * dv)


def _descend(man: _Manifold, u, v, cfg: SolverConfig, constraint=None):
    """Nonlinear conjugate-gradient descent (Polak-Ribiere+, Dirichlet inner product)
    with Armijo backtracking on the projected energy.

    Returns (u, v, energy, grad_norm, trace, converged, message, iterations).
    ``constraint`` maps a Riesz gradient to the admissible subspace.
    """
    E = man.energy(u, v)
    trace, history = [], [E]
    tau = cfg.step0
    converged, msg = False, "max_iters reached"
    prev = None  # (gu, gv, xu, xv, du, dv) of the last accepted step
    it = 0
    for it in range(cfg.max_iters + 1):
        gu, gv, xu, xv = man.gradient(u, v)
        if constraint is not None:
            xu, xv, gu, gv = constraint(xu, xv)
        g2 = max(float(np.dot(gu, xu) + np.dot(gv, xv)), 0.0)
        gnorm = math.sqrt(g2)
        trace.append((it, E, gnorm))
        if gnorm <= cfg.grad_tol * (1 + abs(E)):
            converged, msg = True, "gradient tolerance met"
            break
        if len(history) > 10 and history[-11] - E <= cfg.energy_tol * (1 + abs(E)):
            converged, msg = True, "energy stagnated"
            break
        if it == cfg.max_iters:
            break
        du, dv = -xu, -xv
        if prev is not None:
            pgu, pgv, pxu, pxv, pdu, pdv = prev
            pg2 = float(np.dot(pgu, pxu) + np.dot(pgv, pxv))
            beta = max(0.0, (g2 - float(np.dot(gu, pxu) + np.dot(gv, pxv))) / pg2) if pg2 > 0 else 0.0
            du, dv = du + beta * pdu, dv + beta * pdv
        slope = float(np.dot(gu, du) + np.dot(gv, dv))
        if slope >= 0:  # not a descent direction: restart
            du, dv, slope = -xu, -xv, -g2
        accepted = False
        while tau > 1e-14:
            try:
                un, vn = man.step(u, v, du, dv, tau)
                En = man.energy(un, vn)
            except DegenerateState:
                tau *= cfg.armijo_shrink
                continue
            if En <= E + cfg.armijo_c * tau * slope:
                accepted = True
                break
            tau *= cfg.armijo_shrink
        if not accepted:
            if prev is not None:  # retry once along the plain gradient
                prev, tau = None, cfg.step0
                continue
            converged, msg = True, "line search cannot decrease the energy further"
            break
        prev = (gu, gv, xu, xv, du, dv)
        u, v, E = un, vn, En
        history.append(E)
        tau = min(cfg.step0, tau / cfg.armijo_shrink)
    return u, v, E, gnorm, trace, converged, msg, it


def ground_state(params: ProblemParams, init: StatePair, cfg: SolverConfig = SolverConfig()
                 ) -> SolveResult:
    """Minimize the truncated energy over nonnegative Nehari states starting from ``init``."""
    model = model_for(params, init.grid)
    man = _Manifold(model)
    u0, v0 = init.u.values, init.v.values
    if not (np.any(u0) or np.any(v0)):
        raise DegenerateState("initial state is zero")
    try:
        u, v = man.project(u0, v0)
    except DegenerateState as exc:
        return _failed(init, params, f"projection impossible: {exc}")
    u, v, E, gnorm, trace, converged, msg, it = _descend(man, u, v, cfg)
    cls = classify_components(model, u, v) if converged else Classification.FAILED
    return SolveResult(
        state=_pack(init, u, v), energy=E, nehari_residual=model.psi(u, v, truncated=True),
        grad_norm=gnorm, classification=cls, trace=trace, nu=params.nu, iters=it,
        converged=converged, message=msg)


def _pack(like: StatePair, u, v) -> StatePair:
    return StatePair(like.u.with_values(u), like.v.with_values(v))


def _failed(init: StatePair, params: ProblemParams, msg: str) -> SolveResult:
    return SolveResult(init, math.nan, math.nan, math.nan, Classification.FAILED,
                       nu=params.nu, message=msg)


def _smooth_noise(rng: np.random.Generator, grid: RadialGrid, amp: float = 0.05, modes: int = 4):
    """Multiplicative factor 1 + small sine series in ln r."""
    s = (grid.y - grid.y[0]) / (grid.y[-1] - grid.y[0])
    coef = rng.uniform(-amp, amp, size=modes) / np.arange(1, modes + 1)
    return 1.0 + sum(c * np.sin(math.pi * k * s) for k, c in enumerate(coef, start=1))


def multistart_inits(params: ProblemParams, grid: RadialGrid, seed: int = 0,
                     mixes=(0.25, 0.5, 0.75)) -> list[tuple[str, StatePair]]:
    """Both semitrivials plus mixed pairs (c z1, (1-c) z2) with seeded smooth perturbations."""
    rng = np.random.default_rng(seed)
    first = semitrivial("First", 1.0, params, grid)
    second = semitrivial("Second", 1.0, params, grid)
    z1, z2 = first.u, second.v
    starts = [("first", first), ("second", second)]
    for c in mixes:
        pu, pv = _smooth_noise(rng, grid), _smooth_noise(rng, grid)
        starts.append((f"mixed{c:g}", StatePair(z1.with_values(c * z1.values * pu),
                                                z2.with_values((1 - c) * z2.values * pv))))
    return starts


def multistart_ground_state(params: ProblemParams, grid: RadialGrid,
                            cfg: SolverConfig = SolverConfig(), seed: int = 0
                            ) -> tuple[SolveResult, list[tuple[str, SolveResult]]]:
    """Run every start and return (best, all); best minimizes energy among non-failed runs."""
    runs = [(name, ground_state(params, init, cfg))
            for name, init in multistart_inits(params, grid, seed)]
    ok = [r for _, r in runs if r.classification is not Classification.FAILED]
    pool = ok or [r for _, r in runs if math.isfinite(r.energy)]
    if not pool:
        return runs[0][1], runs
    return min(pool, key=lambda r: r.energy), runs


# -- mountain pass ----------------------------------------------------------------

def mountain_pass_case(params: ProblemParams) -> str | None:
    """"i" for alpha >= 2 with 2c2 > c1 > c2, "ii" for the mirrored case, else None."""
    c1, c2 = params.c1, params.c2
    if params.alpha >= 2 and 2 * c2 > c1 > c2:
        return "i"
    if params.beta >= 2 and 2 * c1 > c2 > c1:
        return "ii"
    return None


_SADDLE_DRIFT = 1e-3


class _Path:
    """Discrete Nehari path, stored as arrays of shape (points, n)."""

    def __init__(self, man: _Manifold, U, V):
        self.man, self.U, self.V = man, U, V
        self.m = man.m

    def energies(self) -> np.ndarray:
        return np.array([self.man.energy(u, v) for u, v in zip(self.U, self.V)])

    def _dist(self, a, b) -> float:
        du, dv = self.U[a] - self.U[b], self.V[a] - self.V[b]
        return math.sqrt(max(self.m.norm_sq(0, du) + self.m.norm_sq(1, dv), 0.0))

    def reparametrize(self):
        """Redistribute nodes uniformly in Dirichlet arc length, then reproject."""
        k = len(self.U)
        seg = np.array([self._dist(j, j + 1) for j in range(k - 1)])
        s = np.concatenate([[0.0], np.cumsum(seg)])
        if s[-1] <= 0:
            return
        target = np.linspace(0.0, s[-1], k)
        U, V = self.U.copy(), self.V.copy()
        for j in range(1, k - 1):
            i = min(max(np.searchsorted(s, target[j]) - 1, 0), k - 2)
            th = (target[j] - s[i]) / seg[i] if seg[i] > 0 else 0.0
            U[j], V[j] = self.man.project((1 - th) * self.U[i] + th * self.U[i + 1],
                                          (1 - th) * self.V[i] + th * self.V[i + 1])
        self.U, self.V = U, V


def mountain_pass(params: ProblemParams, grid: RadialGrid, cfg: SolverConfig = SolverConfig()
                  ) -> MountainPassResult:
    """String-method estimate of the mountain-pass level between the two semitrivials.

    The initial path is t -> ((1-t)^(1/2) z1, t^(1/2) z2), Nehari-projected. Each
    round moves interior nodes along the negative gradient with step
    step0/(1+round), accepting a move only if it does not raise that node's
    energy, then restores uniform arc-length spacing. The running level is
    the minimum over rounds of the path maximum; the top node of the final
    path is refined by descent orthogonal to the path tangent.
    """
    case = mountain_pass_case(params)
    if case is None:
        raise RegimeViolation(
            "mountain pass needs alpha >= 2 and 2*c2 > c1 > c2, or beta >= 2 and 2*c1 > c2 > c1")
    model = model_for(params, grid)
    man = _Manifold(model)
    z1 = semitrivial("First", 1.0, params, grid)
    z2 = semitrivial("Second", 1.0, params, grid)
    k = cfg.path_points
    ts = np.linspace(0.0, 1.0, k)
    U = np.empty((k, grid.n))
    V = np.empty((k, grid.n))
    for j, t in enumerate(ts):
        U[j], V[j] = man.project(math.sqrt(1 - t) * z1.u.values, math.sqrt(t) * z2.v.values)
    path = _Path(man, U, V)
    E = path.energies()
    endpoints = (float(E[0]), float(E[-1]))
    initial_max = float(E.max())
    c_mp = initial_max
    c_hist, max_hist = [c_mp], [initial_max]
    for rnd in range(cfg.deform_rounds):
        tau = cfg.step0 / (1 + rnd)
        for j in range(1, k - 1):
            u, v = path.U[j], path.V[j]
            _, _, xu, xv = man.gradient(u, v)
            try:
                un, vn = man.step(u, v, -xu, -xv, tau)
            except DegenerateState:
                continue
            if man.energy(un, vn) <= E[j]:
                path.U[j], path.V[j] = un, vn
        path.reparametrize()
        E = path.energies()
        max_hist.append(float(E.max()))
        c_mp = min(c_mp, float(E.max()))
        c_hist.append(c_mp)
    top = int(np.argmax(E))
    trace_msg = ""
    if top in (0, k - 1):
        cls = Classification.FAILED
        u, v, Eb, gnorm, trace, converged = path.U[top], path.V[top], float(E[top]), math.nan, [], False
        trace_msg = "path maximum sits at an endpoint"
    else:
        tu = path.U[top + 1] - path.U[top - 1]
        tv = path.V[top + 1] - path.V[top - 1]
        tn = model.norm_sq(0, tu) + model.norm_sq(1, tv)

        def transverse(xu, xv):
            # remove the tangent component in the Dirichlet inner product
            dot = float(np.dot(model.matvec(0, tu), xu) + np.dot(model.matvec(1, tv), xv))
            xu, xv = xu - dot / tn * tu, xv - dot / tn * tv
            return xu, xv, model.matvec(0, xu), model.matvec(1, xv)

        refine = SolverConfig(max_iters=cfg.max_iters // 4 or 1, step0=cfg.step0,
                              armijo_c=cfg.armijo_c, armijo_shrink=cfg.armijo_shrink,
                              grad_tol=cfg.grad_tol, energy_tol=cfg.energy_tol)
        u, v, Eb, gnorm, trace, converged, trace_msg, _ = _descend(
            man, path.U[top], path.V[top], refine, constraint=transverse)
        if Eb < c_mp - _SADDLE_DRIFT * abs(c_mp):
            # the fixed-tangent descent slid off the saddle; keep the path node
            u, v, Eb = path.U[top], path.V[top], float(E[top])
            gu, gv, xu, xv = man.gradient(u, v)
            gnorm = math.sqrt(max(float(np.dot(gu, xu) + np.dot(gv, xv)), 0.0))
            trace, converged = [], False
            trace_msg = "transverse refinement left the saddle; returning the top path node"
        cls = classify_components(model, u, v)
    return MountainPassResult(
        state=_pack(z1, u, v), energy=Eb, nehari_residual=model.psi(u, v, truncated=True),
        grad_norm=gnorm, classification=cls, trace=trace, nu=params.nu,
        iters=cfg.deform_rounds, converged=converged, message=trace_msg,
        c_mp=c_mp, c_mp_history=c_hist, path_max_history=max_hist,
        initial_path_max=initial_max, path_energies=[float(e) for e in E],
        endpoint_energies=endpoints)


# -- diagnostics ---------------------------------------------------------------

def concentration_report(state: StatePair, params: ProblemParams, r_lo: float, r_hi: float
                         ) -> ConcentrationReport:
    """Share of each critical integral carried by r < r_lo and by r > r_hi."""
    g = state.grid
    if not (g.r_min <= r_lo < r_hi <= g.r_max):
        raise InvalidParameter("need r_min <= r_lo < r_hi <= r_max")
    m = model_for(params, g)
    lo, hi = g.r < r_lo, g.r > r_hi
    out = []
    for i, x in ((0, state.u.values), (1, state.v.values)):
        p = m.p1 if i == 0 else m.p2
        dens = m.cw[i] * np.abs(x) ** p
        tot = float(dens.sum())
        if tot == 0:
            out += [0.0, 0.0]
        else:
            out += [float(dens[lo].sum()) / tot, float(dens[hi].sum()) / tot]
    return ConcentrationReport(*out)


def write_trace(path, result: SolveResult) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "energy", "grad_norm"])
        for it, e, g in result.trace:
            w.writerow([it, repr(float(e)), repr(float(g))])
