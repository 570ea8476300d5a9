"""Regime classification, coupling sweeps and the config-driven runner."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

from .closedform import (
    HypothesisViolation,
    InvalidParameter,
    ProblemParams,
    Regime,
    best_constant,
    critical_exponent,
    hardy_constant,
    validate_h,
)
from .grid import DEFAULT_N, DEFAULT_R_MAX, DEFAULT_R_MIN, build_grid, write_field
from .solvers import (
    Classification,
    RegimeViolation,
    SolverConfig,
    mountain_pass,
    multistart_ground_state,
    write_trace,
)

__all__ = [
    "LevelOrder",
    "Inequality",
    "RegimeReport",
    "classify_regime",
    "SweepRow",
    "SweepTable",
    "nu_sweep",
    "ConfigError",
    "load_config",
    "run_config",
    "EXIT_OK",
    "EXIT_UNKNOWN_KEY",
    "EXIT_MISSING_KEY",
    "EXIT_UNREADABLE",
    "EXIT_HYPOTHESIS",
    "EXIT_REGIME",
    "EXIT_BAD_VALUE",
]


class LevelOrder(str, Enum):
    C1_GREATER = "C1Greater"
    C2_GREATER = "C2Greater"
    EQUAL = "Equal"


@dataclass(frozen=True)
class Inequality:
    """lhs <op> rhs, kept with the evaluated sides so it can be rechecked."""

    text: str
    lhs: float
    op: str
    rhs: float

    def holds(self) -> bool:
        return {
            "<": self.lhs < self.rhs,
            "<=": self.lhs <= self.rhs,
            ">": self.lhs > self.rhs,
            ">=": self.lhs >= self.rhs,
            "==": self.lhs == self.rhs,
        }[self.op]


def _ineq(text: str, lhs: float, op: str, rhs: float) -> Inequality:
    return Inequality(text, float(lhs), op, float(rhs))


@dataclass
class RegimeReport:
    c1: float
    c2: float
    order: LevelOrder
    base_hypotheses: bool
    thm11_applicable: bool
    thm12_case: list
    thm13_case: list
    thm14_case: list
    inequalities: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["order"] = self.order.value
        return d


def _case_if(checks: list[Inequality]) -> bool:
    return all(c.holds() for c in checks)


def classify_regime(params: ProblemParams) -> RegimeReport:
    """Which hypothesis sets of the existence results hold for ``params``.

    Flags come from the levels c1 = c(lambda1, s1), c2 = c(lambda2, s2) and
    the exponents alone; cases that additionally need a large or small
    coupling are flagged with that proviso in their name.
    """
    P = params
    c1, c2 = P.c1, P.c2
    order = (LevelOrder.C1_GREATER if c1 > c2 else
             LevelOrder.C2_GREATER if c2 > c1 else LevelOrder.EQUAL)
    cc = P.calculus
    balance = _ineq("alpha/2*_{s1}+beta/2*_{s2} <= 1", cc.balance, "<=", 1.0)
    base = balance.holds() and (cc.regime is Regime.SUBCRITICAL or validate_h(P).ok)
    a, b = P.alpha, P.beta
    candidates: dict[str, list[Inequality]] = {}

    # positive ground states for large coupling, any levels
    thm11 = base

    thm12 = []
    cand12 = {
        "i": [_ineq("c1 <= c2", c1, "<=", c2), _ineq("beta < 2", b, "<", 2)],
        "i (beta = 2, nu large)": [_ineq("c1 <= c2", c1, "<=", c2), _ineq("beta = 2", b, "==", 2)],
        "ii": [_ineq("c1 >= c2", c1, ">=", c2), _ineq("alpha < 2", a, "<", 2)],
        "ii (alpha = 2, nu large)": [_ineq("c1 >= c2", c1, ">=", c2), _ineq("alpha = 2", a, "==", 2)],
        "in particular": [_ineq("max(alpha, beta) < 2", max(a, b), "<", 2)],
        "in particular (nu large)": [_ineq("max(alpha, beta) <= 2", max(a, b), "<=", 2)],
    }
    thm13 = []
    cand13 = {
        "i": [_ineq("alpha >= 2", a, ">=", 2), _ineq("c1 > c2", c1, ">", c2)],
        "ii": [_ineq("beta >= 2", b, ">=", 2), _ineq("c1 < c2", c1, "<", c2)],
        "iii": [_ineq("alpha >= 2", a, ">=", 2), _ineq("beta >= 2", b, ">=", 2)],
    }
    thm14 = []
    cand14 = {
        "i": [_ineq("alpha >= 2", a, ">=", 2), _ineq("c1 > c2", c1, ">", c2),
              _ineq("2 c2 > c1", 2 * c2, ">", c1)],
        "ii": [_ineq("beta >= 2", b, ">=", 2), _ineq("c2 > c1", c2, ">", c1),
               _ineq("2 c1 > c2", 2 * c1, ">", c2)],
    }
    if base:
        for flags, cands, tag in ((thm12, cand12, "thm12"), (thm13, cand13, "thm13"),
                                  (thm14, cand14, "thm14")):
            for name, checks in cands.items():
                if _case_if(checks):
                    flags.append(name)
                    candidates[f"{tag}:{name}"] = checks
    candidates["base"] = [balance]
    ineqs = {k: [asdict(c) for c in v] for k, v in candidates.items()}
    return RegimeReport(c1, c2, order, base, thm11, thm12, thm13, thm14, ineqs)


# -- coupling sweep -------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    nu: float
    energy: float
    gap: float
    classification: str
    nehari_residual: float
    grad_norm: float
    iters: int


SWEEP_COLUMNS = ("nu", "energy", "gap", "classification", "nehari_residual", "grad_norm", "iters")


@dataclass
class SweepTable:
    rows: list
    level: float  # min(c1, c2)

    def crossover(self, rel_gap: float = 1e-3) -> float | None:
        """Smallest nu whose best state is Coupled and beats the lower level by rel_gap."""
        for r in self.rows:
            if r.classification == Classification.COUPLED.value and r.gap >= rel_gap * self.level:
                return r.nu
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in self.rows:
            w.writerow([_num(getattr(r, c)) if c != "classification" else r.classification
                        for c in SWEEP_COLUMNS])
        return buf.getvalue()


def _num(x) -> str:
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def nu_sweep(params: ProblemParams, nus, cfg: SolverConfig = SolverConfig(), grid=None,
             seed: int = 0) -> SweepTable:
    nus = [float(x) for x in nus]
    if len(nus) < 2 or any(b <= a for a, b in zip(nus, nus[1:])):
        raise InvalidParameter("nu_list must hold at least two strictly increasing values")
    if any(x < 0 for x in nus):
        raise InvalidParameter("coupling values must be nonnegative")
    grid = grid or build_grid(params.N)
    level = min(params.c1, params.c2)
    rows = []
    for nu in nus:
        best, _ = multistart_ground_state(params.with_nu(nu), grid, cfg, seed)
        rows.append(SweepRow(nu, best.energy, level - best.energy, best.classification.value,
                             best.nehari_residual, best.grad_norm, best.iters))
    return SweepTable(rows, level)


# -- configuration ----------------------------------------------------------------

EXIT_OK = 0
EXIT_UNKNOWN_KEY = 2
EXIT_MISSING_KEY = 3
EXIT_UNREADABLE = 4
EXIT_HYPOTHESIS = 5
EXIT_REGIME = 6
EXIT_BAD_VALUE = 7

COMMANDS = ("constants", "validate", "solve-ground", "solve-mp", "sweep", "regime")

_FLOAT = ("lambda1", "lambda2", "s1", "s2", "s3", "alpha", "beta", "nu", "h0", "h_p", "h_q",
          "r_min", "r_max", "step0", "grad_tol", "energy_tol")
_INT = ("N", "grid_n", "max_iters", "path_points", "deform_rounds", "seed")
KEYS = frozenset(_FLOAT + _INT + ("nu_list", "out_dir", "command"))
_PARAM_KEYS = ("N", "lambda1", "lambda2", "s1", "s2", "s3", "alpha", "beta")
_NEEDS = {
    "constants": (),
    "validate": (),
    "regime": (),
    "solve-ground": ("nu",),
    "solve-mp": ("nu",),
    "sweep": ("nu_list",),
}


class ConfigError(Exception):
    def __init__(self, status: int, message: str, key: str | None = None):
        super().__init__(message)
        self.status, self.key = status, key


def _parse_value(key: str, raw: str):
    try:
        if key in _INT:
            f = float(raw)
            if f != int(f):
                raise ValueError
            return int(f)
        if key in _FLOAT:
            return float(raw)
        if key == "nu_list":
            return [float(x) for x in raw.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(EXIT_BAD_VALUE, f"bad value for key '{key}': {raw!r}", key) from None
    return raw


def load_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(EXIT_UNREADABLE, f"cannot read config '{path}': {exc}") from None
    cfg = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(EXIT_BAD_VALUE, f"line {lineno}: expected 'key = value'")
        key, raw = (x.strip() for x in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(EXIT_UNKNOWN_KEY, f"unknown key '{key}' (line {lineno})", key)
        cfg[key] = _parse_value(key, raw)
    return cfg


def _require(cfg: dict, keys) -> None:
    for k in keys:
        if k not in cfg:
            raise ConfigError(EXIT_MISSING_KEY, f"missing required key '{k}'", k)


def _params(cfg: dict) -> ProblemParams:
    kw = {k: cfg[k] for k in _PARAM_KEYS}
    for k in ("nu", "h0", "h_p", "h_q"):
        if k in cfg:
            kw[k] = cfg[k]
    return ProblemParams(**kw)


def _solver_cfg(cfg: dict) -> SolverConfig:
    names = ("max_iters", "step0", "grad_tol", "energy_tol", "path_points", "deform_rounds")
    return SolverConfig(**{k: cfg[k] for k in names if k in cfg})


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(_json_safe(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _constants(P: ProblemParams) -> dict:
    N = P.N
    cc = P.calculus
    return {
        "Lambda_N": hardy_constant(N),
        "2*_s1": critical_exponent(N, P.s1),
        "2*_s2": critical_exponent(N, P.s2),
        "S1": best_constant(N, P.lambda1, P.s1),
        "S2": best_constant(N, P.lambda2, P.s2),
        "c1": P.c1,
        "c2": P.c2,
        "tau": cc.tau,
        "frak_p": cc.frak_p,
        "sigma": cc.sigma,
        "balance": cc.balance,
        "coupling_regime": cc.regime.value,
    }


def _execute(cfg: dict, command: str, out: Path, stdout) -> int:
    _require(cfg, _PARAM_KEYS + _NEEDS[command] + ("out_dir",))
    P = _params(cfg)
    out.mkdir(parents=True, exist_ok=True)
    if command == "constants":
        data = _constants(P)
        _write_json(out / "constants.json", data)
        for k, v in data.items():
            print(f"{k} = {v}", file=stdout)
        return EXIT_OK
    if command == "validate":
        rep = validate_h(P)
        data = {"ok": rep.ok, **rep.as_dict(), **_constants(P)}
        _write_json(out / "validate.json", data)
        print(f"h hypotheses {'hold' if rep.ok else 'FAIL'}", file=stdout)
        return EXIT_OK if rep.ok else EXIT_HYPOTHESIS
    if command == "regime":
        rep = classify_regime(P)
        _write_json(out / "regime.json", rep.as_dict())
        print(f"order={rep.order.value} thm12={rep.thm12_case} thm13={rep.thm13_case} "
              f"thm14={rep.thm14_case}", file=stdout)
        return EXIT_OK
    grid = build_grid(P.N, cfg.get("r_min", DEFAULT_R_MIN), cfg.get("r_max", DEFAULT_R_MAX),
                      cfg.get("grid_n", DEFAULT_N))
    scfg = _solver_cfg(cfg)
    seed = cfg.get("seed", 0)
    level = min(P.c1, P.c2)
    if command == "sweep":
        table = nu_sweep(P, cfg["nu_list"], scfg, grid, seed)
        (out / "sweep.csv").write_text(table.to_csv(), encoding="ascii")
        cross = table.crossover()
        print(f"empirical crossover nu = {cross}", file=stdout)
        return EXIT_OK
    if command == "solve-ground":
        res, _ = multistart_ground_state(P, grid, scfg, seed)
    else:
        res = mountain_pass(P, grid, scfg)
        with open(out / "path.csv", "w", encoding="ascii") as fh:
            fh.write("node,energy\n")
            fh.writelines(f"{j},{e!r}\n" for j, e in enumerate(res.path_energies))
    record = res.record()
    record.update(c1=P.c1, c2=P.c2, energy_normalized=res.energy / level, command=command)
    _write_json(out / "result.json", record)
    write_field(out / "profile_u.dat", res.state.u)
    write_field(out / "profile_v.dat", res.state.v)
    write_trace(out / "trace.csv", res)
    print(f"energy = {float(res.energy)!r} ({res.classification.value})", file=stdout)
    return EXIT_OK


def run_config(path, command: str | None = None, stdout=None, stderr=None) -> int:
    """Run the command named in the config (or ``command``); returns an exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = load_config(path)
        if command is None:
            _require(cfg, ("command",))
            command = cfg["command"]
        if command not in COMMANDS:
            raise ConfigError(EXIT_BAD_VALUE, f"bad value for key 'command': {command!r}", "command")
        return _execute(cfg, command, Path(cfg.get("out_dir", ".")), stdout)
    except ConfigError as exc:
        print(f"error: {exc}", file=stderr)
        return exc.status
    except HypothesisViolation as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_HYPOTHESIS
    except RegimeViolation as exc:
        print(f"error: regime violation: {exc}", file=stderr)
        return EXIT_REGIME
    except InvalidParameter as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_BAD_VALUE
