"""Solver-agnostic MILP container, solve entry point, and independent checks.

The model is a plain declarative store of variables, linear constraints, and
a linear minimization objective.  Solving is delegated to the HiGHS backend
shipped with scipy; checking a solution never touches the solver and simply
re-evaluates every constraint arithmetically.  A brute-force enumeration
oracle for tiny unit-commitment instances lives here as well, so that the
MILP path can be validated against an independent computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog
from scipy.optimize import milp as _highs_milp

CONTINUOUS = "continuous"
BINARY = "binary"

LE = "<="
GE = ">="
EQ = "=="

_SENSES = (LE, GE, EQ)


class ModelError(ValueError):
    """Raised for malformed models: duplicate names, unknown variables."""


@dataclass
class SolveOptions:
    """Backend knobs; defaults match the precision the rest of the suite assumes."""

    mip_rel_gap: float = 1e-4
    time_limit: float | None = None
    node_limit: int | None = None
    presolve: bool = True


class MilpModel:
    """Declarative MILP: named variables, named linear constraints, min objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self._var_names: list[str] = []
        self._var_index: dict[str, int] = {}
        self._kinds: list[str] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._obj: dict[int, float] = {}
        # each constraint: (name, index array, coefficient array, sense, rhs)
        self._constrs: list[tuple[str, np.ndarray, np.ndarray, str, float]] = []
        self._constr_index: dict[str, int] = {}
        self._matrix_cache: tuple[int, sp.csr_matrix, np.ndarray, np.ndarray] | None = None

    # ------------------------------------------------------------------ build
    @property
    def n_vars(self) -> int:
        return len(self._var_names)

    @property
    def n_constrs(self) -> int:
        return len(self._constrs)

    @property
    def var_names(self) -> list[str]:
        return list(self._var_names)

    def add_var(self, name: str, kind: str = CONTINUOUS, lb: float = 0.0,
                ub: float = math.inf) -> int:
        if name in self._var_index:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ModelError(f"variable {name!r} has empty bound range [{lb}, {ub}]")
        idx = len(self._var_names)
        self._var_names.append(name)
        self._var_index[name] = idx
        self._kinds.append(kind)
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        return idx

    def var_index(self, var: int | str) -> int:
        if isinstance(var, str):
            try:
                return self._var_index[var]
            except KeyError:
                raise ModelError(f"unknown variable {var!r}") from None
        if not 0 <= var < self.n_vars:
            raise ModelError(f"variable index {var} out of range")
        return var

    def var_kind(self, var: int | str) -> str:
        return self._kinds[self.var_index(var)]

    def var_bounds(self, var: int | str) -> tuple[float, float]:
        i = self.var_index(var)
        return self._lb[i], self._ub[i]

    def fix_var(self, var: int | str, value: float) -> None:
        """Pin a variable by collapsing its bounds."""
        i = self.var_index(var)
        self._lb[i] = float(value)
        self._ub[i] = float(value)

    def add_to_objective(self, var: int | str, coef: float) -> None:
        i = self.var_index(var)
        self._obj[i] = self._obj.get(i, 0.0) + float(coef)

    def add_constr(self, name: str, terms, sense: str, rhs: float) -> None:
        if name in self._constr_index:
            raise ModelError(f"duplicate constraint name {name!r}")
        if sense not in _SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        acc: dict[int, float] = {}
        for var, coef in terms:
            i = self.var_index(var)
            acc[i] = acc.get(i, 0.0) + float(coef)
        idx = np.fromiter(acc.keys(), dtype=np.int64, count=len(acc))
        coefs = np.fromiter(acc.values(), dtype=np.float64, count=len(acc))
        self._constr_index[name] = len(self._constrs)
        self._constrs.append((name, idx, coefs, sense, float(rhs)))
        self._matrix_cache = None

    def constraint_names(self) -> list[str]:
        return [c[0] for c in self._constrs]

    # -------------------------------------------------------------- validation
    def validate(self) -> None:
        """Raise ModelError if the container invariants are broken."""
        for name, idx, _, _, _ in self._constrs:
            if len(idx) and (idx.min() < 0 or idx.max() >= self.n_vars):
                raise ModelError(f"constraint {name!r} references undeclared variables")

    # ------------------------------------------------------------------ matrix
    def _matrix(self) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
        """Constraint matrix with per-row lower/upper bounds, cached per size."""
        if self._matrix_cache is not None and self._matrix_cache[0] == self.n_constrs:
            return self._matrix_cache[1:]
        rows, cols, data = [], [], []
        lo = np.empty(self.n_constrs)
        hi = np.empty(self.n_constrs)
        for r, (_, idx, coefs, sense, rhs) in enumerate(self._constrs):
            rows.extend([r] * len(idx))
            cols.extend(idx.tolist())
            data.extend(coefs.tolist())
            if sense == LE:
                lo[r], hi[r] = -np.inf, rhs
            elif sense == GE:
                lo[r], hi[r] = rhs, np.inf
            else:
                lo[r], hi[r] = rhs, rhs
        a = sp.csr_matrix(
            (np.asarray(data), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
            shape=(self.n_constrs, self.n_vars),
        )
        self._matrix_cache = (self.n_constrs, a, lo, hi)
        return a, lo, hi

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for i, coef in self._obj.items():
            c[i] = coef
        return c

    # --------------------------------------------------------------------- io
    def write_lp(self, path) -> None:
        """Dump the model as LP-format text for offline debugging."""
        def _term(coef: float, name: str) -> str:
            sign = "+" if coef >= 0 else "-"
            return f"{sign} {abs(coef):.12g} {name}"

        with open(path, "w") as fh:
            fh.write(f"\\ {self.name}\nMinimize\n obj:")
            for i, coef in sorted(self._obj.items()):
                fh.write(" " + _term(coef, self._var_names[i]))
            fh.write("\nSubject To\n")
            for name, idx, coefs, sense, rhs in self._constrs:
                op = {LE: "<=", GE: ">=", EQ: "="}[sense]
                body = " ".join(_term(c, self._var_names[i]) for i, c in zip(idx, coefs))
                fh.write(f" {name}: {body} {op} {rhs:.12g}\n")
            fh.write("Bounds\n")
            for i, name in enumerate(self._var_names):
                fh.write(f" {self._lb[i]:.12g} <= {name} <= {self._ub[i]:.12g}\n")
            binaries = [n for n, k in zip(self._var_names, self._kinds) if k == BINARY]
            if binaries:
                fh.write("Binaries\n " + " ".join(binaries) + "\n")
            fh.write("End\n")


@dataclass
class MilpSolution:
    """Outcome of one solve; values indexed like the model's variables."""

    status: str  # "optimal" | "infeasible" | "limit"
    objective: float
    values: np.ndarray
    message: str = ""
    mip_gap: float = float("nan")
    _name_index: dict[str, int] = field(default_factory=dict, repr=False)

    def value(self, var: int | str) -> float:
        if isinstance(var, str):
            var = self._name_index[var]
        return float(self.values[var])


@dataclass
class ConstraintReport:
    """Constraint violations above tolerance, from independent re-evaluation."""

    violations: list[tuple[str, float]]

    @property
    def ok(self) -> bool:
        return not self.violations

    def worst(self) -> tuple[str, float] | None:
        return max(self.violations, key=lambda v: v[1]) if self.violations else None


def solve(model: MilpModel, options: SolveOptions | None = None) -> MilpSolution:
    """Solve the model with HiGHS; status reflects the backend outcome."""
    options = options or SolveOptions()
    model.validate()
    c = model.objective_vector()
    integrality = np.array([1 if k == BINARY else 0 for k in model._kinds])
    bounds = Bounds(np.array(model._lb), np.array(model._ub))
    constraints = None
    if model.n_constrs:
        a, lo, hi = model._matrix()
        constraints = LinearConstraint(a, lo, hi)
    opts = {"mip_rel_gap": options.mip_rel_gap, "presolve": options.presolve}
    if options.time_limit is not None:
        opts["time_limit"] = options.time_limit
    if options.node_limit is not None:
        opts["node_limit"] = options.node_limit
    res = _highs_milp(c=c, constraints=constraints, integrality=integrality,
                      bounds=bounds, options=opts)
    if res.status == 0:
        status = "optimal"
    elif res.status == 2:
        status = "infeasible"
    else:
        status = "limit"
    values = res.x if res.x is not None else np.full(model.n_vars, np.nan)
    gap = getattr(res, "mip_gap", float("nan"))
    if gap is None:
        gap = float("nan")
    return MilpSolution(
        status=status,
        objective=float(res.fun) if res.fun is not None else float("nan"),
        values=np.asarray(values, dtype=float),
        message=str(res.message),
        mip_gap=float(gap),
        _name_index=dict(model._var_index),
    )


def check_solution(model: MilpModel, solution: MilpSolution,
                   tol: float = 1e-6) -> ConstraintReport:
    """Re-evaluate every constraint arithmetically, independent of the solver.

    Violations strictly greater than ``tol`` are reported; a violation exactly
    at the tolerance is not.
    """
    if solution.values.shape[0] != model.n_vars or np.isnan(solution.values).any():
        raise ModelError("solution does not provide a value for every variable")
    a, lo, hi = model._matrix()
    ax = a @ solution.values
    below = np.where(lo > -np.inf, lo - ax, 0.0)
    above = np.where(hi < np.inf, ax - hi, 0.0)
    viol = np.maximum(below, above)
    out = [(model._constrs[i][0], float(viol[i])) for i in np.nonzero(viol > tol)[0]]
    return ConstraintReport(out)


# --------------------------------------------------------------------------
# Brute-force unit-commitment oracle for tiny instances.
#
# The enumeration below never goes through MilpModel: commitment patterns are
# enumerated exhaustively and the dispatch for each feasible pattern is solved
# as a small LP assembled directly into matrix form.  This keeps the oracle an
# independent check on any MILP-based unit-commitment path.
# --------------------------------------------------------------------------

MAX_ORACLE_GENERATORS = 3
MAX_ORACLE_INTERVALS = 4


def _pattern_fixed_cost(gen, u: np.ndarray, u0: int) -> float:
    cost = gen.no_load_cost * float(u.sum())
    prev = u0
    for ut in u:
        if ut == 1 and prev == 0:
            cost += gen.startup_cost
        if ut == 0 and prev == 1:
            cost += gen.shutdown_cost
        prev = ut
    return cost


def _pattern_times_ok(gen, u: np.ndarray, u0: int, init_run: int) -> bool:
    """Minimum up/down feasibility, counting the run length carried into t=0."""
    runs: list[tuple[int, int]] = []  # (state, length), oldest first
    state, length = u0, init_run
    for ut in u:
        if ut == state:
            length += 1
        else:
            runs.append((state, length))
            state, length = int(ut), 1
    # the final run is unconstrained: it may continue beyond the horizon
    for s, n in runs:
        if s == 1 and n < gen.min_up:
            return False
        if s == 0 and n < gen.min_down:
            return False
    return True


def _dispatch_lp(system, loads: np.ndarray, patterns: np.ndarray,
                 u0: np.ndarray, p0: np.ndarray, interval_hours: float,
                 voll: float) -> float | None:
    """LP cost of serving ``loads`` under a fixed commitment pattern.

    Variables: block outputs per (g, t, e) and a positive/negative balance
    slack pair per interval priced at VOLL.  Returns None if infeasible.
    """
    gens = system.generators
    t_count = len(loads)
    blk_of = []  # (g, t, e) -> column
    col = 0
    for g in range(len(gens)):
        for t in range(t_count):
            for e in range(len(gens[g].cost_blocks)):
                blk_of.append((g, t, e))
                col += 1
    slack_base = col
    n_cols = col + 2 * t_count

    cost = np.zeros(n_cols)
    ub = np.full(n_cols, np.inf)
    for j, (g, t, e) in enumerate(blk_of):
        width, slope = gens[g].cost_blocks[e]
        cost[j] = slope * interval_hours
        ub[j] = width if patterns[g, t] else 0.0
    cost[slack_base:] = voll * interval_hours

    def power_expr(g: int, t: int) -> tuple[list[int], float]:
        cols = [j for j, (gg, tt, _) in enumerate(blk_of) if gg == g and tt == t]
        return cols, gens[g].p_min * patterns[g, t]

    rows_eq, rhs_eq = [], []
    rows_ub, rhs_ub = [], []
    for t in range(t_count):
        row = np.zeros(n_cols)
        base = 0.0
        for g in range(len(gens)):
            cols, fixed = power_expr(g, t)
            row[cols] = 1.0
            base += fixed
        row[slack_base + t] = 1.0       # unserved load
        row[slack_base + t_count + t] = -1.0  # surplus
        rows_eq.append(row)
        rhs_eq.append(loads[t] - base)
    for g, gen in enumerate(gens):
        for t in range(t_count):
            prev_cols, prev_fixed = power_expr(g, t - 1) if t else ([], 0.0)
            if t == 0:
                prev_fixed = p0[g]
            cols, fixed = power_expr(g, t)
            u_prev = patterns[g, t - 1] if t else u0[g]
            started = patterns[g, t] == 1 and u_prev == 0
            stopped = patterns[g, t] == 0 and u_prev == 1
            up_cap = gen.ramp_15 * u_prev + gen.ramp_su * started
            dn_cap = gen.ramp_15 * patterns[g, t] + gen.ramp_sd * stopped
            row = np.zeros(n_cols)
            row[cols] = 1.0
            row[prev_cols] = -1.0
            rows_ub.append(row)
            rhs_ub.append(up_cap - fixed + prev_fixed)
            rows_ub.append(-row)
            rhs_ub.append(dn_cap + fixed - prev_fixed)
    res = linprog(
        c=cost,
        A_ub=np.array(rows_ub) if rows_ub else None,
        b_ub=np.array(rhs_ub) if rows_ub else None,
        A_eq=np.array(rows_eq),
        b_eq=np.array(rhs_eq),
        bounds=list(zip(np.zeros(n_cols), ub)),
        method="highs",
    )
    if res.status != 0:
        return None
    return float(res.fun)


def brute_force_uc(system, loads, interval_hours: float = 0.25,
                   voll: float = 10000.0) -> float:
    """Exhaustive optimal cost of a tiny single-bus unit-commitment instance.

    All generators start offline (long enough to satisfy minimum down time)
    with zero prior output.  Every commitment pattern is enumerated; for each
    feasible one, the continuous dispatch LP is solved and fixed costs added.
    """
    loads = np.asarray(loads, dtype=float)
    gens = system.generators
    if len(gens) > MAX_ORACLE_GENERATORS or len(loads) > MAX_ORACLE_INTERVALS:
        raise ValueError(
            f"oracle instance too large: {len(gens)} generators x {len(loads)} intervals"
        )
    g_count, t_count = len(gens), len(loads)
    u0 = np.zeros(g_count, dtype=int)
    p0 = np.zeros(g_count)
    init_run = max(max(g.min_down for g in gens), 1)

    best = math.inf
    for code in range(2 ** (g_count * t_count)):
        patterns = np.array(
            [[(code >> (g * t_count + t)) & 1 for t in range(t_count)]
             for g in range(g_count)],
            dtype=int,
        )
        if not all(
            _pattern_times_ok(gens[g], patterns[g], u0[g], init_run)
            for g in range(g_count)
        ):
            continue
        dispatch = _dispatch_lp(system, loads, patterns, u0, p0, interval_hours, voll)
        if dispatch is None:
            continue
        fixed = sum(
            _pattern_fixed_cost(gens[g], patterns[g], u0[g]) for g in range(g_count)
        )
        best = min(best, dispatch + fixed)
    if not math.isfinite(best):
        raise RuntimeError("no feasible commitment pattern found")
    return best
