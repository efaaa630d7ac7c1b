"""Bounded-deviation solutions of the unsharp-value product equations.

Each observable value is written as ``mean + deviation`` with ``mean`` in {-1, +1}. The four
single-qubit values (X1, X2, Y1, Y2) carry means ``v`` and deviations ``delta``; the three
two-qubit values (Z1Z2, X1Y2, Y1Y2) carry means ``w`` and deviations ``Delta``. Products of
deviations follow first-order error propagation, ``d_jk = v_j d_k + d_j v_k``.

Substituting ``x_j = v_j delta_j`` turns every row of the first five equations into the same
scalar relation ``(1 + a)^2 (1 + b)^2 = 1 + 2 (a + b)``, independent of the sign pattern.
Near the origin it has two branches ``b ~ lambda a`` with ``lambda = -2 +- sqrt(3)``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

PLUS = "plus"
MINUS = "minus"
BRANCHES = (PLUS, MINUS)

SQRT3 = math.sqrt(3.0)
LAMBDA_PLUS = -2.0 + SQRT3
LAMBDA_MINUS = -2.0 - SQRT3

# (j, k) index pairs of the four single-qubit rows, 0-based
V_ROWS: tuple[tuple[int, int], ...] = ((0, 1), (2, 3), (0, 3), (2, 1))


class SolverError(Exception):
    """Base class for failures to produce a valid bounded solution."""


class BoundError(SolverError, ValueError):
    """A deviation (or the free parameter) exceeds the epsilon bound."""


class TrivialSolutionError(SolverError, ValueError):
    """The free parameter is below ``t_min``; only the all-zero solution would result."""


class DomainError(SolverError, ValueError):
    """No real root exists for the requested branch."""


class ConvergenceError(SolverError):
    pass


class ClosureError(SolverError):
    """The chosen branch combination does not close the four-row cycle."""


class Convention(str, enum.Enum):
    """Sign treatment of the Delta_13 product term in the sixth equation."""

    LITERAL = "literal"
    IDENTITY_SIGNED = "identity-signed"


def _signs(values: Sequence[int], n: int, name: str) -> tuple[int, ...]:
    values = tuple(int(v) for v in values)
    if len(values) != n or any(v not in (-1, 1) for v in values):
        raise ValueError(f"{name} must be {n} values in {{-1, +1}}, got {values}")
    return values


@dataclass(frozen=True)
class SignPattern:
    v: tuple[int, int, int, int] = (1, 1, 1, 1)
    w: tuple[int, int, int] = (1, 1, 1)

    def __post_init__(self):
        object.__setattr__(self, "v", _signs(self.v, 4, "v"))
        object.__setattr__(self, "w", _signs(self.w, 3, "w"))

    def flipped(self) -> "SignPattern":
        return SignPattern(tuple(-s for s in self.v), tuple(-s for s in self.w))


@dataclass(frozen=True)
class DeltaAssignment:
    delta: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    Delta: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if len(self.delta) != 4 or len(self.Delta) != 3:
            raise ValueError("need four delta and three Delta values")
        object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))
        object.__setattr__(self, "Delta", tuple(float(d) for d in self.Delta))

    def derived(self, pattern: SignPattern, convention: Convention = Convention.LITERAL) -> dict[str, float]:
        """Propagated deviations of the product observables; always recomputed."""
        v, w, d, D = pattern.v, pattern.w, self.delta, self.Delta
        sign13 = 1.0 if Convention(convention) is Convention.LITERAL else -1.0
        return {
            "delta12": propagate(v[0], d[0], v[1], d[1]),
            "delta34": propagate(v[2], d[2], v[3], d[3]),
            "delta14": propagate(v[0], d[0], v[3], d[3]),
            "delta32": propagate(v[2], d[2], v[1], d[1]),
            "Delta12": propagate(w[0], D[0], w[1], D[1]),
            "Delta13": sign13 * propagate(w[0], D[0], w[2], D[2]),
        }

    def max_abs(self) -> float:
        return max(abs(x) for x in self.delta + self.Delta)


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-3
    newton_tol: float = 1e-14
    max_iter: int = 50
    t_min: float = 1e-6
    branches: tuple[str, str, str] = (PLUS, PLUS, PLUS)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 <= self.t_min < self.epsilon:
            raise ValueError("t_min must lie in [0, epsilon)")
        for b in self.branches:
            _branch(b)


def _branch(b: str) -> str:
    if b not in BRANCHES:
        raise ValueError(f"branch must be 'plus' or 'minus', got {b!r}")
    return b


def propagate(vj: int, dj: float, vk: int, dk: float) -> float:
    """First-order deviation of the product (vj + dj)(vk + dk) about vj * vk."""
    return vj * dk + dj * vk


def residuals(
    pattern: SignPattern, d: DeltaAssignment, convention: Convention = Convention.LITERAL
) -> tuple[float, ...]:
    """Left minus right side of all six equations, in row order."""
    v, w = pattern.v, pattern.w
    dl, Dl = d.delta, d.Delta
    derived = d.derived(pattern, convention)
    out = []
    for (j, k), key in zip(V_ROWS, ("delta12", "delta34", "delta14", "delta32")):
        lhs = (v[j] + dl[j]) ** 2 * (v[k] + dl[k]) ** 2
        out.append(lhs - (1 + 2 * v[j] * v[k] * derived[key]))
    lhs = (w[0] + Dl[0]) ** 2 * (w[1] + Dl[1]) ** 2
    out.append(lhs - (1 + 2 * w[0] * w[1] * derived["Delta12"]))
    lhs = -((w[0] + Dl[0]) ** 2) * (w[2] + Dl[2]) ** 2
    out.append(lhs - (-1 + 2 * w[0] * w[2] * derived["Delta13"]))
    return tuple(out)


def reduce(pattern: SignPattern, d: DeltaAssignment) -> tuple[tuple[float, ...], tuple[float, ...]]:
    x = tuple(s * dv for s, dv in zip(pattern.v, d.delta))
    y = tuple(s * dv for s, dv in zip(pattern.w, d.Delta))
    return x, y


def expand(pattern: SignPattern, x: Sequence[float], y: Sequence[float]) -> DeltaAssignment:
    """Inverse of :func:`reduce`."""
    return DeltaAssignment(
        tuple(s * xv for s, xv in zip(pattern.v, x)),
        tuple(s * yv for s, yv in zip(pattern.w, y)),
    )


def pair_relation(a: float, b: float) -> float:
    return (1 + a) ** 2 * (1 + b) ** 2 - 1 - 2 * (a + b)


def _pair_relation_db(a: float, b: float) -> float:
    return 2 * (1 + a) ** 2 * (1 + b) - 2


def literal_relation(a: float, b: float) -> float:
    """Reduced sixth row under the literal sign reading: (1+a)^2 (1+b)^2 = 1 - 2(a+b)."""
    return (1 + a) ** 2 * (1 + b) ** 2 - 1 + 2 * (a + b)


def _literal_relation_db(a: float, b: float) -> float:
    return 2 * (1 + a) ** 2 * (1 + b) + 2


def branch_solve_pair(a: float, branch: str = PLUS) -> float:
    """Closed-form root ``b`` of ``(1+a)^2 (1+b)^2 = 1 + 2(a+b)``.

    ``b = a (-(a+2) +- sqrt(2a+3)) / (1+a)^2``; the 'plus' branch has slope -2+sqrt(3)
    at the origin and 'minus' has slope -2-sqrt(3).
    """
    _branch(branch)
    if a < -1.5:
        raise DomainError(f"no real root for a={a!r} < -3/2")
    if a == -1.0:
        raise DomainError("a = -1 is degenerate")
    root = math.sqrt(2 * a + 3)
    s = root if branch == PLUS else -root
    return a * (-(a + 2) + s) / (1 + a) ** 2


def branch_solve_literal(a: float, branch: str = PLUS) -> float:
    """Closed-form root ``b`` of ``(1+a)^2 (1+b)^2 = 1 - 2(a+b)``.

    'plus' is the small root (``b ~ -a`` near the origin), 'minus' the far root near -4.
    """
    _branch(branch)
    if a == -1.0:
        raise DomainError("a = -1 is degenerate")
    c = (1 + a) ** 2
    half_b = c + 1
    const = a * a + 4 * a
    disc = half_b * half_b - c * const
    if disc < 0:
        raise DomainError(f"no real root for a={a!r}")
    q = -(half_b + math.sqrt(disc))
    return const / q if branch == PLUS else q / c


def _newton(f, df, x0: float, cfg: SolverConfig) -> float:
    x = x0
    for _ in range(cfg.max_iter):
        r = f(x)
        if abs(r) <= cfg.newton_tol:
            return x
        slope = df(x)
        if slope == 0:
            break
        x = x - r / slope
    if abs(f(x)) <= cfg.newton_tol:
        return x
    raise ConvergenceError(f"Newton did not reach |residual| <= {cfg.newton_tol} from x0={x0!r}")


def _check_parameter(t: float, cfg: SolverConfig) -> float:
    t = float(t)
    if abs(t) > cfg.epsilon:
        raise BoundError(f"|t| = {abs(t)!r} exceeds epsilon = {cfg.epsilon!r}")
    if abs(t) < cfg.t_min or t == 0:
        raise TrivialSolutionError(f"|t| = {abs(t)!r} below t_min = {cfg.t_min!r}")
    return t


def _check_bounds(values: Sequence[float], cfg: SolverConfig) -> None:
    worst = max(abs(x) for x in values)
    if worst > cfg.epsilon:
        raise BoundError(f"max |deviation| = {worst!r} exceeds epsilon = {cfg.epsilon!r}")


def _check_residuals(res: Sequence[float], cfg: SolverConfig, what: str) -> None:
    worst = max(abs(r) for r in res)
    if worst > cfg.newton_tol:
        raise ClosureError(f"{what}: residual {worst:.3e} above tolerance {cfg.newton_tol:.1e}")


def solve_v_system(
    pattern: SignPattern,
    t: float,
    branches: Sequence[str] | None = None,
    cfg: SolverConfig | None = None,
    x3_guess: float | None = None,
) -> DeltaAssignment:
    """Solve the four single-qubit rows with ``delta_1 = t`` as the free parameter.

    ``branches`` picks the roots for (delta_2 from delta_1, delta_4 from delta_1,
    delta_3 from delta_2). delta_3 is then refined by Newton on the (Y1, X2) row and
    must also satisfy the (Y1, Y2) row, closing the cycle. Returned Delta is zero.
    """
    cfg = cfg or SolverConfig()
    b2, b4, b3 = (_branch(b) for b in (branches or cfg.branches))
    t = _check_parameter(t, cfg)
    pattern = SignPattern(pattern.v, pattern.w)

    x1 = pattern.v[0] * t
    x2 = branch_solve_pair(x1, b2)
    x4 = branch_solve_pair(x1, b4)
    seed = branch_solve_pair(x2, b3) if x3_guess is None else float(x3_guess)
    x3 = _newton(lambda z: pair_relation(z, x2), lambda z: _pair_relation_db(x2, z), seed, cfg)

    sol = expand(pattern, (x1, x2, x3, x4), (0.0, 0.0, 0.0))
    _check_residuals(residuals(pattern, sol)[:4], cfg, f"branches {(b2, b4, b3)}")
    _check_bounds(sol.delta, cfg)
    return sol


def solve_w_system(
    pattern: SignPattern,
    t: float,
    branch: str = PLUS,
    convention: Convention = Convention.LITERAL,
    cfg: SolverConfig | None = None,
    *,
    branch3: str = PLUS,
) -> DeltaAssignment:
    """Solve the two two-qubit rows with ``Delta_1 = t``; returned delta is zero."""
    cfg = cfg or SolverConfig()
    convention = Convention(convention)
    _branch(branch)
    _branch(branch3)
    t = _check_parameter(t, cfg)
    pattern = SignPattern(pattern.v, pattern.w)

    y1 = pattern.w[0] * t
    y2 = _newton(
        lambda z: pair_relation(y1, z),
        lambda z: _pair_relation_db(y1, z),
        branch_solve_pair(y1, branch),
        cfg,
    )
    if convention is Convention.LITERAL:
        f, df, seed = literal_relation, _literal_relation_db, branch_solve_literal(y1, branch3)
    else:
        f, df, seed = pair_relation, _pair_relation_db, branch_solve_pair(y1, branch3)
    y3 = _newton(lambda z: f(y1, z), lambda z: df(y1, z), seed, cfg)

    sol = expand(pattern, (0.0, 0.0, 0.0, 0.0), (y1, y2, y3))
    _check_residuals(residuals(pattern, sol, convention)[4:], cfg, f"branches {(branch, branch3)}")
    _check_bounds(sol.Delta, cfg)
    return sol


def all_v_patterns() -> list[tuple[int, ...]]:
    return list(itertools.product((1, -1), repeat=4))


def all_w_patterns() -> list[tuple[int, ...]]:
    return list(itertools.product((1, -1), repeat=3))


@dataclass(frozen=True)
class PatternResult:
    signs: tuple[int, ...]
    success: bool
    branches: tuple[str, ...] | None
    max_residual: float
    max_deviation: float
    solution: DeltaAssignment | None = None
    convention: Convention | None = None


@dataclass
class EnumerationTable:
    epsilon: float
    t: float
    v_results: list[PatternResult]
    w_results: dict[Convention, list[PatternResult]]

    @property
    def all_solved(self) -> bool:
        return all(r.success for r in self.v_results) and all(
            r.success for rows in self.w_results.values() for r in rows
        )

    def pairs(self, convention: Convention = Convention.LITERAL) -> list[dict]:
        """The 16 x 8 table of (v pattern, w pattern) combinations for one convention."""
        out = []
        for vr in self.v_results:
            for wr in self.w_results[Convention(convention)]:
                out.append(
                    {
                        "v": list(vr.signs),
                        "w": list(wr.signs),
                        "success": vr.success and wr.success,
                        "max_residual": max(vr.max_residual, wr.max_residual),
                        "max_deviation": max(vr.max_deviation, wr.max_deviation),
                    }
                )
        return out


def enumerate_all_patterns(
    cfg: SolverConfig | None = None,
    t: float = 1e-4,
    conventions: Sequence[Convention] = (Convention.LITERAL, Convention.IDENTITY_SIGNED),
) -> EnumerationTable:
    """Try every sign pattern, walking branch combinations in fixed order until one succeeds."""
    cfg = cfg or SolverConfig()
    _check_parameter(t, cfg)

    v_results = []
    for v in all_v_patterns():
        pat = SignPattern(v, (1, 1, 1))
        found = None
        for combo in itertools.product(BRANCHES, repeat=3):
            try:
                sol = solve_v_system(pat, t, combo, cfg)
            except SolverError:
                continue
            found = combo, sol
            break
        v_results.append(_pattern_result(v, pat, found, slice(0, 4), Convention.LITERAL, None))

    w_results = {}
    for conv in conventions:
        conv = Convention(conv)
        rows = []
        for w in all_w_patterns():
            pat = SignPattern((1, 1, 1, 1), w)
            found = None
            for b2, b3 in itertools.product(BRANCHES, repeat=2):
                try:
                    sol = solve_w_system(pat, t, b2, conv, cfg, branch3=b3)
                except SolverError:
                    continue
                found = (b2, b3), sol
                break
            rows.append(_pattern_result(w, pat, found, slice(4, 6), conv, conv))
        w_results[conv] = rows
    return EnumerationTable(cfg.epsilon, float(t), v_results, w_results)


def _pattern_result(signs, pat, found, rows, conv, tag) -> PatternResult:
    if found is None:
        return PatternResult(tuple(signs), False, None, math.inf, math.inf, None, tag)
    combo, sol = found
    res = residuals(pat, sol, conv)[rows]
    return PatternResult(
        tuple(signs), True, tuple(combo), max(abs(r) for r in res), sol.max_abs(), sol, tag
    )


@dataclass(frozen=True)
class FamilyPoint:
    t: float
    assignment: DeltaAssignment
    max_residual: float


@dataclass
class SolutionFamily:
    pattern: SignPattern
    convention: Convention
    branches: tuple[str, ...]
    system: str
    points: list[FamilyPoint] = field(default_factory=list)
    truncated: bool = False
    truncation_reason: str = ""

    def ts(self) -> list[float]:
        return [p.t for p in self.points]

    def reduced(self) -> list[tuple[float, ...]]:
        """Reduced coordinates of each point (x1..x4 or y1..y3 depending on the system)."""
        idx = 0 if self.system == "v" else 1
        return [reduce(self.pattern, p.assignment)[idx] for p in self.points]

    def rows(self) -> list[list[float]]:
        """CSV rows: t, the system's deviations, max residual."""
        out = []
        for p in self.points:
            devs = p.assignment.delta if self.system == "v" else p.assignment.Delta
            out.append([p.t, *devs, p.max_residual])
        return out

    def header(self) -> list[str]:
        names = ["delta1", "delta2", "delta3", "delta4"] if self.system == "v" else ["Delta1", "Delta2", "Delta3"]
        return ["t", *names, "max_residual"]


def trace_family(
    pattern: SignPattern,
    branches: Sequence[str] | None = None,
    convention: Convention = Convention.LITERAL,
    t_grid: Sequence[float] = (),
    cfg: SolverConfig | None = None,
    system: str = "v",
) -> SolutionFamily:
    """Follow a one-parameter solution family along ``t_grid``.

    For the ``v`` system each Newton solve is warm-started from the previous point's
    delta_3, rescaled by the step in t. A branch losing its real root truncates the family.
    """
    cfg = cfg or SolverConfig()
    convention = Convention(convention)
    if system not in ("v", "w"):
        raise ValueError("system must be 'v' or 'w'")
    if branches is None:
        branches = cfg.branches if system == "v" else (PLUS, PLUS)
    branches = tuple(_branch(b) for b in branches)
    if len(branches) != (3 if system == "v" else 2):
        raise ValueError(f"system {system!r} needs {3 if system == 'v' else 2} branch tags")
    grid = [float(t) for t in t_grid]
    if not grid:
        raise ValueError("t_grid is empty")
    diffs = [b - a for a, b in zip(grid, grid[1:])]
    if not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
        raise ValueError("t_grid must be strictly monotone")
    for t in grid:
        _check_parameter(t, cfg)

    fam = SolutionFamily(SignPattern(pattern.v, pattern.w), convention, branches, system)
    rows = slice(0, 4) if system == "v" else slice(4, 6)
    prev = None
    for t in grid:
        try:
            if system == "v":
                guess = None
                if prev is not None:
                    prev_t, prev_x3 = prev
                    guess = prev_x3 * (t / prev_t)
                sol = solve_v_system(fam.pattern, t, branches, cfg, x3_guess=guess)
                prev = (t, fam.pattern.v[2] * sol.delta[2])
            else:
                sol = solve_w_system(fam.pattern, t, branches[0], convention, cfg, branch3=branches[1])
        except DomainError as exc:
            fam.truncated = True
            fam.truncation_reason = str(exc)
            break
        res = residuals(fam.pattern, sol, convention)[rows]
        fam.points.append(FamilyPoint(t, sol, max(abs(r) for r in res)))
    return fam


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ys against xs (with intercept)."""
    n = len(xs)
    if n < 2:
        raise ValueError("need at least two points")
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / sxx
