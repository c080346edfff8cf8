"""Randomized stopping policies: robustness checks, closed forms, and water filling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .distributions import DayDistribution, MASS_TOL, RENORM_TRIGGER, _check_b
from .errors import InfeasibleError, InvalidParamsError

SLACK_TOL = 1e-9  # robustness slacks are accepted down to this


@dataclass(frozen=True, eq=False)
class StoppingDistribution:
    """Probability mass function over the (randomized) buying day.

    Caches the CDF F(x) and the first moment mu(x) = sum_{t<=x} (t-1) f(t),
    which together drive every robustness computation.
    """

    days: tuple[int, ...]
    masses: tuple[float, ...]
    _days_arr: np.ndarray = field(init=False, repr=False, compare=False)
    _cum_mass: np.ndarray = field(init=False, repr=False, compare=False)
    _cum_moment: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.days:
            raise InvalidParamsError("stopping distribution has empty support")
        if len(self.days) != len(self.masses):
            raise InvalidParamsError("days and masses must have equal length")
        prev = 0
        for d in self.days:
            if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 1:
                raise InvalidParamsError(f"day {d!r} is not a positive integer")
            if d <= prev:
                raise InvalidParamsError("days must be strictly increasing")
            prev = int(d)
        masses = np.asarray(self.masses, dtype=float)
        if np.any(np.isnan(masses)) or np.any(masses < -1e-12):
            raise InvalidParamsError("masses must be nonnegative")
        masses = np.clip(masses, 0.0, None)
        total = float(masses.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidParamsError(f"masses sum to {total}, not 1")
        if abs(total - 1.0) > RENORM_TRIGGER:
            masses = masses / total
        days_arr = np.array(self.days, dtype=np.int64)
        object.__setattr__(self, "days", tuple(int(d) for d in self.days))
        object.__setattr__(self, "masses", tuple(float(m) for m in masses))
        object.__setattr__(self, "_days_arr", days_arr)
        object.__setattr__(self, "_cum_mass", np.cumsum(masses))
        object.__setattr__(self, "_cum_moment", np.cumsum(masses * (days_arr - 1)))

    @classmethod
    def from_pmf(cls, pmf: dict[int, float]) -> "StoppingDistribution":
        days = tuple(sorted(d for d, m in pmf.items() if m > 0.0))
        return cls(days=days, masses=tuple(pmf[d] for d in days))

    @property
    def support(self) -> tuple[tuple[int, float], ...]:
        return tuple(zip(self.days, self.masses))

    @property
    def max_day(self) -> int:
        return self.days[-1]

    def cdf(self, x: int | float) -> float:
        """F(x) = P[Z <= x]."""
        i = int(np.searchsorted(self._days_arr, x, side="right"))
        return float(self._cum_mass[i - 1]) if i > 0 else 0.0

    def cdf_at(self, xs: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._days_arr, xs, side="right")
        cum = np.concatenate(([0.0], self._cum_mass))
        return cum[idx]

    def first_moment(self, x: int | float | None = None) -> float:
        """mu(x) = sum over buy days t <= x of (t-1) f(t); x=None means mu(inf)."""
        if x is None:
            return float(self._cum_moment[-1])
        i = int(np.searchsorted(self._days_arr, x, side="right"))
        return float(self._cum_moment[i - 1]) if i > 0 else 0.0

    def moment_at(self, xs: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._days_arr, xs, side="right")
        cum = np.concatenate(([0.0], self._cum_moment))
        return cum[idx]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self._days_arr, size=size, p=np.asarray(self.masses))

    def to_json_dict(self, b: int | None = None, r: float | None = None,
                     objective: float | None = None) -> dict:
        out: dict = {"pmf": [[d, m] for d, m in self.support]}
        if b is not None:
            out["b"] = b
        if r is not None:
            out["R"] = r
        if objective is not None:
            out["objective"] = objective
        return out


def parse_policy(obj: dict) -> StoppingDistribution:
    """Parse a policy from a decoded ``{"pmf": [[day, mass], ...], ...}`` object."""
    if "pmf" not in obj:
        raise InvalidParamsError("policy JSON needs a 'pmf' key")
    pairs = {}
    for entry in obj["pmf"]:
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise InvalidParamsError("each pmf entry must be a [day, mass] pair")
        day, mass = entry
        mass = float(mass)
        if math.isnan(mass) or mass < 0:
            raise InvalidParamsError("masses must be nonnegative and finite")
        pairs[int(day)] = pairs.get(int(day), 0.0) + mass
    return StoppingDistribution.from_pmf(pairs)


# ---------------------------------------------------------------------------
# Piecewise-linear stopping-cost function


@dataclass(frozen=True)
class Segment:
    """g(t) = slope * t + intercept for integer days lo < t <= hi."""

    lo: int
    hi: float
    slope: float
    intercept: float

    def value(self, t: float) -> float:
        return self.slope * t + self.intercept


@dataclass(frozen=True, eq=False)
class CostFunction:
    """Expected stopping cost as consecutive linear segments plus a constant tail.

    Segments tile (0, support_end]; for t beyond the last support day the cost
    is the constant ``tail_value`` (the mean horizon).  Slopes are nonincreasing
    and lie in [0, 1]; the implicit tail slope is 0.
    """

    segments: tuple[Segment, ...]
    tail_value: float
    _his: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.segments:
            raise InvalidParamsError("cost function needs at least one segment")
        object.__setattr__(self, "_his", np.array([s.hi for s in self.segments], dtype=float))

    @property
    def support_end(self) -> int:
        return int(self.segments[-1].hi)

    def __call__(self, t: int) -> float:
        if t < 1 or int(t) != t:
            raise InvalidParamsError("cost function is defined on positive integer days")
        if t > self.support_end:
            return self.tail_value
        idx = int(np.searchsorted(self._his, t, side="left"))
        return self.segments[idx].value(t)

    def max_value(self) -> float:
        """Largest cost over all integer days (segments rise, so ends dominate)."""
        seg_max = max(s.value(s.hi) for s in self.segments)
        return max(seg_max, self.tail_value)

    def min_value(self) -> float:
        """Smallest cost over all integer days."""
        seg_min = min(s.value(s.lo + 1) for s in self.segments)
        return min(seg_min, self.tail_value)


def build_cost_function(p_hat: DayDistribution, b: int) -> CostFunction:
    """Piecewise-linear form of the expected threshold cost under ``p_hat``.

    On (d_k, d_{k+1}] the cost is a_k t + c_k with a_k the mass beyond d_k and
    c_k the rental prefix plus (b-1) a_k; past the last support day it is the
    constant mean horizon.
    """
    _check_b(b)
    days = p_hat.days
    probs = p_hat.probs
    segments = []
    prefix_weighted = 0.0
    tail_prob = 1.0
    lo = 0
    for d, q in zip(days, probs):
        segments.append(Segment(lo=lo, hi=float(d), slope=tail_prob,
                                intercept=prefix_weighted + (b - 1) * tail_prob))
        prefix_weighted += q * d
        tail_prob -= q
        lo = d
    return CostFunction(segments=tuple(segments), tail_value=p_hat.mean())


# ---------------------------------------------------------------------------
# Robustness verification


@dataclass(frozen=True)
class RobustnessReport:
    """Constraint slacks of a candidate policy at robustness level R."""

    per_day_slack: tuple[tuple[int, float], ...]
    tail_slack: float
    feasible: bool

    def worst(self) -> float:
        slacks = [s for _, s in self.per_day_slack]
        slacks.append(self.tail_slack)
        return min(slacks)

    def violated_index(self) -> int | None:
        """Day index of the worst violated constraint (0 for the tail), or None."""
        if self.feasible:
            return None
        worst_day, worst_val = 0, self.tail_slack
        for day, s in self.per_day_slack:
            if s < worst_val:
                worst_day, worst_val = day, s
        return worst_day


def check_robustness(f: StoppingDistribution, b: int, R: float) -> RobustnessReport:
    """Evaluate mu(x) + (b-x) F(x) <= (R-1) x for x < b and mu(inf) <= (R-1) b."""
    _check_b(b)
    if R <= 1:
        raise InvalidParamsError("R must exceed 1")
    xs = np.arange(1, b)
    F = f.cdf_at(xs)
    mu = f.moment_at(xs)
    slacks = (R - 1.0) * xs - (mu + (b - xs) * F)
    tail_slack = (R - 1.0) * b - f.first_moment()
    feasible = bool(tail_slack >= -SLACK_TOL and (slacks.size == 0 or slacks.min() >= -SLACK_TOL))
    return RobustnessReport(
        per_day_slack=tuple((int(x), float(s)) for x, s in zip(xs, slacks)),
        tail_slack=float(tail_slack),
        feasible=feasible,
    )


def realized_worst_ratio(f: StoppingDistribution, b: int, horizon: int) -> float:
    """Worst ratio of expected policy cost to min(x, b) over horizons up to ``horizon``.

    Uses the closed form E[C_Z(x)] = mu(x) + (b-x) F(x) + x; the ratio is
    monotone once x clears the support, so horizon = support max suffices.
    """
    _check_b(b)
    if horizon < b:
        raise InvalidParamsError("horizon must be at least b")
    xs = np.arange(1, horizon + 1)
    F = f.cdf_at(xs)
    mu = f.moment_at(xs)
    ratios = (mu + (b - xs) * F + xs) / np.minimum(xs, b)
    return float(ratios.max())


def expected_policy_cost(f: StoppingDistribution, g: CostFunction) -> float:
    """Expected stopping cost sum_z g(z) f(z)."""
    return sum(g(d) * m for d, m in zip(f.days, f.masses))


# ---------------------------------------------------------------------------
# Closed-form optimal policies


def _growth_envelope(b: int, R: float, x: int | np.ndarray):
    """(R-1) ((b/(b-1))^x - 1): the CDF ceiling enforced by the early constraints."""
    gamma = b / (b - 1.0)
    return (R - 1.0) * (gamma ** np.asarray(x, dtype=float) - 1.0)


def feasible_robustness(b: int, R: float) -> bool:
    """Whether any stopping distribution can be R-robust for this buy cost."""
    _check_b(b)
    if R <= 1:
        return False
    return bool(_growth_envelope(b, R, b) >= 1.0 - 1e-9)


def geometric_cdf(b: int, R: float) -> StoppingDistribution:
    """Stopping distribution whose CDF rides the growth envelope until it hits 1.

    Optimal whenever the stopping-cost function is nondecreasing over the
    placement range.  Requires the envelope to reach 1 by day b, i.e. R at
    least 1 + 1/((b/(b-1))^b - 1); smaller R admits no robust policy.
    """
    _check_b(b)
    if R <= 1:
        raise InvalidParamsError("R must exceed 1")
    if not feasible_robustness(b, R):
        raise InfeasibleError(f"no R-robust policy exists for b={b}, R={R}")
    cap = 1.0 - 1e-12
    x0 = 1
    while float(_growth_envelope(b, R, x0)) < cap:
        x0 += 1
    pmf: dict[int, float] = {}
    prev = 0.0
    for x in range(1, x0 + 1):
        cur = min(float(_growth_envelope(b, R, x)), 1.0) if x < x0 else 1.0
        pmf[x] = cur - prev
        prev = cur
    return StoppingDistribution.from_pmf(pmf)


def extension_condition_check(g: CostFunction, b: int, R: float, y: int) -> bool:
    """Test the sufficient condition under which the growth-envelope CDF stays optimal.

    Requires: costs nondecreasing through day y; every cost beyond y at least
    the cost at day y+1-b (checked over a finite window, since the cost is
    eventually constant); and y past the envelope-saturation threshold.
    """
    _check_b(b)
    if R <= 1:
        raise InvalidParamsError("R must exceed 1")
    if y < 1:
        raise InvalidParamsError("y must be >= 1")
    threshold = b - 1 + math.log(R / (R - 1.0)) / math.log(b / (b - 1.0))
    if y < threshold - 1e-9:
        return False
    if y + 1 - b < 1:
        return False
    for t in range(1, y):
        if g(t) > g(t + 1) + 1e-12:
            return False
    ref = g(y + 1 - b)
    window = max(g.support_end, 4 * b)
    for t in range(y + 1, y + window + 1):
        if g(t) < ref - 1e-9:
            return False
    return True


def _min_p_reaching(eval_fn, breakpoints: list[float], target: float) -> float:
    """Smallest p in [0, 1] with eval_fn(p) >= target.

    ``eval_fn`` must be continuous, nondecreasing, and affine between
    consecutive breakpoints, so the crossing is solved exactly on its piece.
    """
    bps = sorted({0.0, 1.0, *(min(max(float(x), 0.0), 1.0) for x in breakpoints)})
    prev = bps[0]
    f_prev = eval_fn(prev)
    if f_prev >= target:
        return prev
    for cur in bps[1:]:
        f_cur = eval_fn(cur)
        if f_cur >= target:
            if f_cur <= f_prev:
                return cur
            frac = (target - f_prev) / (f_cur - f_prev)
            return prev + frac * (cur - prev)
        prev, f_prev = cur, f_cur
    raise InfeasibleError("no p in [0, 1] attains the required level")


def onehot_exact(b: int, R: float, y: int) -> StoppingDistribution:
    """Exact optimal stopping distribution for a point prediction at day y.

    Below-b predictions cap the CDF at the smallest prefix level whose tight
    continuation still reaches mass 1 by day b; at-or-above-b predictions cap
    the front-loaded envelope and park the leftover mass just past y, with the
    cap chosen as the smallest level that satisfies the tail-moment budget and
    is not cheaper to exceed.
    """
    _check_b(b)
    if y < 1:
        raise InvalidParamsError("y must be >= 1")
    if R <= 1:
        raise InvalidParamsError("R must exceed 1")
    if not feasible_robustness(b, R):
        raise InfeasibleError(f"no R-robust policy exists for b={b}, R={R}")
    gamma = b / (b - 1.0)
    G = [float(_growth_envelope(b, R, x)) for x in range(0, b + 1)]

    if y <= b - 1:
        def s_y(p: float) -> float:
            return sum(min(G[x], p) for x in range(1, y + 1))

        coef = gamma ** (b - y - 1)

        def reach(p: float) -> float:
            return coef * ((R - 1.0) * (y + 1) + s_y(p)) / (b - 1.0) + (R - 1.0) * (coef - 1.0)

        p_star = _min_p_reaching(reach, G[1:y + 1], 1.0)
        s_star = s_y(p_star)
        cdf = [min(G[x], p_star) for x in range(0, y + 1)]
        for x in range(y + 1, b + 1):
            step = gamma ** (x - y - 1)
            u = step * ((R - 1.0) * (y + 1) + s_star) / (b - 1.0) + (R - 1.0) * (step - 1.0)
            cdf.append(min(u, 1.0))
            if u >= 1.0:
                break
    else:
        def phi(p: float) -> float:
            return (y - b) * p + sum(min(G[x], p) for x in range(1, b + 1))

        m = min(y - b + 1, b)
        p_cheap = min(G[m], 1.0)
        delta = max(y - (R - 1.0) * b, 0.0)
        p_star = _min_p_reaching(phi, G[1:b + 1], max(delta, phi(p_cheap)))
        cdf = [min(G[x], p_star) for x in range(0, b + 1)]
        if p_star < 1.0 - 1e-15:
            # flat at p_star through y, remaining atom just past the prediction
            pmf = {x: cdf[x] - cdf[x - 1] for x in range(1, b + 1)}
            pmf[y + 1] = 1.0 - p_star
            return StoppingDistribution.from_pmf({d: m_ for d, m_ in pmf.items() if m_ > 1e-15})

    pmf = {}
    prev = 0.0
    for x in range(1, len(cdf)):
        cur = min(cdf[x], 1.0)
        if cur - prev > 1e-15:
            pmf[x] = cur - prev
        prev = cur
    if prev < 1.0 - 1e-9:
        raise InfeasibleError("prefix construction failed to accumulate full mass")
    return StoppingDistribution.from_pmf(pmf)


# ---------------------------------------------------------------------------
# Water filling


def _segments_with_tail(g: CostFunction) -> tuple[Segment, ...]:
    tail = Segment(lo=g.support_end, hi=math.inf, slope=0.0, intercept=g.tail_value)
    return g.segments + (tail,)


def _active_end(seg: Segment, h: float) -> float:
    """Last integer day of the segment whose cost is at most h (lo if none)."""
    if seg.slope > 0.0:
        e = (h - seg.intercept) / seg.slope
        if e < seg.lo + 1:
            return seg.lo
        return min(math.floor(e + 1e-12), seg.hi)
    return seg.hi if seg.intercept <= h else seg.lo


def _fill_pass(g: CostFunction, b: int, R: float, h: float,
               record: bool) -> tuple[bool, float, float, dict[int, float] | None]:
    """Maximal mass allocation on days <= b whose cost is within level h.

    Keeps every early constraint tight: an atom at each active run's first day
    restores tightness after a gap, then a geometric step (closed form when not
    recording) rides the tight recurrence to the run's end.  Returns
    (reached_full_mass, F, mu, pmf-or-None).
    """
    gamma = 1.0 + 1.0 / (b - 1.0)
    F = 0.0
    mu = 0.0
    pmf: dict[int, float] | None = {} if record else None
    last_end = 0  # constraints are saturated through this day
    for seg in _segments_with_tail(g):
        if seg.lo >= b:
            break
        e = min(_active_end(seg, h), b)
        s_day = seg.lo + 1
        if e < s_day:
            continue
        slack = (R - 1.0) * s_day - (mu + (b - s_day) * F)
        if slack > 0.0:
            m = slack / (b - 1.0)
            # the slack form must agree with the tight-state gap formula
            alt = (R - 1.0 + F) * (s_day - last_end) / (b - 1.0)
            assert abs(m - alt) <= 1e-9 * (1.0 + alt)
            m = min(m, 1.0 - F)
            if pmf is not None and m > 0.0:
                pmf[s_day] = pmf.get(s_day, 0.0) + m
            mu += (s_day - 1.0) * m
            F += m
            if F >= 1.0 - 1e-15:
                return True, 1.0, mu, pmf
        if pmf is None:
            new_f = (F + R - 1.0) * gamma ** (e - s_day) - (R - 1.0)
            if new_f >= 1.0 - 1e-15:
                return True, 1.0, mu, None
            F = new_f
            mu = (R - 1.0) * e - (b - e) * F
        else:
            for x in range(s_day + 1, int(e) + 1):
                m = min((F + R - 1.0) / (b - 1.0), 1.0 - F)
                if m <= 0.0:
                    break
                pmf[x] = pmf.get(x, 0.0) + m
                mu += (x - 1.0) * m
                F += m
                if F >= 1.0 - 1e-15:
                    return True, 1.0, mu, pmf
        last_end = int(e)
    return False, F, mu, pmf


def _best_tail_day(g: CostFunction, b: int, h: float, t_max: float) -> int | None:
    """Cheapest day at or beyond b with cost within h and day within t_max.

    Within a segment the cost rises, so only each segment's earliest admissible
    day competes; ties in cost break toward the smaller day.
    """
    best: tuple[float, int] | None = None
    for seg in _segments_with_tail(g):
        day = max(b, seg.lo + 1)
        if day > seg.hi or day > t_max + 1e-9:
            continue
        value = seg.value(day)
        if value <= h + 1e-12:
            cand = (value, day)
            if best is None or cand < best:
                best = cand
    return best[1] if best else None


def level_feasible(g: CostFunction, b: int, R: float, h: float) -> bool:
    """Whether total mass 1 fits on days costing at most h at robustness R.

    One O(n) pass over the segments: maximal early fill, then a tail test that
    asks for an admissible day d >= b with (d - 1) * remaining-mass within the
    leftover moment budget.
    """
    _check_b(b)
    if R <= 1:
        raise InvalidParamsError("R must exceed 1")
    reached, F, mu, _ = _fill_pass(g, b, R, h, record=False)
    if reached:
        return True
    m_tail = 1.0 - F
    budget = (R - 1.0) * b - mu
    if budget < 0.0:
        return False
    t_max = 1.0 + budget / m_tail
    return _best_tail_day(g, b, h, t_max) is not None


@dataclass(frozen=True)
class WaterLevelSearch:
    """Outcome of the bisection for the minimal feasible water level."""

    level: float
    checks: int
    h_lo: float
    h_hi: float


def minimal_water_level(g: CostFunction, b: int, R: float, epsilon: float) -> WaterLevelSearch:
    """Bisect [0, max g] down to width epsilon for the least feasible level."""
    if epsilon <= 0:
        raise InvalidParamsError("epsilon must be > 0")
    h_lo = 0.0
    h_hi = g.max_value()
    checks = 0
    while h_hi - h_lo > epsilon:
        mid = 0.5 * (h_lo + h_hi)
        checks += 1
        if level_feasible(g, b, R, mid):
            h_hi = mid
        else:
            h_lo = mid
    return WaterLevelSearch(level=h_hi, checks=checks, h_lo=h_lo, h_hi=h_hi)


def _construct_at_level(g: CostFunction, b: int, R: float, h: float) -> dict[int, float] | None:
    """Materialize the maximal-fill policy at level h (None if h is infeasible)."""
    reached, F, mu, pmf = _fill_pass(g, b, R, h, record=True)
    assert pmf is not None
    if not reached:
        m_tail = 1.0 - F
        budget = (R - 1.0) * b - mu
        if budget < 0.0:
            return None
        t_max = 1.0 + budget / m_tail
        day = _best_tail_day(g, b, h, t_max)
        if day is None:
            return None
        pmf[day] = pmf.get(day, 0.0) + m_tail
    return pmf


def _candidate_days(g: CostFunction, b: int) -> list[int]:
    """Support of some optimal policy: every day up to b, plus one day per
    segment beyond b.

    Days past b carry no early constraint, so within a segment the earliest day
    dominates every later one (lower cost, lower moment); only those compete.
    """
    out = set(range(1, b + 1))
    for seg in _segments_with_tail(g):
        if seg.hi > b:
            out.add(max(b, seg.lo) + 1)
    return sorted(out)


def _lp_refine(g: CostFunction, b: int, R: float) -> StoppingDistribution | None:
    """Cost-minimal allocation over the compressed candidate-day set.

    The level-restricted fill can be beaten by policies that buy expensive
    early days purely to free up moment budget for cheap late days; this exact
    redistribution catches those cases.
    """
    days = _candidate_days(g, b)
    if not days or len(days) > 20000:
        return None
    t = np.array(days, dtype=float)
    n = len(days)
    rows = np.zeros((b, n))
    rhs = np.zeros(b)
    for x in range(1, b):
        rows[x - 1] = np.where(t <= x, (t - 1.0) + (b - x), 0.0)
        rhs[x - 1] = (R - 1.0) * x
    rows[b - 1] = t - 1.0
    rhs[b - 1] = (R - 1.0) * b
    cost = np.array([g(d) for d in days])
    res = scipy.optimize.linprog(
        cost,
        A_ub=rows,
        b_ub=rhs,
        A_eq=np.ones((1, n)),
        b_eq=np.ones(1),
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10,
                 "dual_feasibility_tolerance": 1e-10},
    )
    if not res.success:
        return None
    x = np.clip(res.x, 0.0, None)
    total = x.sum()
    if total <= 0:
        return None
    x = x / total
    pmf = {d: float(m) for d, m in zip(days, x) if m > 1e-14}
    if not pmf:
        return None
    return StoppingDistribution.from_pmf(pmf)


def water_fill(g: CostFunction, b: int, R: float,
               epsilon: float | None = None,
               exact: bool = True) -> tuple[StoppingDistribution, float]:
    """Minimal-cost R-robust stopping distribution for stopping costs ``g``.

    Binary search on the water level h finds the least level whose active days
    can hold the whole unit of mass, and the tight fill is built there.  With
    ``exact`` (the default) the fill is kept only if no redistribution over the
    candidate days beats it: restricting support to costs below the water level
    is provably suboptimal when cheap late days are moment-limited, and the
    exact redistribution recovers the true optimum in those cases.  With
    ``exact=False`` the level-restricted policy is returned as-is (the
    procedure the reference experiments report).
    """
    _check_b(b)
    if R <= 1:
        raise InvalidParamsError("R must exceed 1")
    if epsilon is not None and epsilon <= 0:
        raise InvalidParamsError("epsilon must be > 0")
    if not feasible_robustness(b, R):
        raise InfeasibleError(f"no R-robust policy exists for b={b}, R={R}")
    h_max = g.max_value()
    if epsilon is None:
        epsilon = 1e-7 * h_max
    search = minimal_water_level(g, b, R, epsilon)
    level = search.level
    pmf = _construct_at_level(g, b, R, level)
    if pmf is None:
        # the closed-form scan and the recording scan can disagree within float
        # noise exactly at the boundary; nudge upward
        for bump in (level + epsilon, h_max):
            pmf = _construct_at_level(g, b, R, bump)
            if pmf is not None:
                level = bump
                break
    if pmf is None:
        raise InfeasibleError("could not construct a policy at a feasible level")
    policy = StoppingDistribution.from_pmf(pmf)
    objective = expected_policy_cost(policy, g)
    if exact:
        refined = _lp_refine(g, b, R)
        if refined is not None:
            refined_obj = expected_policy_cost(refined, g)
            if (refined_obj < objective - 1e-10 * (1.0 + abs(objective))
                    and check_robustness(refined, b, R).feasible):
                policy, objective = refined, refined_obj
    if not check_robustness(policy, b, R).feasible:
        raise AssertionError("constructed policy failed its own robustness check")
    return policy, objective
