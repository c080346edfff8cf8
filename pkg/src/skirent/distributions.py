"""Finite discrete distributions over skiing days: construction, metrics, perturbation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping

import numpy as np

from .errors import EmptySupportError, InvalidParamsError

MASS_TOL = 1e-9        # accepted drift of total mass at construction
RENORM_TRIGGER = 1e-12  # drift beyond this is renormalized away exactly


@dataclass(frozen=True, eq=False)
class DayDistribution:
    """Probability distribution over positive integer horizons.

    ``days`` is strictly increasing, probabilities are nonnegative and sum to
    one (within ``MASS_TOL``; small drift is renormalized).  Instances are
    immutable and safe to share between threads.
    """

    days: tuple[int, ...]
    probs: tuple[float, ...]
    _days_arr: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)
    _day_weighted_cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.days:
            raise EmptySupportError("distribution has no support")
        if len(self.days) != len(self.probs):
            raise InvalidParamsError("days and probs must have equal length")
        prev = 0
        for d in self.days:
            if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 1:
                raise InvalidParamsError(f"day {d!r} is not a positive integer")
            if d <= prev:
                raise InvalidParamsError("days must be strictly increasing")
            prev = int(d)
        probs = np.asarray(self.probs, dtype=float)
        if np.any(np.isnan(probs)) or np.any(probs < 0):
            raise InvalidParamsError("probabilities must be nonnegative and finite")
        total = float(probs.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidParamsError(f"probabilities sum to {total}, not 1")
        if abs(total - 1.0) > RENORM_TRIGGER:
            probs = probs / total
        keep = probs > 0.0
        days = tuple(int(d) for d, k in zip(self.days, keep) if k)
        if not days:
            raise EmptySupportError("distribution has no support")
        probs = probs[keep]
        object.__setattr__(self, "days", days)
        object.__setattr__(self, "probs", tuple(float(p) for p in probs))
        object.__setattr__(self, "_days_arr", np.array(days, dtype=np.int64))
        object.__setattr__(self, "_cum", np.cumsum(probs))
        object.__setattr__(self, "_day_weighted_cum", np.cumsum(probs * self._days_arr))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "DayDistribution":
        items = sorted((int(d), float(p)) for d, p in pairs)
        merged: dict[int, float] = {}
        for d, p in items:
            merged[d] = merged.get(d, 0.0) + p
        days = tuple(merged)
        return cls(days=days, probs=tuple(merged[d] for d in days))

    @property
    def support(self) -> tuple[tuple[int, float], ...]:
        return tuple(zip(self.days, self.probs))

    @property
    def max_day(self) -> int:
        return self.days[-1]

    def prob(self, day: int) -> float:
        """Point mass at ``day`` (0 if not in the support)."""
        i = int(np.searchsorted(self._days_arr, day))
        if i < len(self.days) and self.days[i] == day:
            return self.probs[i]
        return 0.0

    def cdf(self, x: int | float) -> float:
        """P[D <= x]."""
        i = int(np.searchsorted(self._days_arr, x, side="right"))
        return float(self._cum[i - 1]) if i > 0 else 0.0

    def cdf_at(self, xs: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._days_arr, xs, side="right")
        cum = np.concatenate(([0.0], self._cum))
        return cum[idx]

    def mean(self) -> float:
        """E[D]."""
        return float(self._day_weighted_cum[-1])

    def partial_day_sum(self, t: int) -> float:
        """Sum of p(d) * d over days d < t."""
        i = int(np.searchsorted(self._days_arr, t, side="left"))
        return float(self._day_weighted_cum[i - 1]) if i > 0 else 0.0

    def to_json(self) -> str:
        return json.dumps({"atoms": [[d, p] for d, p in self.support]})


def survival(p: DayDistribution, t: int) -> float:
    """Tail probability P[D >= t]; equals 1 for t = 1 and is nonincreasing in t."""
    if t < 1:
        raise InvalidParamsError("t must be >= 1")
    return min(1.0, max(0.0, 1.0 - p.cdf(t - 1)))


def expected_opt(p: DayDistribution, b: int) -> float:
    """Expected offline optimum E[min(D, b)] for buy cost b >= 2."""
    _check_b(b)
    return p.partial_day_sum(b) + b * survival(p, b)


def wasserstein1(p: DayDistribution, q: DayDistribution) -> float:
    """W1 distance with ground metric |i - j|: sum over x of |CDF_p(x) - CDF_q(x)|."""
    hi = max(p.max_day, q.max_day)
    xs = np.arange(1, hi + 1)
    return float(np.abs(p.cdf_at(xs) - q.cdf_at(xs)).sum())


def total_variation(p: DayDistribution, q: DayDistribution) -> float:
    """Half L1 distance between the two mass functions; lies in [0, 1]."""
    days = sorted(set(p.days) | set(q.days))
    return 0.5 * sum(abs(p.prob(d) - q.prob(d)) for d in days)


def perturb_wasserstein(p: DayDistribution, eta: float, seed: int) -> DayDistribution:
    """Randomly transport mass of ``p`` with total transport cost at most ``eta``.

    Repeatedly moves a random sliver of mass from a random atom over a random
    integer shift, debiting mass * distance from the budget, until the budget
    is spent or a move cap is reached.  Deterministic for a given seed, and the
    result always satisfies W1(p, result) <= eta.
    """
    if eta < 0:
        raise InvalidParamsError("eta must be >= 0")
    if eta == 0:
        return p
    rng = np.random.default_rng(seed)
    mass = {d: m for d, m in zip(p.days, p.probs)}
    budget = float(eta)
    max_shift = max(1, math.ceil(eta))
    for _ in range(10 * len(p.days)):
        if budget <= 1e-12:
            break
        atoms = [d for d, m in mass.items() if m > 0.0]
        src = atoms[int(rng.integers(len(atoms)))]
        shift = int(rng.integers(1, max_shift + 1))
        if rng.integers(2):
            shift = -shift
        dest = max(1, src + shift)
        dist = abs(dest - src)
        if dist == 0:
            continue
        cap = min(budget / dist, mass[src])
        delta = float(rng.uniform(0.0, cap))
        if delta <= 0.0:
            continue
        mass[src] -= delta
        mass[dest] = mass.get(dest, 0.0) + delta
        budget -= delta * dist
    out = DayDistribution.from_pairs((d, m) for d, m in mass.items() if m > 0.0)
    moved = wasserstein1(p, out)
    if moved > eta + 1e-9:
        raise AssertionError(f"perturbation overshot the budget: {moved} > {eta}")
    return out


class Family(str, Enum):
    UNIFORM = "uniform"
    GAUSSIAN_DISCRETIZED = "gaussian_discretized"
    GEOMETRIC_TRUNCATED = "geometric_truncated"
    TWO_POINT = "two_point"
    ONE_HOT = "one_hot"
    CUSTOM = "custom"


@dataclass(frozen=True)
class FamilySpec:
    """A named distribution family plus the parameters needed to realize it."""

    family: Family
    params: Mapping[str, Any]


def _check_b(b: int) -> None:
    if not isinstance(b, (int, np.integer)) or isinstance(b, bool) or b < 2:
        raise InvalidParamsError(f"buy cost b must be an integer >= 2, got {b!r}")


def _need(params: Mapping[str, Any], key: str) -> Any:
    if key not in params:
        raise InvalidParamsError(f"missing parameter {key!r}")
    return params[key]


def _int_param(params: Mapping[str, Any], key: str, default: int | None = None) -> int:
    value = params.get(key, default)
    if value is None:
        raise InvalidParamsError(f"missing parameter {key!r}")
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise InvalidParamsError(f"parameter {key!r} must be an integer")
    return int(value)


def make_distribution(spec: FamilySpec) -> DayDistribution:
    """Realize a family specification as a normalized DayDistribution."""
    family = Family(spec.family)
    params = spec.params
    if family is Family.UNIFORM:
        low = _int_param(params, "low", 1)
        high = _int_param(params, "high")
        if low < 1 or high < low:
            raise InvalidParamsError("uniform needs 1 <= low <= high")
        n = high - low + 1
        return DayDistribution(tuple(range(low, high + 1)), tuple([1.0 / n] * n))
    if family is Family.GAUSSIAN_DISCRETIZED:
        mean = float(_need(params, "mean"))
        stddev = float(_need(params, "stddev"))
        if stddev <= 0:
            raise InvalidParamsError("stddev must be > 0")
        low = _int_param(params, "low", 1)
        high = _int_param(params, "high")
        if low < 1 or high < low:
            raise InvalidParamsError("gaussian needs 1 <= low <= high")
        days = np.arange(low, high + 1)
        weights = np.exp(-0.5 * ((days - mean) / stddev) ** 2)
        total = float(weights.sum())
        if total <= 0.0:
            raise EmptySupportError("all gaussian mass truncated away")
        return DayDistribution(tuple(int(d) for d in days), tuple(weights / total))
    if family is Family.GEOMETRIC_TRUNCATED:
        rate = float(_need(params, "rate"))
        if not 0.0 < rate < 1.0:
            raise InvalidParamsError("rate must lie in (0, 1)")
        low = _int_param(params, "low", 1)
        high = _int_param(params, "high")
        if low < 1 or high < low:
            raise InvalidParamsError("geometric needs 1 <= low <= high")
        days = np.arange(low, high + 1)
        weights = (1.0 - rate) ** (days - 1)
        total = float(weights.sum())
        if total <= 0.0:
            raise EmptySupportError("all geometric mass truncated away")
        return DayDistribution(tuple(int(d) for d in days), tuple(weights / total))
    if family is Family.TWO_POINT:
        atoms = _need(params, "atoms")
        if len(atoms) != 2:
            raise InvalidParamsError("two_point needs exactly two atoms")
        weight_total = sum(float(w) for _, w in atoms)
        if abs(weight_total - 1.0) > MASS_TOL:
            raise InvalidParamsError("two_point weights must sum to 1")
        return DayDistribution.from_pairs((int(d), float(w)) for d, w in atoms)
    if family is Family.ONE_HOT:
        y = _int_param(params, "y")
        if y < 1:
            raise InvalidParamsError("y must be >= 1")
        return DayDistribution((y,), (1.0,))
    if family is Family.CUSTOM:
        atoms = _need(params, "atoms")
        return DayDistribution.from_pairs((int(d), float(w)) for d, w in atoms)
    raise InvalidParamsError(f"unknown family {spec.family!r}")


def parse_distribution(source: str | Mapping[str, Any]) -> DayDistribution:
    """Parse a distribution from JSON text or an already-decoded mapping.

    Accepts either ``{"atoms": [[day, prob], ...]}`` or a family spec
    ``{"family": name, "params": {...}}``.  NaN and negative probabilities are
    rejected.
    """
    if isinstance(source, str):
        try:
            obj = json.loads(source)
        except json.JSONDecodeError as exc:
            raise InvalidParamsError(f"invalid distribution JSON: {exc}") from exc
    else:
        obj = source
    if not isinstance(obj, Mapping):
        raise InvalidParamsError("distribution JSON must be an object")
    if "atoms" in obj:
        atoms = obj["atoms"]
        if not isinstance(atoms, list) or not atoms:
            raise InvalidParamsError("atoms must be a non-empty list")
        pairs = []
        for entry in atoms:
            if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                raise InvalidParamsError("each atom must be a [day, prob] pair")
            day, prob = entry
            prob = float(prob)
            if math.isnan(prob) or prob < 0:
                raise InvalidParamsError("probabilities must be nonnegative and finite")
            pairs.append((int(day), prob))
        return DayDistribution.from_pairs(pairs)
    if "family" in obj:
        return make_distribution(FamilySpec(Family(obj["family"]), obj.get("params", {})))
    raise InvalidParamsError("distribution JSON needs an 'atoms' or 'family' key")
