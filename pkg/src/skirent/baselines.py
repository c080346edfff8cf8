"""Point-prediction-style randomized baselines adapted to distributional inputs."""
from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .distributions import DayDistribution, survival, _check_b
from .errors import InvalidParamsError, InvalidRError
from .randomized import StoppingDistribution


class BaselineKind(str, Enum):
    MAJORITY_BRANCH = "majority_branch"
    MIXTURE = "mixture"


def lambda_from_r(b: int, R: float) -> float:
    """Branch parameter matching robustness R: 1/b - log(1 - (1+1/b)/R).

    Raises InvalidRError (carrying the raw value) when the log argument is
    nonpositive or the produced parameter falls outside (0, 1].
    """
    _check_b(b)
    arg = 1.0 - (1.0 + 1.0 / b) / R
    if arg <= 0.0:
        raise InvalidRError(f"R={R} is too close to 1 + 1/b; mapping diverges", math.inf)
    lam = 1.0 / b - math.log(arg)
    if not 0.0 < lam <= 1.0:
        raise InvalidRError(f"R={R} maps to branch parameter {lam} outside (0, 1]", lam)
    return lam


def r_from_lambda(b: int, lam: float) -> float:
    """Inverse mapping: the robustness level of the branch parameter."""
    _check_b(b)
    return (1.0 + 1.0 / b) / (1.0 - math.exp(-(lam - 1.0 / b)))


def purohit_branch(b: int, lam: float, high_branch: bool,
                   rounding: str = "purohit") -> StoppingDistribution:
    """Geometric-weights branch distribution for long (y >= b) or short horizons.

    The high branch spreads over {1..k}, the low branch over {1..l}; weights
    are ((b-1)/b)^(len-i) with normalizer b(1 - (1-1/b)^len).  The default
    ``"purohit"`` rounding takes k = floor(lam*b) and l = ceil(b/lam), which is
    the source algorithm's convention and reproduces the reference consistency
    figures to four decimals; ``"ceil"``/``"floor"`` apply one rounding to both
    lengths (the documented fallbacks for the ambiguity).
    """
    _check_b(b)
    if not 0.0 < lam <= 1.0:
        raise InvalidParamsError("lambda must lie in (0, 1]")
    if rounding not in ("purohit", "ceil", "floor"):
        raise InvalidParamsError(f"unknown rounding {rounding!r}")
    raw = lam * b if high_branch else b / lam
    if rounding == "purohit":
        length = math.floor(raw + 1e-9) if high_branch else math.ceil(raw - 1e-9)
    elif rounding == "ceil":
        length = math.ceil(raw - 1e-9)
    else:
        length = math.floor(raw + 1e-9)
    length = max(1, length)
    q = (b - 1.0) / b
    weights = q ** np.arange(length - 1, -1, -1, dtype=float)
    masses = weights / (b * (1.0 - q ** length))
    return StoppingDistribution(tuple(range(1, length + 1)), tuple(masses))


def baseline_policy(p_hat: DayDistribution, b: int, R: float, kind: BaselineKind,
                    rounding: str = "purohit") -> StoppingDistribution:
    """Branch (or blend) the two point-prediction distributions by P[D >= b].

    The majority rule keeps the long-horizon branch only when that probability
    strictly exceeds 1/2; the mixture combines the branches pointwise.
    """
    kind = BaselineKind(kind)
    lam = lambda_from_r(b, R)
    p_high = survival(p_hat, b)
    high = purohit_branch(b, lam, high_branch=True, rounding=rounding)
    low = purohit_branch(b, lam, high_branch=False, rounding=rounding)
    if kind is BaselineKind.MAJORITY_BRANCH:
        return high if p_high > 0.5 else low
    days = range(1, max(high.max_day, low.max_day) + 1)
    pmf = {}
    for d in days:
        mass = p_high * _mass_at(high, d) + (1.0 - p_high) * _mass_at(low, d)
        if mass > 0.0:
            pmf[d] = mass
    return StoppingDistribution.from_pmf(pmf)


def _mass_at(f: StoppingDistribution, day: int) -> float:
    i = int(np.searchsorted(np.asarray(f.days), day))
    if i < len(f.days) and f.days[i] == day:
        return f.masses[i]
    return 0.0
