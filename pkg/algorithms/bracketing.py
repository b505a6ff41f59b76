"""
Root bracketing for monotone scalar functions.

Used by the soliton module to find the shift of the half-line problem:
the bracket is grown geometrically, then handed to scipy's bisection.
"""
from __future__ import annotations

import logging
import math
from typing import Callable

from scipy.optimize import bisect

from errors import BracketError

logger = logging.getLogger(__name__)

MAX_EXPANSIONS = 200


def expand_bracket(f: Callable[[float], float], lo: float = -1.0, hi: float = 1.0,
                   growth: float = 2.0) -> tuple[float, float]:
    """
    Grow [lo, hi] until f changes sign on it.

    :pre: f is monotone on the real line, lo < hi.
    :raises BracketError: if no sign change shows up within MAX_EXPANSIONS doublings.

    :complexity:
    Best Case Complexity: O(1) f evaluations, when [lo, hi] already brackets the root.
    Worst Case Complexity: O(log(R)) f evaluations, where R is the distance to the root.
    """
    return _expand_bracket_aux(f, lo, hi, f(lo), f(hi), growth, 0)


def _expand_bracket_aux(f: Callable[[float], float], lo: float, hi: float,
                        f_lo: float, f_hi: float, growth: float, depth: int) -> tuple[float, float]:
    if math.isnan(f_lo) or math.isnan(f_hi):
        raise BracketError(f"function is undefined on [{lo}, {hi}]")
    if f_lo == 0.0 or f_hi == 0.0 or (f_lo > 0) != (f_hi > 0):
        return lo, hi
    if depth >= MAX_EXPANSIONS:
        raise BracketError(f"no sign change found after {depth} expansions, last bracket [{lo}, {hi}]")
    width = hi - lo
    # move towards the side where |f| shrinks
    if abs(f_hi) < abs(f_lo):
        new_hi = hi + growth * width
        return _expand_bracket_aux(f, hi, new_hi, f_hi, f(new_hi), growth, depth + 1)
    new_lo = lo - growth * width
    return _expand_bracket_aux(f, new_lo, lo, f(new_lo), f_lo, growth, depth + 1)


def monotone_root(f: Callable[[float], float], xtol: float, lo: float = -1.0, hi: float = 1.0) -> float:
    """ Root of a monotone f, bracketed from [lo, hi] outwards then bisected to xtol. """
    lo, hi = expand_bracket(f, lo, hi)
    logger.debug("bracket [%g, %g]", lo, hi)
    if f(lo) == 0.0:
        return lo
    if f(hi) == 0.0:
        return hi
    return bisect(f, lo, hi, xtol=xtol, maxiter=500)
