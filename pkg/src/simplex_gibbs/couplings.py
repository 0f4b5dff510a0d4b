"""Couplings of two pair-mixing chains.

Two mechanisms are provided.  The proportional coupling feeds the same
(i, j, lam) draw to both chains; squared distance then contracts by the
factor in ``chain.contraction_factor`` in expectation and never increases
the per-coordinate gap, but it cannot make two continuous states collide
in finite time for n > 2.

The subset coupling is the collision mechanism.  Given a coordinate set S
containing i but not j, the post-step weight of S agrees across the two
chains exactly when the mixing fractions satisfy the affine relation

    lam_x = m * lam_y + delta,
    m = (y_i + y_j) / (x_i + x_j),
    delta = (sum_{l in S, l != i} (y_l - x_l)) / (x_i + x_j).

``couple_lambdas`` realizes the maximal coupling of two uniform fractions
subject to that relation: the driver fraction lam_y = u is passed through,
the candidate m * u + delta is accepted when it lands in [0, 1] (thinned by
a coin with rate min(1, m) so the accepted candidate never exceeds the
uniform target density), and on failure lam_x is drawn from the exact
complementary density by inverse cdf.  Both marginals are uniform on [0, 1]
by construction and the success probability equals ``success_probability``.

``subset_couple_step`` applies the coupled fractions to both chains and, on
success, adjusts the two updated x coordinates by at most a few ulps so that
the fsum weights of the two pieces agree with the y chain bit for bit.  A
piece that is a singleton {l} therefore leaves x_l bitwise equal to y_l,
which is what makes full coalescence exact rather than approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from simplex_gibbs.chain import (
    SimplexPoint,
    StepDraw,
    _apply_step,
    _match_fsum,
    step,
)


def success_probability(m: float, delta: float) -> float:
    """Maximal probability that lam_x = m * lam_y + delta with both uniform.

    The constraint line carries at most min(1, m) density per unit of
    driver mass, giving

        m >= 1:  max(0, min(1, (1 - delta) / m) - max(0, -delta / m))
        m <  1:  max(0, min(1, m + delta) - max(0, delta))

    The two expressions agree on m = 1 and the value is invariant under
    swapping the roles of the chains (m, delta) -> (1/m, -delta/m).
    Degenerate inputs (m <= 0 or non-finite) give probability zero.
    """
    if not (math.isfinite(m) and math.isfinite(delta)) or m <= 0.0:
        return 0.0
    if m >= 1.0:
        p = min(1.0, (1.0 - delta) / m) - max(0.0, -delta / m)
    else:
        p = min(1.0, m + delta) - max(0.0, delta)
    return max(0.0, p)


def remainder_inverse(u: float, lo: float, hi: float, factor: float) -> float:
    """Inverse cdf of the normalized density 1 - (1 - factor) * 1_[lo, hi].

    The density lives on [0, 1], equals 1 outside [lo, hi] and factor
    inside, with factor in [0, 1].  An empty or fully covering window
    degrades to the identity (plain uniform).
    """
    lo = min(max(lo, 0.0), 1.0)
    hi = min(max(hi, 0.0), 1.0)
    if hi <= lo:
        return u
    z = lo + factor * (hi - lo) + (1.0 - hi)
    if z <= 0.0:
        return u
    c = u * z
    if c < lo:
        return c
    c -= lo
    inside = factor * (hi - lo)
    if c < inside:
        return lo + c / factor
    return min(hi + (c - inside), 1.0)


@dataclass(frozen=True)
class PairCoupling:
    """Outcome of one attempted fraction coupling.

    lam_y is the driver draw, lam_x the coupled fraction (equal to
    m * lam_y + delta on success, a remainder draw otherwise).  p is the
    analytic success probability for the attempted relation.
    """

    success: bool
    lam_x: float
    lam_y: float
    m: float
    delta: float
    p: float


def couple_lambdas(
    m: float,
    delta: float,
    u: float,
    coin: float,
    aux: Callable[[], float],
) -> PairCoupling:
    """Maximal coupling of uniform fractions along lam_x = m * lam_y + delta.

    Args:
        m: slope of the relation; success impossible unless finite and > 0.
        delta: intercept of the relation.
        u: driver uniform; becomes lam_y unchanged.
        coin: thinning uniform; the candidate is kept only if
            coin <= min(1, m), which caps the accepted density at 1.
        aux: zero-arg callable yielding one uniform; invoked exactly once,
            and only when the attempt fails, to draw lam_x from the
            complementary density.

    Returns:
        PairCoupling; lam_x is marginally uniform on [0, 1] when u, coin and
        the aux draw are independent uniforms.
    """
    p = success_probability(m, delta)
    usable = math.isfinite(m) and m > 0.0 and math.isfinite(delta)
    if usable:
        cand = m * u + delta
        if 0.0 <= cand <= 1.0 and coin <= min(1.0, m):
            return PairCoupling(True, float(cand), float(u), float(m), float(delta), p)
        lo = max(0.0, min(1.0, delta))
        hi = max(0.0, min(1.0, m + delta))
        factor = 1.0 - min(1.0, 1.0 / m)
        lam_x = remainder_inverse(float(aux()), lo, hi, factor)
        return PairCoupling(False, float(lam_x), float(u), float(m), float(delta), p)
    return PairCoupling(False, float(aux()), float(u), float(m), float(delta), p)


def proportional_step_pair(
    x: SimplexPoint, y: SimplexPoint, draw: StepDraw
) -> tuple[SimplexPoint, SimplexPoint]:
    """Advance both chains with the same draw (the contraction coupling).

    For n = 2 a single shared step collides the chains exactly: both pair
    sums are the correctly rounded total, which is bitwise 1.0 for points
    with an exact unit fsum, so the split outputs are identical doubles.
    """
    return step(x, draw), step(y, draw)


# An exact-weight nudge is a rounding cleanup; refusing moves beyond this
# keeps it from silently repairing states whose piece weights genuinely
# disagree (e.g. pieces that were never tied together by earlier splits).
ENFORCE_TOL = 1e-12


def _piece_weight_nudge(xa: np.ndarray, ya: np.ndarray, piece0: list[int], k0: int) -> float | None:
    """Value for xa[k0] making fsum(xa over piece0) equal fsum(ya over piece0).

    Returns None when no nonnegative value works or the required move from
    the natural value exceeds ENFORCE_TOL.
    """
    target = math.fsum(float(ya[l]) for l in piece0)
    others = [float(xa[l]) for l in piece0 if l != k0]
    return _match_fsum(target, others, float(xa[k0]), max_move=ENFORCE_TOL)


def subset_couple_step(
    x: SimplexPoint,
    y: SimplexPoint,
    i: int,
    j: int,
    piece_i: Sequence[int],
    piece_j: Sequence[int],
    u: float,
    coin: float,
    aux: Callable[[], float],
) -> tuple[SimplexPoint, SimplexPoint, PairCoupling]:
    """Attempt the weight-matching coupling for pair (i, j) across a split.

    piece_i and piece_j are disjoint 1-based coordinate sets with
    i in piece_i and j in piece_j (the two sides of the split being layered
    at this step; their union need not be all of [n]).  On success the two
    updated x coordinates are nudged so that both piece weights match the y
    chain exactly under fsum.  The nudges are pure rounding cleanups: when
    the relation succeeded and the union's weight agrees across chains to
    rounding error, they move each coordinate by at most a few ulps.  If
    either nudge would need to move farther than ENFORCE_TOL, or would need
    a negative coordinate, the attempt is demoted to a failure and the
    unnudged states are returned.

    Returns:
        (x_next, y_next, PairCoupling).
    """
    pi = sorted({int(l) for l in piece_i})
    pj = sorted({int(l) for l in piece_j})
    if i not in pi or j not in pj:
        raise ValueError("piece_i must contain i and piece_j must contain j")
    if set(pi) & set(pj):
        raise ValueError("pieces must be disjoint")
    if pi[0] < 1 or pj[0] < 1 or max(pi[-1], pj[-1]) > x.n or x.n != y.n:
        raise ValueError("piece indices out of range")

    xv, yv = x.values, y.values
    i0, j0 = i - 1, j - 1
    s_x = float(xv[i0]) + float(xv[j0])
    s_y = float(yv[i0]) + float(yv[j0])
    if s_x > 0.0 and s_y > 0.0:
        m = s_y / s_x
        terms = [float(yv[l - 1]) for l in pi if l != i]
        terms += [-float(xv[l - 1]) for l in pi if l != i]
        delta = math.fsum(terms) / s_x
    else:
        # a degenerate pair sum leaves no usable relation; forced failure
        m = math.inf if s_x == 0.0 else 0.0
        delta = math.nan
    cpl = couple_lambdas(m, delta, u, coin, aux)

    xa = np.array(xv)
    ya = np.array(yv)
    _apply_step(xa, i0, j0, min(1.0, max(0.0, cpl.lam_x)))
    _apply_step(ya, i0, j0, min(1.0, max(0.0, cpl.lam_y)))
    if cpl.success:
        vi = _piece_weight_nudge(xa, ya, [l - 1 for l in pi], i0)
        vj = _piece_weight_nudge(xa, ya, [l - 1 for l in pj], j0)
        if vi is None or vj is None:
            cpl = replace(cpl, success=False)
        else:
            xa[i0] = vi
            xa[j0] = vj
    return SimplexPoint(xa), SimplexPoint(ya), cpl


def subset_success_lower_bound(n: int, b: float, e: float) -> float:
    """Analytic floor 1 - 2 n^(b + 1 - e) on the subset success probability.

    Valid whenever the chains satisfy the closeness and floor conditions
    checked by ``coupling_condition_monitor``.  The value is returned
    unclamped; it is vacuous (negative) when the exponent budget e is too
    small against b, and callers are expected to treat it as a plain number.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return 1.0 - 2.0 * float(n) ** (b + 1.0 - e)


@dataclass(frozen=True)
class ConditionReport:
    """Observed closeness and floor margins for a chain pair."""

    ok: bool
    distance_ok: bool
    floor_ok: bool
    sup_diff: float
    min_coord: float
    distance_bound: float
    floor_bound: float


def coupling_condition_monitor(x: SimplexPoint, y: SimplexPoint, b: float, e: float) -> ConditionReport:
    """Check sup |x - y| <= 2 n^-e and min over both chains' coords >= n^-b.

    These are the hypotheses under which ``subset_success_lower_bound``
    applies; the monitor only observes, it never alters the run.
    """
    if x.n != y.n:
        raise ValueError("dimension mismatch")
    n = x.n
    sup_diff = float(np.max(np.abs(x.values - y.values)))
    min_coord = float(min(np.min(x.values), np.min(y.values)))
    distance_bound = 2.0 * float(n) ** (-e)
    floor_bound = float(n) ** (-b)
    distance_ok = sup_diff <= distance_bound
    floor_ok = min_coord >= floor_bound
    return ConditionReport(
        ok=distance_ok and floor_ok,
        distance_ok=distance_ok,
        floor_ok=floor_ok,
        sup_diff=sup_diff,
        min_coord=min_coord,
        distance_bound=distance_bound,
        floor_bound=floor_bound,
    )
