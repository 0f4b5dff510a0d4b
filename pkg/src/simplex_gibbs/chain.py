"""Random pairwise-mixing dynamics on the probability simplex.

The state space is the closed simplex of nonnegative n-vectors summing to
one.  One step selects an unordered coordinate pair {i, j} uniformly at
random together with a mixing fraction lam drawn from a symmetric law on
[0, 1], then replaces (x_i, x_j) by (lam * s, (1 - lam) * s) where
s = x_i + x_j.  The stationary law of this chain is uniform on the simplex.

Floating point discipline: the pair update is arranged so that the two
stored doubles sum exactly, as real numbers, to the computed pair sum
s = fl(x_i + x_j) (see ``exact_split``).  The only rounding per step is the
single addition forming s, so the exact total of the state drifts by at
most half an ulp per step and stays many orders of magnitude inside
SUM_TOL over any run length used here.  Points produced by the samplers in
this module additionally satisfy ``math.fsum(values) == 1.0`` bit for bit.
Coupled runs elsewhere in the package build on these facts to certify
coalescence and subset-weight agreement exactly instead of up to a
tolerance.

Coordinate indices are 1-based everywhere in the public API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.stats as _st

# Admission tolerance for externally supplied points.  Stepping itself is
# exactly sum-conserving, so drift can only come from the caller.
SUM_TOL = 1e-9

# Guard threshold for explicit renormalization requests; unreachable through
# exact_split stepping but kept for defensive use on foreign data.
RENORM_TOL = 1e-12

_SYMMETRY_PROBES = (0.1, 0.25, 0.5)


def exact_split(lam: float, s: float) -> tuple[float, float]:
    """Split s into (a, b) with a close to lam * s and a + b == s exactly.

    Sterbenz lemma: if doubles u, v satisfy v / 2 <= u <= v then v - u is
    computed without rounding.  The branch below arranges every subtraction
    to sit in that regime, so the two returned doubles sum to s with zero
    error as real numbers, not merely to the last bit.

    Args:
        lam: mixing fraction in [0, 1].
        s: nonnegative pair sum.

    Returns:
        Pair (a, b) of nonnegative doubles with a + b == s exactly.
    """
    a = lam * s
    if a >= 0.5 * s:
        return a, s - a
    b = s - a  # rounded once; b lies in [s/2, s], so s - b below is exact
    return s - b, b


def _match_fsum(
    target: float,
    others: list[float],
    candidate: float,
    max_move: float | None = None,
) -> float | None:
    """Find v >= 0 with math.fsum([v, *others]) == target, near candidate.

    The candidate is tried first, so a state that already matches is
    returned bitwise unchanged.  Otherwise the target is bracketed and the
    bracket bisected in double space; fsum is exactly rounded and monotone
    in v, and whenever the others are nonnegative and a nonnegative
    solution exists (consecutive v doubles move the rounded sum by at most
    one of its ulps, so no value is skipped) this finds it.  Returns None
    when the equation would require a negative v, or (with max_move set) a
    value farther than max_move from the candidate; callers use that as a
    refusal to let a rounding cleanup turn into a real correction.
    """

    def total(v: float) -> float:
        return math.fsum([v, *others])

    def admit(v: float) -> float | None:
        if v < 0.0:
            return None
        if max_move is not None and abs(v - candidate) > max_move:
            return None
        return v

    v0 = candidate if candidate >= 0.0 else 0.0
    f0 = total(v0)
    if f0 == target:
        return admit(v0)

    # bracket: find lo <= hi with total(lo) < target < total(hi)
    if f0 < target:
        lo, hi = v0, v0 + (target - f0)
        for _ in range(64):
            if hi <= lo:
                hi = math.nextafter(lo, math.inf)
            fhi = total(hi)
            if fhi == target:
                return admit(hi)
            if fhi > target:
                break
            lo, hi = hi, hi + 2.0 * (target - fhi)
        else:
            return None
    else:
        hi, lo = v0, v0 - (f0 - target)
        for _ in range(64):
            if lo >= hi:
                lo = math.nextafter(hi, -math.inf)
            if lo < 0.0:
                lo = 0.0
            flo = total(lo)
            if flo == target:
                return admit(lo)
            if flo < target:
                break
            if lo == 0.0:
                return None  # even v = 0 overshoots; no nonnegative solution
            hi, lo = lo, lo - 2.0 * (flo - target)
        else:
            return None

    # bisect doubles inside the bracket
    for _ in range(128):
        mid = lo + 0.5 * (hi - lo)
        if mid <= lo or mid >= hi:
            nb = math.nextafter(lo, hi)
            if nb != hi and total(nb) == target:
                return admit(nb)
            return None
        fm = total(mid)
        if fm == target:
            return admit(mid)
        if fm < target:
            lo = mid
        else:
            hi = mid
    return None


def _normalized_exact(values: np.ndarray) -> np.ndarray:
    """Scale values to the simplex and nudge one coordinate so fsum == 1.0."""
    v = np.asarray(values, dtype=np.float64)
    total = math.fsum(v.tolist())
    if not math.isfinite(total) or total <= 0.0:
        raise ValueError(f"cannot normalize values with sum {total}")
    v = v / total
    k = int(np.argmax(v))
    others = np.delete(v, k).tolist()
    adj = _match_fsum(1.0, others, float(v[k]))
    if adj is None:
        raise ValueError("normalization failed to reach an exact unit sum")
    v[k] = adj
    return v


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    """Immutable point on the closed probability simplex.

    values must be a length n >= 2 vector of nonnegative finite doubles whose
    fsum lies within SUM_TOL of one.  The array is copied and frozen.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] < 2:
            raise ValueError("a simplex point needs at least two coordinates")
        if not np.all(np.isfinite(v)):
            raise ValueError("simplex coordinates must be finite")
        if np.any(v < 0.0):
            raise ValueError("simplex coordinates must be nonnegative")
        total = math.fsum(v.tolist())
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"coordinates sum to {total!r}, outside 1 +/- {SUM_TOL}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def vertex(cls, n: int, k: int = 1) -> "SimplexPoint":
        """Vertex e_k of the n-simplex (1-based k)."""
        if not 1 <= k <= n:
            raise ValueError(f"vertex index {k} out of range for n={n}")
        v = np.zeros(n)
        v[k - 1] = 1.0
        return cls(v)

    @classmethod
    def center(cls, n: int) -> "SimplexPoint":
        """Barycenter (1/n, ..., 1/n), nudged to an exact unit fsum."""
        return cls(_normalized_exact(np.full(n, 1.0 / n)))

    @classmethod
    def from_values(cls, values) -> "SimplexPoint":
        return cls(np.asarray(values, dtype=np.float64))

    def to_list(self) -> list[float]:
        """JSON form: a plain array of n doubles."""
        return [float(t) for t in self.values]

    def equals_bitwise(self, other: "SimplexPoint") -> bool:
        return self.n == other.n and bool(np.array_equal(self.values, other.values))


@dataclass(frozen=True)
class StepDraw:
    """One step's randomness: coordinate pair 1 <= i < j and fraction lam."""

    i: int
    j: int
    lam: float

    def __post_init__(self) -> None:
        if not (isinstance(self.i, (int, np.integer)) and isinstance(self.j, (int, np.integer))):
            raise ValueError("pair indices must be integers")
        if not 1 <= self.i < self.j:
            raise ValueError(f"need 1 <= i < j, got i={self.i}, j={self.j}")
        if not (math.isfinite(self.lam) and 0.0 <= self.lam <= 1.0):
            raise ValueError(f"lam must lie in [0, 1], got {self.lam!r}")


@dataclass(frozen=True)
class LambdaLaw:
    """Symmetric law on [0, 1] for the mixing fraction.

    Supported kinds are the uniform law and Beta(a, a).  The cdf satisfies
    F(x) = 1 - F(1 - x); this is spot-checked on construction.  Attributes
    used by the experiment reports:

      * lambda_sq: E[lam^2] under the law.
      * cdf_second_sup: sup |F''| over the open interval (infinite for
        Beta(a, a) with a < 2, a != 1, whose density derivative blows up).
      * rate_constant: cdf_second_sup / (1 - 2 * lambda_sq), reported but
        never asserted against.
    """

    kind: str = "uniform"
    a: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "beta"):
            raise ValueError(f"unknown lambda law kind {self.kind!r}")
        if self.kind == "beta":
            if self.a is None or not (math.isfinite(self.a) and self.a > 0):
                raise ValueError("beta law needs a shape a > 0")
        for x in _SYMMETRY_PROBES:
            if abs(self.cdf(x) - (1.0 - self.cdf(1.0 - x))) > 1e-9:
                raise ValueError("lambda law cdf is not symmetric about 1/2")

    @classmethod
    def uniform(cls) -> "LambdaLaw":
        return cls("uniform")

    @classmethod
    def beta(cls, a: float) -> "LambdaLaw":
        return cls("beta", float(a))

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind == "uniform":
            return rng.random() if size is None else rng.random(size)
        return rng.beta(self.a, self.a) if size is None else rng.beta(self.a, self.a, size)

    def from_uniform(self, u):
        """Deterministic inverse-cdf transform of a uniform variate."""
        if self.kind == "uniform":
            return u
        return _st.beta.ppf(u, self.a, self.a)

    def cdf(self, x):
        if self.kind == "uniform":
            return np.clip(x, 0.0, 1.0)
        return _st.beta.cdf(x, self.a, self.a)

    @property
    def lambda_sq(self) -> float:
        """E[lam^2]; 1/3 for uniform, (a + 1) / (2 (2a + 1)) for Beta(a, a)."""
        if self.kind == "uniform":
            return 1.0 / 3.0
        return (self.a + 1.0) / (2.0 * (2.0 * self.a + 1.0))

    @property
    def cdf_second_sup(self) -> float:
        if self.kind == "uniform" or self.a == 1.0:
            return 0.0
        a = self.a
        if a < 2.0:
            # the density derivative is unbounded near the endpoints
            return math.inf
        # |F''| = |f'| with f'(x) = (a-1)(1-2x) x^(a-2) (1-x)^(a-2) / B(a, a);
        # evaluate on a dense grid, endpoints approached closely
        x = np.linspace(1e-7, 1.0 - 1e-7, 20001)
        dens_deriv = (
            (a - 1.0)
            * (1.0 - 2.0 * x)
            * x ** (a - 2.0)
            * (1.0 - x) ** (a - 2.0)
            / math.exp(_betaln(a))
        )
        return float(np.max(np.abs(dens_deriv)))

    @property
    def rate_constant(self) -> float:
        denom = 1.0 - 2.0 * self.lambda_sq
        if denom <= 0.0:
            return math.inf
        return self.cdf_second_sup / denom


def _betaln(a: float) -> float:
    return 2.0 * math.lgamma(a) - math.lgamma(2.0 * a)


@lru_cache(maxsize=64)
def _pair_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based (i, j) arrays enumerating the n(n-1)/2 unordered pairs."""
    ii, jj = np.triu_indices(n, k=1)
    return ii.astype(np.int64), jj.astype(np.int64)


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def sample_step_draw(n: int, rng: np.random.Generator, law: LambdaLaw | None = None) -> StepDraw:
    """Draw one step's randomness: a uniform unordered pair and a law draw.

    Args:
        n: dimension, n >= 2.
        rng: numpy Generator.
        law: mixing law; uniform by default.

    Returns:
        StepDraw with 1-based indices i < j.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    law = law if law is not None else LambdaLaw.uniform()
    ii, jj = _pair_table(n)
    idx = int(rng.integers(0, pair_count(n)))
    return StepDraw(int(ii[idx]) + 1, int(jj[idx]) + 1, float(law.sample(rng)))


def _apply_step(arr: np.ndarray, i0: int, j0: int, lam: float) -> None:
    """In-place pair update on a raw array, 0-based indices."""
    s = arr[i0] + arr[j0]
    a, b = exact_split(lam, s)
    arr[i0] = a
    arr[j0] = b


def step(x: SimplexPoint, draw: StepDraw) -> SimplexPoint:
    """Apply one pair-mixing step.

    The updated pair is an exact split of the computed sum s = fl(x_i + x_j):
    the two new coordinates sum to s with zero error.
    """
    if draw.j > x.n:
        raise ValueError(f"pair ({draw.i}, {draw.j}) out of range for n={x.n}")
    arr = np.array(x.values)
    _apply_step(arr, draw.i - 1, draw.j - 1, draw.lam)
    return SimplexPoint(arr)


def evolve(
    x: SimplexPoint,
    steps: int,
    rng: np.random.Generator,
    law: LambdaLaw | None = None,
) -> SimplexPoint:
    """Run the chain for a number of steps and return the final point."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    law = law if law is not None else LambdaLaw.uniform()
    n = x.n
    ii, jj = _pair_table(n)
    c = pair_count(n)
    arr = np.array(x.values)
    for _ in range(steps):
        idx = int(rng.integers(0, c))
        _apply_step(arr, int(ii[idx]), int(jj[idx]), float(law.sample(rng)))
    return SimplexPoint(arr)


def sample_uniform_simplex(n: int, rng: np.random.Generator) -> SimplexPoint:
    """Exact draw from the uniform law on the simplex.

    Normalized independent standard exponentials, nudged by at most one ulp
    on the largest coordinate so that fsum(values) == 1.0 exactly.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    g = rng.exponential(size=n)
    while math.fsum(g.tolist()) <= 0.0:  # unreachable in practice, defensive
        g = rng.exponential(size=n)
    return SimplexPoint(_normalized_exact(g))


def _weight_arr(values: np.ndarray, idx0) -> float:
    """fsum of values over 0-based indices; order-independent and exact."""
    return math.fsum(float(values[k]) for k in idx0)


def weight(S, x: SimplexPoint) -> float:
    """Sum of coordinates over the 1-based index set S, exactly rounded.

    Computed with math.fsum, so the result does not depend on the iteration
    order of S; two point/set pairs with equal exact sums report bitwise
    equal weights.
    """
    idx = sorted({int(k) for k in S})
    if idx and (idx[0] < 1 or idx[-1] > x.n):
        raise ValueError(f"subset indices out of range for n={x.n}")
    return _weight_arr(x.values, [k - 1 for k in idx])


def sq_distance(x: SimplexPoint, y: SimplexPoint) -> float:
    """Squared euclidean distance between two points of equal dimension."""
    if x.n != y.n:
        raise ValueError("dimension mismatch")
    d = x.values - y.values
    return float(np.dot(d, d))


def contraction_factor(n: int, lambda_sq: float = 1.0 / 3.0) -> float:
    """One-step contraction of E[squared distance] under shared-draw coupling.

    For the uniform law this equals 1 - 2/(3(n-1)) - 2/(3n(n-1)); the
    general-law form 1 - 2/n + 4 E[lam^2] (n-2) / (n (n-1)) agrees with it
    at E[lam^2] = 1/3 and is exposed for reporting under other laws.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return 1.0 - 2.0 / n + 4.0 * lambda_sq * (n - 2) / (n * (n - 1.0))


@dataclass(frozen=True, eq=False)
class Composition:
    """Integer composition: M indistinguishable balls in n labeled boxes."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.counts, dtype=np.int64)
        if c.ndim != 1 or c.shape[0] < 2:
            raise ValueError("a composition needs at least two boxes")
        if np.any(c < 0):
            raise ValueError("ball counts must be nonnegative")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def normalized(self) -> np.ndarray:
        """Counts scaled by the total (a point on the simplex when total > 0)."""
        t = self.total
        if t == 0:
            raise ValueError("cannot normalize an empty composition")
        return self.counts / t


def discrete_step(c: Composition, i: int, j: int, rng: np.random.Generator) -> Composition:
    """Discrete analogue of one step: rebalance boxes i and j binomially.

    The pooled count m = c_i + c_j is redistributed as
    c_i' ~ Binomial(m, 1/2), c_j' = m - c_i' (each pooled ball flips a fair
    coin for its side).  Sampling is exact, never a normal approximation,
    and the total is conserved exactly by integer arithmetic.
    """
    if i == j:
        raise ValueError("need two distinct boxes")
    if not (1 <= i <= c.n and 1 <= j <= c.n):
        raise ValueError(f"pair ({i}, {j}) out of range for n={c.n}")
    m = int(c.counts[i - 1] + c.counts[j - 1])
    new_i = int(rng.binomial(m, 0.5)) if m > 0 else 0
    out = np.array(c.counts)
    out[i - 1] = new_i
    out[j - 1] = m - new_i
    return Composition(out)
