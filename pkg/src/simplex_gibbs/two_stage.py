"""Two-stage coupled run: contraction burn-in, then schedule-driven collisions.

The coupling that certifies mixing runs in two phases.  First both chains
advance under the proportional coupling (shared pair and fraction draws)
for ceil(6 C n ln n) steps, which contracts their squared distance to
O(n^-4C) in expectation.  Second, a fresh edge schedule of length
ceil(C n ln n) is drawn up front, its split structure is computed, and the
chains run forward through it: at every marked time the weight-matching
subset coupling is attempted on the two pieces of the split, at every
other time the step is proportional.  The pass is non-Markovian only
through the schedule: each chain still makes uniform pair and fraction
draws marginally, so both remain faithful copies of the dynamics.

If the schedule is connected and every marked attempt succeeds, the final
states are bitwise identical: each coordinate's last update happens at a
marked time where its side of the split is the singleton containing it,
and the exact weight enforcement pins it to the partner chain's double.
The first failed attempt demotes the remainder of the pass to proportional
stepping; collision can then no longer be certified for that replica.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from simplex_gibbs.chain import (
    SimplexPoint,
    StepDraw,
    sample_step_draw,
    sample_uniform_simplex,
    sq_distance,
    weight,
)
from simplex_gibbs.couplings import (
    proportional_step_pair,
    subset_couple_step,
)
from simplex_gibbs.partitions import EdgeSchedule, PartitionAnalysis, analyze_schedule

# stage length = ceil(C n ln n) steps; burn-in uses BURN_MULT times that
BURN_MULT = 6


def stage_steps(n: int, C: float) -> int:
    """ceil(C n ln n), the schedule length of the collision stage."""
    if n < 2 or C <= 0:
        raise ValueError("need n >= 2 and C > 0")
    return int(math.ceil(C * n * math.log(n)))


def burn_steps(n: int, C: float) -> int:
    """ceil(6 C n ln n), the proportional burn-in preceding the stage."""
    return int(math.ceil(BURN_MULT * C * n * math.log(n)))


def burn_in_steps(n: int, d: float) -> int:
    """ceil(1.5 d n ln n): steps driving expected squared distance to 2 n^-d."""
    if n < 2 or d <= 0:
        raise ValueError("need n >= 2 and d > 0")
    return int(math.ceil(1.5 * d * n * math.log(n)))


def expected_sq_distance_bound(n: int, d: float) -> float:
    """The 2 n^-d target that ``burn_in_steps`` is calibrated against."""
    return 2.0 * float(n) ** (-d)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of a coupled-run experiment.

    C scales both stage lengths: burn-in ceil(6 C n ln n), collision stage
    ceil(C n ln n).  The exponents b, c, d, e parameterize targets and
    report-only monitors: burn-in aims at expected squared distance
    2 n^-d, the closeness monitor asks for sup difference at most 2 n^-e,
    the floor monitor for coordinates at least n^-b, and c is a spare tail
    exponent echoed into reports.  Leaving d or e as None resolves them to
    the C-scaled defaults 4C and 2C.
    """

    n: int
    C: float = 1.0
    b: float = 2.0
    c: float = 1.0
    d: float | None = None
    e: float | None = None
    replicas: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if not (math.isfinite(self.C) and self.C > 0):
            raise ValueError(f"need C > 0, got {self.C!r}")
        if self.replicas < 1:
            raise ValueError("need at least one replica")
        for name in ("b", "c", "d", "e"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ValueError(f"exponent {name} must be positive, got {v!r}")

    @property
    def burn_exponent(self) -> float:
        return 4.0 * self.C if self.d is None else self.d

    @property
    def closeness_exponent(self) -> float:
        return 2.0 * self.C if self.e is None else self.e


def proportional_run(
    x: SimplexPoint,
    y: SimplexPoint,
    steps: int,
    rng: np.random.Generator,
    z_out: list[float] | None = None,
) -> tuple[SimplexPoint, SimplexPoint]:
    """Advance both chains through shared draws for the given step count.

    When z_out is a list, the squared distance after each step is appended
    to it (one value per step).
    """
    if x.n != y.n:
        raise ValueError("dimension mismatch")
    for _ in range(steps):
        d = sample_step_draw(x.n, rng)
        x, y = proportional_step_pair(x, y, d)
        if z_out is not None:
            z_out.append(sq_distance(x, y))
    return x, y


@dataclass(frozen=True)
class MarkedAudit:
    """Record of one marked-time coupling attempt.

    weight_diff is w_x(S(s,1)) - w_y(S(s,1)) evaluated immediately after
    the step; the success path enforces it to be exactly 0.0.  The pre-step
    closeness and floor observations feed the condition monitor summaries.
    """

    time: int
    success: bool
    weight_diff: float
    m: float
    delta: float
    p: float
    piece_small_size: int
    pre_sup_diff: float
    pre_min_coord: float


@dataclass(frozen=True)
class StagePassResult:
    x: SimplexPoint
    y: SimplexPoint
    connected: bool
    all_succeeded: bool
    failed_at: int | None
    coalesced: bool
    audits: tuple[MarkedAudit, ...]


def two_stage_pass(
    x: SimplexPoint,
    y: SimplexPoint,
    schedule: EdgeSchedule,
    rng: np.random.Generator,
    analysis: PartitionAnalysis | None = None,
    z_out: list[float] | None = None,
) -> StagePassResult:
    """Run the collision stage along a fixed schedule.

    The fraction draws come from rng in time order: marked times consume a
    driver uniform and a thinning coin (plus one remainder uniform on
    failure), other times a single shared fraction.  The y chain is the
    driver; its fractions are plain uniforms throughout.

    Weight-matching attempts are made only when the schedule is connected.
    A disconnected schedule cannot certify a collision, and its components
    never tie their piece weights together, so the pass degrades to plain
    proportional stepping and reports non-collision.
    """
    if x.n != y.n or x.n != schedule.n:
        raise ValueError("dimension mismatch")
    if analysis is None:
        analysis = analyze_schedule(schedule)
    audits: list[MarkedAudit] = []
    failed_at: int | None = None
    for s in range(1, schedule.T + 1):
        i, j = schedule.pairs[s - 1]
        rec = analysis.splits.get(s) if analysis.connected else None
        if rec is not None and failed_at is None:
            pre_sup = float(np.max(np.abs(x.values - y.values)))
            pre_min = float(min(np.min(x.values), np.min(y.values)))
            u = float(rng.random())
            coin = float(rng.random())
            x, y, cpl = subset_couple_step(
                x, y, i, j, rec.piece_i, rec.piece_j, u, coin, lambda: float(rng.random())
            )
            diff = weight(rec.piece_small, x) - weight(rec.piece_small, y)
            audits.append(
                MarkedAudit(
                    time=s,
                    success=cpl.success,
                    weight_diff=diff,
                    m=cpl.m,
                    delta=cpl.delta,
                    p=cpl.p,
                    piece_small_size=len(rec.piece_small),
                    pre_sup_diff=pre_sup,
                    pre_min_coord=pre_min,
                )
            )
            if not cpl.success:
                failed_at = s
        else:
            lam = float(rng.random())
            x, y = proportional_step_pair(x, y, StepDraw(i, j, lam))
        if z_out is not None:
            z_out.append(sq_distance(x, y))
    all_ok = failed_at is None and len(audits) == len(analysis.marked)
    return StagePassResult(
        x=x,
        y=y,
        connected=analysis.connected,
        all_succeeded=all_ok,
        failed_at=failed_at,
        coalesced=x.equals_bitwise(y),
        audits=tuple(audits),
    )


@dataclass(frozen=True)
class FullRunResult:
    """One burn-in plus collision stage between a vertex start and a
    stationary start."""

    n: int
    C: float
    burn: int
    T: int
    sup_diff_after_burn: float
    stage: StagePassResult

    @property
    def coalesced(self) -> bool:
        return self.stage.coalesced

    @property
    def certified(self) -> bool:
        """Collision by mechanism: connected schedule, every attempt good."""
        return self.stage.connected and self.stage.all_succeeded


def full_coupling_run(
    n: int,
    C: float,
    rng: np.random.Generator,
    x0: SimplexPoint | None = None,
    y0: SimplexPoint | None = None,
    burn: int | None = None,
    z_out: list[float] | None = None,
) -> FullRunResult:
    """Burn in proportionally, then run the collision stage.

    x0 defaults to the first vertex (the worst natural start), y0 to an
    exact stationary draw, so a collision transfers stationarity to the x
    chain.  Draw order: burn-in step draws, then the whole stage schedule,
    then the stage fraction draws.  burn overrides the default
    ceil(6 C n ln n) burn-in length; z_out, if a list, receives the squared
    distance at every step, starting with the initial value.
    """
    if x0 is None:
        x0 = SimplexPoint.vertex(n, 1)
    if y0 is None:
        y0 = sample_uniform_simplex(n, rng)
    if burn is None:
        burn = burn_steps(n, C)
    elif burn < 0:
        raise ValueError("burn must be nonnegative")
    T = stage_steps(n, C)
    if z_out is not None:
        z_out.append(sq_distance(x0, y0))
    x, y = proportional_run(x0, y0, burn, rng, z_out=z_out)
    sup_after = float(np.max(np.abs(x.values - y.values)))
    schedule = EdgeSchedule.sample(n, T, rng)
    stage = two_stage_pass(x, y, schedule, rng, z_out=z_out)
    return FullRunResult(n=n, C=C, burn=burn, T=T, sup_diff_after_burn=sup_after, stage=stage)


def coupling_time(n: int, C: float, rng: np.random.Generator, max_attempts: int = 64) -> int:
    """Total steps until a certified collision, repeating the run as needed.

    Each attempt costs burn + T steps whether or not it collides.  Raises
    RuntimeError if max_attempts runs fail in a row (vanishingly unlikely
    for sensible C; the cap keeps bad parameters from looping forever).
    """
    block = burn_steps(n, C) + stage_steps(n, C)
    for attempt in range(1, max_attempts + 1):
        run = full_coupling_run(n, C, rng)
        if run.coalesced:
            return attempt * block
    raise RuntimeError(f"no collision in {max_attempts} attempts for n={n}, C={C}")
