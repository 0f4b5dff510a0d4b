"""Perfect sampling from the uniform law via backward coupling windows.

The sampler examines disjoint windows of past time, nearest first, each
twice the length of the one before.  Inside a window it runs a grand
coupling of n + 1 tracked chains: the n vertex chains, carried jointly as a
:class:`TransitionMatrix`, and a barycenter chain that acts as the driver.
A window has two phases.  The long opening phase applies shared draws to
every chain, shrinking the vertex images toward the driver.  The short
closing phase layers the window's final edges: at each marked time every
vertex column attempts the weight-matching fraction coupling against the
driver, all columns sharing the driver fraction and one thinning coin.

A window certifies when its closing-phase edges connect all coordinates and
every column's every attempt succeeds; the exact piece enforcement then
forces all n + 1 chains into bitwise collision, which is checked, not
assumed.  The collided point is pushed forward through the already-examined
(nearer) windows by replaying their per-step maps: replayed chains attempt
the same marked-time couplings with their own slope and intercept, and
resolve their own failures from per-block remainder draws, so the map each
window applies is a fixed function of the stream no matter when it is
replayed.  If the budget of window doublings is exhausted without a
certificate the sampler raises instead of returning a biased point.

Randomness is counter-addressed (see :mod:`.streams`): the step at absolute
time t owns block -t - 1, so a step's draws never depend on which window or
replay consults them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import SimplexPoint, StepDraw, _apply_step, _pair_table
from .couplings import PairCoupling, subset_couple_step
from .partitions import EdgeSchedule, PartitionAnalysis, analyze_schedule
from .streams import aux_uniform, iter_blocks_backward, pair_from_word, read_blocks

# first-window phase lengths in units of n * ln(n)
PHASE1_MULT = 12
PHASE2_MULT = 2

MAX_DOUBLINGS_DEFAULT = 20


def phase1_steps(n: int) -> int:
    """Opening-phase length of the first window: ceil(12 n ln n)."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return int(math.ceil(PHASE1_MULT * n * math.log(n)))


def phase2_steps(n: int) -> int:
    """Closing-phase length of the first window: ceil(2 n ln n)."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return int(math.ceil(PHASE2_MULT * n * math.log(n)))


def first_window_steps(n: int) -> int:
    return phase1_steps(n) + phase2_steps(n)


def window_geometry(n: int, k: int) -> tuple[int, int, int, int]:
    """Block range and phase split of window k (1-based).

    Returns (lo, hi, p1, p2): the window owns blocks [lo, hi), runs its
    first p1 steps as the shared opening phase and its last p2 steps as the
    coupling phase.  Window 1 covers blocks [0, T); window k covers
    [T * 2^(k-2), T * 2^(k-1)), and the phase split keeps the first
    window's 2/14 closing proportion (exactly, since the lengths double).
    """
    if k < 1:
        raise ValueError(f"window index must be >= 1, got {k}")
    t1, t2 = phase1_steps(n), phase2_steps(n)
    t = t1 + t2
    hi = t << (k - 1)
    lo = 0 if k == 1 else t << (k - 2)
    length = hi - lo
    p2 = (length * t2 + t - 1) // t
    return lo, hi, length - p2, p2


@dataclass
class TransitionMatrix:
    """Composition of shared pair-mixing steps, tracked by vertex images.

    Column v holds the current state of the chain started at vertex e_(v+1).
    Because each shared step acts linearly on the state, the matrix applied
    to any starting point reproduces (up to accumulated rounding, not
    bitwise) the chain run directly from that point with the same draws.
    Rows i and j are updated entrywise through the same exact-split
    arithmetic as a single chain, so each column IS the single-chain
    trajectory of its vertex, bit for bit.
    """

    mat: np.ndarray

    @classmethod
    def identity(cls, n: int) -> "TransitionMatrix":
        if n < 2:
            raise ValueError(f"need n >= 2, got {n}")
        return cls(np.eye(n))

    @property
    def n(self) -> int:
        return int(self.mat.shape[0])

    def shared_step(self, i: int, j: int, lam: float) -> None:
        """Apply one shared step with pair (i, j), 1-based, to all columns."""
        m = self.mat
        i0, j0 = i - 1, j - 1
        s = m[i0] + m[j0]
        a = lam * s
        b = s - a
        direct = a >= 0.5 * s
        # matches exact_split per entry: the indirect branch returns (s-b, b)
        m[i0] = np.where(direct, a, s - b)
        m[j0] = b

    def apply(self, x) -> np.ndarray:
        """Image of a starting point under the composed map (one matvec)."""
        v = x.values if isinstance(x, SimplexPoint) else np.asarray(x, dtype=np.float64)
        return self.mat @ v

    def column(self, v: int) -> np.ndarray:
        """State of the vertex-v chain (1-based), as a copy."""
        return np.array(self.mat[:, v - 1])

    def spread(self) -> float:
        """Largest coordinate range across columns; 0 iff all columns equal."""
        return float(np.max(self.mat.max(axis=1) - self.mat.min(axis=1)))

    def column_sums(self) -> np.ndarray:
        return np.array([math.fsum(self.mat[:, v]) for v in range(self.n)])


def evolve_matrix(tm: TransitionMatrix, draw: StepDraw) -> TransitionMatrix:
    """One shared step applied to a copy of the matrix.

    Rows i and j become lam * (row_i + row_j) and (1 - lam) * (row_i + row_j)
    entrywise through the exact split; all other rows are untouched.
    """
    if draw.j > tm.n:
        raise ValueError(f"pair ({draw.i}, {draw.j}) out of range for n={tm.n}")
    out = TransitionMatrix(np.array(tm.mat))
    out.shared_step(draw.i, draw.j, draw.lam)
    return out


def l1_diameter_bound(tm: TransitionMatrix) -> float:
    """Max L1 distance between two columns; bounds the map's image diameter.

    Any two starting points map into the convex hull of the columns, so
    their images' L1 distance is at most the largest pairwise column
    distance.  The identity matrix gives 2; a fully collided map gives 0.
    """
    m = tm.mat
    n = tm.n
    best = 0.0
    for a in range(n - 1):
        diffs = np.abs(m[:, a + 1 :] - m[:, a : a + 1]).sum(axis=0)
        best = max(best, float(diffs.max()))
    return best


def l1_summed_bound(tm: TransitionMatrix) -> float:
    """(1 - 1/n) times the sum of pairwise column L1 distances.

    A looser aggregate companion to :func:`l1_diameter_bound`, reported for
    comparison only; it is never the operative bound.
    """
    m = tm.mat
    n = tm.n
    total = 0.0
    for a in range(n - 1):
        total += float(np.abs(m[:, a + 1 :] - m[:, a : a + 1]).sum())
    return (1.0 - 1.0 / n) * total


@dataclass(frozen=True)
class FailureNote:
    """First failed column attempt of a window, kept for diagnostics.

    lo and hi are the clipped image interval of the attempted relation: the
    remainder law of the failed coupling is uniform outside [lo, hi] plus a
    thinned slice inside, so the two endpoints describe it completely.
    """

    time: int
    column: int
    m: float
    delta: float
    lo: float
    hi: float


@dataclass(frozen=True)
class EpochRecord:
    """Outcome of one window's tracked run.

    master and replica identify the stream, so the record alone suffices to
    replay the window.  cutoff is the closing-phase time of the first
    tracked failure (None when every attempt succeeded); replays through
    this window attempt couplings only at marked times strictly before it,
    matching what the tracked chains committed.  final is the collided
    point when the window certified.
    """

    n: int
    master: int
    replica: int
    k: int
    lo: int
    hi: int
    p1: int
    p2: int
    connected: bool
    marked: tuple[int, ...]
    cutoff: int | None
    coalesced: bool
    failure: FailureNote | None
    final: SimplexPoint | None

    def to_json_dict(self) -> dict:
        """JSON form for audit logs; replayable given the same build."""
        fail = None
        if self.failure is not None:
            # degenerate attempts can carry non-finite m/delta; keep JSON strict
            fail = {
                "time": self.failure.time,
                "column": self.failure.column,
                "m": self.failure.m if math.isfinite(self.failure.m) else None,
                "delta": self.failure.delta if math.isfinite(self.failure.delta) else None,
                "remainder_lo": self.failure.lo,
                "remainder_hi": self.failure.hi,
            }
        return {
            "n": self.n,
            "master": self.master,
            "replica": self.replica,
            "window": self.k,
            "blocks": [self.lo, self.hi],
            "phase_lengths": [self.p1, self.p2],
            "connected": self.connected,
            "marked_times": list(self.marked),
            "cutoff": self.cutoff,
            "coalesced": self.coalesced,
            "failure": fail,
            "final": None if self.final is None else self.final.to_list(),
        }


class BudgetExhaustedError(RuntimeError):
    """No window certified within the allowed number of doublings."""

    def __init__(self, n: int, master: int, replica: int, doublings: int) -> None:
        super().__init__(
            f"no collision within {doublings} window doublings "
            f"(n={n}, master={master}, replica={replica})"
        )
        self.n = n
        self.master = master
        self.replica = replica
        self.doublings = doublings


def _closing_schedule(
    n: int, master: int, replica: int, lo: int, p2: int
) -> tuple[np.ndarray, EdgeSchedule, PartitionAnalysis]:
    """Read the closing-phase blocks and derive their edge schedule.

    Closing-phase time s (1-based) owns block lo + p2 - s, so the returned
    row for time s is rows[p2 - s].
    """
    table = _pair_table(n)
    rows = read_blocks(master, replica, lo, lo + p2)
    pairs = tuple(pair_from_word(float(rows[p2 - s, 0]), table) for s in range(1, p2 + 1))
    schedule = EdgeSchedule(n, pairs)
    return rows, schedule, analyze_schedule(schedule)


def run_epoch(n: int, master: int, replica: int, k: int) -> EpochRecord:
    """Run window k's tracked chains and report whether it certified."""
    lo, hi, p1, p2 = window_geometry(n, k)
    table = _pair_table(n)
    tm = TransitionMatrix.identity(n)
    center = np.array(SimplexPoint.center(n).values)

    for _b, row in iter_blocks_backward(master, replica, lo + p2, hi):
        i, j = pair_from_word(float(row[0]), table)
        lam = float(row[1])
        tm.shared_step(i, j, lam)
        _apply_step(center, i - 1, j - 1, lam)

    rows, _schedule, analysis = _closing_schedule(n, master, replica, lo, p2)
    cutoff: int | None = None
    failure: FailureNote | None = None

    for s in range(1, p2 + 1):
        row = rows[p2 - s]
        block = lo + p2 - s
        i, j = pair_from_word(float(row[0]), table)
        u = float(row[1])
        rec = analysis.splits.get(s) if analysis.connected and cutoff is None else None
        if rec is not None:
            coin = float(row[2])
            aux = lambda b=block: aux_uniform(master, replica, b)
            cpoint = SimplexPoint(center)
            staged: list[np.ndarray] = []
            center_next: np.ndarray | None = None
            bad: PairCoupling | None = None
            bad_col = 0
            for v in range(1, n + 1):
                x2, y2, cpl = subset_couple_step(
                    SimplexPoint(tm.mat[:, v - 1]), cpoint,
                    i, j, rec.piece_i, rec.piece_j, u, coin, aux,
                )
                if not cpl.success:
                    bad, bad_col = cpl, v
                    break
                staged.append(x2.values)
                center_next = y2.values
            if bad is None:
                for v, col in enumerate(staged):
                    tm.mat[:, v] = col
                center = np.array(center_next)
                continue
            cutoff = s
            fin = math.isfinite(bad.m) and math.isfinite(bad.delta)
            failure = FailureNote(
                time=s, column=bad_col, m=bad.m, delta=bad.delta,
                lo=max(0.0, min(1.0, bad.delta)) if fin else 0.0,
                hi=max(0.0, min(1.0, bad.m + bad.delta)) if fin else 0.0,
            )
        # every non-attempt step is the shared proportional map
        tm.shared_step(i, j, u)
        _apply_step(center, i - 1, j - 1, u)

    coalesced = analysis.connected and cutoff is None
    final: SimplexPoint | None = None
    if coalesced:
        for v in range(n):
            if not np.array_equal(tm.mat[:, v], center):
                raise RuntimeError(
                    f"window {k} certificate violated: column {v + 1} "
                    "differs from the driver after full success"
                )
        final = SimplexPoint(center)
    return EpochRecord(
        n=n, master=master, replica=replica, k=k, lo=lo, hi=hi, p1=p1, p2=p2,
        connected=analysis.connected, marked=analysis.marked, cutoff=cutoff,
        coalesced=coalesced, failure=failure, final=final,
    )


def window_shared_draws(record: EpochRecord) -> list[StepDraw]:
    """The window's draw sequence under the pure shared map, in time order.

    This is the sequence every chain follows when no coupling is attempted
    (opening phase everywhere, closing phase after the cutoff or when the
    schedule is disconnected); useful for matrix-composition cross-checks.
    """
    table = _pair_table(record.n)
    draws: list[StepDraw] = []
    for _b, row in iter_blocks_backward(
        record.master, record.replica, record.lo, record.hi
    ):
        i, j = pair_from_word(float(row[0]), table)
        draws.append(StepDraw(i, j, float(row[1])))
    return draws


def propagate_through_epoch(value: SimplexPoint, record: EpochRecord) -> SimplexPoint:
    """Push a point forward through one examined window's map.

    The replayed chain faces the same per-step draws the tracked run saw:
    shared steps everywhere except marked closing-phase times before the
    window's cutoff, where it attempts the coupling against the re-derived
    driver with its own slope and intercept and, on failure, draws its
    fraction from the block's remainder uniform.  For a certified window
    the map is constant: every attempt succeeds for any simplex input (the
    success region is an intersection of half-spaces containing all the
    vertex columns), so the output is the recorded collided point.
    """
    n = record.n
    master, replica = record.master, record.replica
    if value.n != n:
        raise ValueError(f"point has n={value.n}, window has n={n}")
    table = _pair_table(n)
    zarr = np.array(value.values)
    center = np.array(SimplexPoint.center(n).values)

    for _b, row in iter_blocks_backward(master, replica, record.lo + record.p2, record.hi):
        i, j = pair_from_word(float(row[0]), table)
        lam = float(row[1])
        _apply_step(zarr, i - 1, j - 1, lam)
        _apply_step(center, i - 1, j - 1, lam)

    rows, _schedule, analysis = _closing_schedule(n, master, replica, record.lo, record.p2)
    if analysis.connected != record.connected or analysis.marked != record.marked:
        raise RuntimeError("replayed schedule disagrees with the recorded window")

    for s in range(1, record.p2 + 1):
        row = rows[record.p2 - s]
        block = record.lo + record.p2 - s
        i, j = pair_from_word(float(row[0]), table)
        u = float(row[1])
        attempt = (
            record.connected
            and (record.cutoff is None or s < record.cutoff)
            and s in analysis.splits
        )
        if attempt:
            rec = analysis.splits[s]
            x2, y2, _cpl = subset_couple_step(
                SimplexPoint(zarr), SimplexPoint(center),
                i, j, rec.piece_i, rec.piece_j,
                u, float(row[2]), lambda b=block: aux_uniform(master, replica, b),
            )
            zarr = np.array(x2.values)
            center = np.array(y2.values)
        else:
            _apply_step(zarr, i - 1, j - 1, u)
            _apply_step(center, i - 1, j - 1, u)
    return SimplexPoint(zarr)


@dataclass(frozen=True)
class CftpResult:
    """One exact draw plus the window log that produced it."""

    point: SimplexPoint
    epochs: tuple[EpochRecord, ...]

    @property
    def doublings(self) -> int:
        return len(self.epochs)

    @property
    def total_steps(self) -> int:
        """Steps spent in tracked windows (replays excluded)."""
        return sum(r.hi - r.lo for r in self.epochs)


def cftp_sample(
    n: int,
    master: int,
    replica: int,
    max_doublings: int = MAX_DOUBLINGS_DEFAULT,
    law=None,
) -> CftpResult:
    """Draw one exact uniform sample, or raise if the budget runs out.

    Deterministic in (n, master, replica): the same arguments always return
    the same bitwise point.  Each coordinate of the output has cdf
    1 - (1 - t)^(n - 1) on [0, 1].  Only the uniform mixing law is
    supported: the closing-phase fraction coupling is built on uniform
    marginals, so a non-uniform law is rejected rather than silently
    producing a wrong stationary draw.
    """
    if max_doublings < 1:
        raise ValueError("max_doublings must be >= 1")
    if law is not None and getattr(law, "kind", "uniform") != "uniform":
        raise ValueError("perfect sampling requires the uniform mixing law")
    records: list[EpochRecord] = []
    for k in range(1, max_doublings + 1):
        rec = run_epoch(n, master, replica, k)
        records.append(rec)
        if rec.coalesced:
            point = rec.final
            for earlier in records[-2::-1]:
                point = propagate_through_epoch(point, earlier)
            return CftpResult(point=point, epochs=tuple(records))
    raise BudgetExhaustedError(n, master, replica, max_doublings)
