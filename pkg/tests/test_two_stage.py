"""Burn-in contraction, the collision stage, and full coupled runs."""

from __future__ import annotations

import math

import numpy as np
import pytest

from simplex_gibbs.chain import SimplexPoint, sample_uniform_simplex, sq_distance
from simplex_gibbs.partitions import EdgeSchedule, analyze_schedule
from simplex_gibbs.two_stage import (
    burn_in_steps,
    burn_steps,
    coupling_time,
    expected_sq_distance_bound,
    full_coupling_run,
    proportional_run,
    stage_steps,
    two_stage_pass,
)


# ------------------------------------------------------------- step counts


def test_step_count_helpers_frozen():
    assert stage_steps(16, 1.0) == 45
    assert burn_steps(16, 1.0) == 267
    assert stage_steps(2, 1.0) == 2
    assert burn_steps(64, 1.0) == 1598
    # the d-parameterized form agrees with the run's 6C at d = 4C
    assert burn_in_steps(16, 4.0) == burn_steps(16, 1.0)
    assert expected_sq_distance_bound(16, 4.0) == pytest.approx(2.0 / 65536.0)
    with pytest.raises(ValueError):
        stage_steps(1, 1.0)
    with pytest.raises(ValueError):
        burn_in_steps(4, 0.0)


def test_burn_in_hits_distance_target():
    # E[Z] after ceil(1.5 d n ln n) shared-draw steps should be under
    # 2 n^-d; the run average sits well inside, so a plain mean suffices
    rng = np.random.default_rng(400)
    n, d, reps = 8, 2.0, 300
    steps = burn_in_steps(n, d)
    acc = 0.0
    for _ in range(reps):
        x = SimplexPoint.vertex(n, 1)
        y = sample_uniform_simplex(n, rng)
        x2, y2 = proportional_run(x, y, steps, rng)
        acc += sq_distance(x2, y2)
    assert acc / reps < expected_sq_distance_bound(n, d)


def test_proportional_run_contracts():
    rng = np.random.default_rng(401)
    n = 6
    x = SimplexPoint.vertex(n, 1)
    y = sample_uniform_simplex(n, rng)
    z0 = sq_distance(x, y)
    x2, y2 = proportional_run(x, y, 60, rng)
    assert sq_distance(x2, y2) < 0.5 * z0


# ------------------------------------------------------------- stage pass


def test_stage_pass_small_connected_schedule():
    sched = EdgeSchedule(3, ((1, 2), (2, 3)))
    ana = analyze_schedule(sched)
    assert ana.connected
    rng = np.random.default_rng(402)
    outcomes = {True: 0, False: 0}
    for _ in range(300):
        x = sample_uniform_simplex(3, rng)
        y = sample_uniform_simplex(3, rng)
        res = two_stage_pass(x, y, sched, rng, ana)
        # collision certified exactly when the whole mechanism went through
        assert res.coalesced == (res.connected and res.all_succeeded)
        if res.coalesced:
            assert res.x.equals_bitwise(res.y)
            assert all(a.success and a.weight_diff == 0.0 for a in res.audits)
        outcomes[res.coalesced] += 1
    # far-apart starts both succeed and fail with this tiny schedule
    assert outcomes[True] > 0 and outcomes[False] > 0


def test_stage_pass_disconnected_schedule_never_couples():
    sched = EdgeSchedule(4, ((1, 2), (3, 4), (1, 2)))
    ana = analyze_schedule(sched)
    assert not ana.connected
    rng = np.random.default_rng(403)
    for _ in range(20):
        x = sample_uniform_simplex(4, rng)
        y = sample_uniform_simplex(4, rng)
        res = two_stage_pass(x, y, sched, rng, ana)
        assert not res.coalesced and not res.all_succeeded
        assert res.audits == ()


def test_stage_pass_dimension_mismatch():
    rng = np.random.default_rng(404)
    x = sample_uniform_simplex(4, rng)
    y = sample_uniform_simplex(5, rng)
    with pytest.raises(ValueError):
        two_stage_pass(x, y, EdgeSchedule(4, ((1, 2),)), rng)


# ------------------------------------------------------------- full runs


def test_full_run_certification_equals_bitwise_collision():
    rng = np.random.default_rng(405)
    for n in (4, 8):
        for _ in range(60):
            r = full_coupling_run(n, 1.0, rng)
            assert r.coalesced == r.certified
            if r.coalesced:
                assert r.stage.x.equals_bitwise(r.stage.y)
                assert len(r.stage.audits) == n - 1
                assert all(a.weight_diff == 0.0 for a in r.stage.audits)
                assert all(a.success for a in r.stage.audits)


def test_full_run_two_coordinates_always_collides():
    rng = np.random.default_rng(406)
    for _ in range(50):
        r = full_coupling_run(2, 1.0, rng)
        assert r.coalesced


def test_full_run_collision_rate_has_margin():
    # the acceptance gate demands > 1/2 at n=16; check a cheaper size
    # clears a stronger bar so regressions surface here first
    rng = np.random.default_rng(407)
    hits = sum(full_coupling_run(8, 1.0, rng).coalesced for _ in range(150))
    assert hits / 150 >= 0.75


def test_full_run_audit_fields_sane():
    rng = np.random.default_rng(408)
    r = full_coupling_run(8, 1.0, rng)
    assert r.burn == burn_steps(8, 1.0) and r.T == stage_steps(8, 1.0)
    assert 0.0 <= r.sup_diff_after_burn < 1.0
    for a in r.stage.audits:
        assert 1 <= a.time <= r.T
        assert 0.0 <= a.p <= 1.0
        assert a.piece_small_size >= 1
        assert a.pre_sup_diff >= 0.0 and a.pre_min_coord >= 0.0


def test_full_run_deterministic_given_seed():
    r1 = full_coupling_run(6, 1.0, np.random.default_rng(409))
    r2 = full_coupling_run(6, 1.0, np.random.default_rng(409))
    assert r1.coalesced == r2.coalesced
    assert r1.stage.x.equals_bitwise(r2.stage.x)
    assert r1.stage.y.equals_bitwise(r2.stage.y)
    assert [a.time for a in r1.stage.audits] == [a.time for a in r2.stage.audits]


def test_coupling_time_is_block_multiple():
    rng = np.random.default_rng(410)
    block = burn_steps(8, 1.0) + stage_steps(8, 1.0)
    times = [coupling_time(8, 1.0, rng) for _ in range(40)]
    assert all(t % block == 0 for t in times)
    # collision rate near 0.9 puts the median at a single block
    assert sorted(times)[len(times) // 2] == block


def test_coupling_time_gives_up_on_hopeless_cap():
    rng = np.random.default_rng(411)
    with pytest.raises(RuntimeError):
        coupling_time(16, 1.0, rng, max_attempts=0)
