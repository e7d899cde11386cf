"""Roads, car-following kinematics, arrival schedules, and the world."""

import math

import pytest
from hypothesis import given, strategies as st

from vcachesim.content import parse_name
from vcachesim.mobility import (
    ACTIVE,
    EXITED,
    EmptyRoadList,
    HIGHWAY_UNIFORM,
    KinematicParams,
    MobilityWorld,
    NOT_YET_ENTERED,
    RoadSegment,
    URBAN_RANDOM,
    UnknownVehicle,
    advance_kinematics,
    generate_arrivals,
)
from vcachesim.simcore import RandomSource, US_PER_SECOND

P = KinematicParams()
POOL = [parse_name(f"/traffic/{i}") for i in range(1, 11)]


def straight_road(length=1000.0):
    return RoadSegment(id="r", length_m=length)


# -- geometry ------------------------------------------------------------------


def test_world_position_follows_direction():
    road = RoadSegment(id="b", length_m=800.0, origin=(800.0, 200.0), direction=(-1.0, 0.0))
    assert road.world_position(0.0) == (800.0, 200.0)
    assert road.world_position(300.0) == (500.0, 200.0)


def test_direction_must_be_unit():
    with pytest.raises(ValueError):
        RoadSegment(id="x", length_m=10.0, direction=(1.0, 1.0))
    diag = 1.0 / math.sqrt(2.0)
    RoadSegment(id="ok", length_m=10.0, direction=(diag, diag))


def test_road_length_positive():
    with pytest.raises(ValueError):
        RoadSegment(id="x", length_m=0.0)


def test_kinematic_params_positive():
    with pytest.raises(ValueError):
        KinematicParams(accel_mps2=0.0)
    with pytest.raises(ValueError):
        KinematicParams(min_gap_m=-1.0)


# -- single-step kinematics ------------------------------------------------------


def test_free_acceleration_trapezoid_one_second():
    pos, speed = advance_kinematics(0.0, 0.0, None, 1.0, P)
    assert speed == pytest.approx(2.6)
    assert pos == pytest.approx(1.3)  # 0.5 * (0 + 2.6) * 1


def test_free_acceleration_trapezoid_two_seconds():
    pos, speed = advance_kinematics(0.0, 0.0, None, 1.0, P)
    pos, speed = advance_kinematics(pos, speed, None, 1.0, P)
    assert speed == pytest.approx(5.2)
    assert pos == pytest.approx(5.2)  # 1.3 + 0.5 * (2.6 + 5.2)


def test_speed_caps_at_maximum():
    pos, speed = advance_kinematics(0.0, 13.5, None, 1.0, P)
    assert speed == 14.0
    pos, speed = advance_kinematics(pos, speed, None, 1.0, P)
    assert speed == 14.0


def test_stops_before_stopped_leader_with_braking_distance():
    """From 14 m/s the braking distance is 14^2 / (2 * 4.5) = 21.8 m."""
    leader = (100.0, 0.0)
    pos, speed = 0.0, 14.0
    for _ in range(400):
        pos, speed = advance_kinematics(pos, speed, leader, 0.1, P)
    assert speed == pytest.approx(0.0, abs=1e-9)
    assert pos <= 100.0 - P.min_gap_m + 1e-9
    # the approach uses most of the available road: it does not stop early
    assert pos >= 100.0 - P.min_gap_m - (14.0**2) / (2 * P.decel_mps2)


def test_follower_matches_moving_leader_without_collision():
    leader_pos, leader_speed = 20.0, 5.0
    pos, speed = 0.0, 14.0
    for _ in range(300):
        leader_pos += leader_speed * 0.1
        pos, speed = advance_kinematics(pos, speed, (leader_pos, leader_speed), 0.1, P)
        assert pos <= leader_pos - P.min_gap_m + 1e-9
    assert speed == pytest.approx(leader_speed, abs=0.5)


@given(
    gap=st.floats(min_value=2.5, max_value=200.0),
    speed=st.floats(min_value=0.0, max_value=14.0),
    leader_speed=st.floats(min_value=0.0, max_value=14.0),
)
def test_single_step_never_closes_below_min_gap(gap, speed, leader_speed):
    leader_pos = 500.0
    pos, new_speed = advance_kinematics(leader_pos - gap, speed, (leader_pos, leader_speed), 0.1, P)
    assert pos <= leader_pos - P.min_gap_m + 1e-9
    assert 0.0 <= new_speed <= P.max_speed_mps


@given(
    speed=st.floats(min_value=0.0, max_value=14.0),
    dt=st.floats(min_value=0.01, max_value=1.0),
)
def test_free_step_speed_bounds(speed, dt):
    pos, new_speed = advance_kinematics(0.0, speed, None, dt, P)
    assert speed <= new_speed <= P.max_speed_mps
    assert pos >= 0.0


# -- arrival schedules -----------------------------------------------------------


def test_highway_arrivals_every_second_on_single_road():
    arrivals = generate_arrivals(
        HIGHWAY_UNIFORM, 5, 5.0, [straight_road()], POOL, RandomSource(1)
    )
    assert [a.at_us for a in arrivals] == [0, 1_000_000, 2_000_000, 3_000_000, 4_000_000]
    assert all(a.road_id == "r" for a in arrivals)
    assert [a.vehicle_id for a in arrivals] == ["v000", "v001", "v002", "v003", "v004"]


def test_urban_arrivals_sorted_within_window():
    roads = [straight_road(), RoadSegment(id="s", length_m=500.0)]
    arrivals = generate_arrivals(URBAN_RANDOM, 30, 100.0, roads, POOL, RandomSource(9))
    times = [a.at_us for a in arrivals]
    assert times == sorted(times)
    assert all(0 <= t < 100 * US_PER_SECOND for t in times)
    assert {a.road_id for a in arrivals} <= {"r", "s"}
    assert all(a.wanted in POOL for a in arrivals)


def test_arrivals_are_deterministic_per_seed():
    roads = [straight_road()]
    a1 = generate_arrivals(URBAN_RANDOM, 20, 50.0, roads, POOL, RandomSource(4))
    a2 = generate_arrivals(URBAN_RANDOM, 20, 50.0, roads, POOL, RandomSource(4))
    assert a1 == a2


def test_arrival_validation():
    with pytest.raises(ValueError):
        generate_arrivals(HIGHWAY_UNIFORM, 0, 1.0, [straight_road()], POOL, RandomSource(1))
    with pytest.raises(EmptyRoadList):
        generate_arrivals(HIGHWAY_UNIFORM, 1, 1.0, [], POOL, RandomSource(1))
    with pytest.raises(ValueError):
        generate_arrivals(HIGHWAY_UNIFORM, 1, 1.0, [straight_road()], [], RandomSource(1))
    with pytest.raises(ValueError):
        generate_arrivals(URBAN_RANDOM, 2, 0.0, [straight_road()], POOL, RandomSource(1))
    with pytest.raises(ValueError):
        generate_arrivals("platoon", 2, 1.0, [straight_road()], POOL, RandomSource(1))


def test_vehicle_ids_pad_for_large_fleets():
    arrivals = generate_arrivals(
        HIGHWAY_UNIFORM, 1200, 1200.0, [straight_road()], POOL, RandomSource(1)
    )
    assert arrivals[0].vehicle_id == "v0000"
    assert arrivals[-1].vehicle_id == "v1199"


# -- world ---------------------------------------------------------------------


def make_world(length=1000.0):
    return MobilityWorld([straight_road(length)], P)


def test_fix_distinguishes_unknown_registered_and_active():
    world = make_world()
    with pytest.raises(UnknownVehicle):
        world.fix("ghost")
    world.register("v0", "r")
    assert world.fix("v0").status == NOT_YET_ENTERED
    world.spawn("v0", "r", 14.0, 0)
    fix = world.fix("v0")
    assert fix.status == ACTIVE
    assert fix.pos_m == 0.0
    assert fix.world_xy == (0.0, 0.0)


def test_spawn_gate_requires_min_gap_behind_rear_vehicle():
    world = make_world()
    world.spawn("v0", "r", 0.0, 0)
    assert not world.can_spawn("r")
    with pytest.raises(ValueError):
        world.spawn("v1", "r", 0.0, 0)
    # let the first vehicle accelerate away
    ticks = 0
    while not world.can_spawn("r"):
        world.tick(0.1, ticks * 100_000)
        ticks += 1
    assert world.fix("v0").pos_m >= P.min_gap_m
    world.spawn("v1", "r", 0.0, ticks * 100_000)


def test_duplicate_spawn_rejected():
    world = make_world()
    world.spawn("v0", "r", 14.0, 0)
    world.tick(0.1, 100_000)
    with pytest.raises(ValueError):
        world.spawn("v0", "r", 14.0, 200_000)


def test_exit_reports_once_and_freezes_position():
    world = make_world(length=10.0)
    world.spawn("v0", "r", 14.0, 0)
    exited = []
    now = 0
    for _ in range(20):
        now += 100_000
        exited += world.tick(0.1, now)
    assert exited == ["v0"]
    fix = world.fix("v0")
    assert fix.status == EXITED
    assert fix.pos_m == 10.0  # clamped to the road end
    assert not world.is_active("v0")
    assert world.exited_total == 1
    assert world.active_on_road("r") == []


def test_exited_leader_releases_the_road():
    world = make_world(length=30.0)
    world.spawn("v0", "r", 14.0, 0)
    now = 0
    while not world.can_spawn("r"):
        now += 100_000
        world.tick(0.1, now)
    world.spawn("v1", "r", 14.0, now)
    for _ in range(40):
        now += 100_000
        world.tick(0.1, now)
    assert world.fix("v0").status == EXITED
    # the frozen end position of the exited leader must not trap followers
    assert world.fix("v1").status == EXITED
    assert world.can_spawn("r")


def test_highway_platoon_keeps_order_gaps_and_speed_limits():
    world = make_world(length=2100.0)
    now = 0
    spawned = 0
    for step in range(1, 3000):
        now = step * 100_000
        world.tick(0.1, now)
        if step % 10 == 0 and spawned < 50 and world.can_spawn("r"):
            world.spawn(f"v{spawned:03d}", "r", 14.0, now)
            spawned += 1
        order = world.active_on_road("r")
        positions = [world.fix(v).pos_m for v in order]
        speeds = [world.fix(v).speed_mps for v in order]
        assert positions == sorted(positions, reverse=True)
        for front, back in zip(positions, positions[1:]):
            assert front - back >= P.min_gap_m - 1e-9
        assert all(0.0 <= s <= P.max_speed_mps + 1e-9 for s in speeds)
    assert spawned == 50


def test_state_of_unknown_vehicle():
    world = make_world()
    with pytest.raises(UnknownVehicle):
        world.state_of("nobody")


def test_duplicate_road_ids_rejected():
    with pytest.raises(ValueError):
        MobilityWorld([straight_road(), straight_road()], P)
    with pytest.raises(EmptyRoadList):
        MobilityWorld([], P)
