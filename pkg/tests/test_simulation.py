"""End-to-end engine runs on small scenarios.

These exercise the whole pipeline (mobility, channel, protocol, ledger) and
pin the invariants the experiment metrics rely on.
"""

import re

import pytest

from vcachesim.engine import Simulation, run_simulation
from vcachesim.metrics import (
    SOURCE_LOCAL_PRECACHE,
    TARGET_ALL_RSUS,
    TARGET_SERVER,
    sample_grid,
)
from vcachesim.protocol import CachingGateway, PlainGateway, Relay, SATISFIED
from vcachesim.scenarios import highway_multi, urban_single
from vcachesim.simcore import seconds_to_us


def run_pair(cfg):
    sim = Simulation(cfg)
    return sim, sim.run()


@pytest.fixture(scope="module")
def urban_cached():
    return run_pair(urban_single(count=20, seed=3))


@pytest.fixture(scope="module")
def urban_nocache():
    return run_pair(urban_single(count=20, caching=False, seed=3))


@pytest.fixture(scope="module")
def chain():
    return run_pair(highway_multi(count=60, seed=3))


@pytest.fixture(scope="module")
def traced():
    cfg = urban_single(count=20, seed=3)
    cfg.trace = True
    return run_pair(cfg)


def test_everyone_spawns_exits_and_is_satisfied(urban_cached):
    sim, result = urban_cached
    assert result.spawned == 20
    assert result.exited == 20  # drain margin clears the roads
    assert result.satisfied == 20
    assert result.events_processed == sim.queue.processed_total


def test_one_delivery_per_satisfied_vehicle(urban_cached):
    sim, result = urban_cached
    vehicles = [record.vehicle for record in result.ledger.deliveries]
    assert len(vehicles) == len(set(vehicles)) == result.satisfied
    assert all(sim.vehicles[v].status == SATISFIED for v in vehicles)


def test_same_seed_runs_are_identical():
    cfg_a = urban_single(count=20, seed=5)
    cfg_a.trace = True
    cfg_b = urban_single(count=20, seed=5)
    cfg_b.trace = True
    _, a = run_pair(cfg_a)
    _, b = run_pair(cfg_b)
    assert a.trace_lines == b.trace_lines
    assert a.ledger.deliveries == b.ledger.deliveries
    assert a.ledger.server_events == b.ledger.server_events
    assert a.ledger.rsu_events == b.ledger.rsu_events
    assert a.events_processed == b.events_processed


def test_different_seeds_diverge():
    _, a = run_pair(urban_single(count=20, seed=5))
    _, b = run_pair(urban_single(count=20, seed=6))
    assert a.ledger.deliveries != b.ledger.deliveries


def test_simulation_instance_runs_once(urban_cached):
    sim, _ = urban_cached
    with pytest.raises(RuntimeError):
        sim.run()


def test_run_simulation_helper():
    result = run_simulation(urban_single(count=20, seed=3))
    assert result.satisfied == 20


def test_request_conservation_urban(urban_cached):
    sim, result = urban_cached
    received = sum(rsu.requests_received for rsu in sim.rsus.values())
    assert result.vehicle_requests_transmitted == received
    assert received == len(result.ledger.rsu_events)
    assert received == result.ledger.total_rsu_requests(TARGET_ALL_RSUS)


def test_request_conservation_with_relays(chain):
    sim, result = chain
    received = sum(rsu.requests_received for rsu in sim.rsus.values())
    assert result.vehicle_requests_transmitted == received
    # forwarded hops ride a separate counter and never touch the ledger
    forwarded = sum(rsu.forwarded_received for rsu in sim.rsus.values())
    assert forwarded == sim.frames_transmitted.get("request", 0) - received


def test_no_pending_work_left_behind(urban_cached, urban_nocache, chain):
    for sim, _ in (urban_cached, urban_nocache, chain):
        assert all(rsu.pending_count() == 0 for rsu in sim.rsus.values())


def test_gateway_flavor_follows_caching_flag(urban_cached, urban_nocache):
    assert isinstance(urban_cached[0].rsus["r0"], CachingGateway)
    assert isinstance(urban_nocache[0].rsus["r0"], PlainGateway)


def test_beacons_and_requests_share_the_air(urban_cached):
    sim, _ = urban_cached
    assert sim.frames_transmitted.get("beacon", 0) > 0
    assert sim.frames_transmitted.get("request", 0) > 0
    assert sim.frames_transmitted.get("response", 0) > 0


def test_zero_cdt_only_from_local_cache(urban_cached, chain):
    for _, result in (urban_cached, chain):
        for record in result.ledger.deliveries:
            assert (record.cdt_us == 0) == (record.source == SOURCE_LOCAL_PRECACHE)


def test_nocache_run_always_pays_the_server_trip(urban_nocache):
    _, result = urban_nocache
    assert result.ledger.deliveries  # sanity
    for record in result.ledger.deliveries:
        assert record.source == "server-fetch"
        assert record.cdt_us > 0
    assert result.server_fetches == result.vehicle_requests_transmitted


def test_caching_reduces_server_fetches(urban_cached, urban_nocache):
    _, cached = urban_cached
    _, plain = urban_nocache
    assert cached.server_fetches <= cached.config.catalog_size
    assert cached.server_fetches < plain.server_fetches


def test_relay_chain_seeds_upstream_caches(chain):
    sim, result = chain
    relays = [rsu for rsu in sim.rsus.values() if isinstance(rsu, Relay)]
    assert len(relays) == 2
    assert all(len(relay.cache) > 0 for relay in relays)
    # cascaded broadcasts put copies on vehicles before they ask
    assert result.ledger.deliveries_by_source().get(SOURCE_LOCAL_PRECACHE, 0) > 0
    assert result.satisfied == result.spawned


def test_server_requests_never_outrun_rsu_requests(urban_cached, urban_nocache, chain):
    for sim, result in (urban_cached, urban_nocache, chain):
        grid = sample_grid(sim.duration_us, seconds_to_us(sim.cfg.sample_interval_s))
        server = result.ledger.request_count_series(grid, TARGET_SERVER)
        rsu = result.ledger.request_count_series(grid, TARGET_ALL_RSUS)
        for (t_s, n_server), (t_r, n_rsu) in zip(server, rsu):
            assert t_s == t_r
            assert n_server <= n_rsu


TRACE_RE = re.compile(r"^t=(\d+)\.(\d{6}) (SPAWN|EXIT|TX|DELIVER|FETCH|SERVER|EVICT|ANNOUNCE) ")


def test_trace_lines_are_ordered_and_well_formed(traced):
    _, result = traced
    assert result.trace_lines, "tracing was enabled"
    last = 0
    seen = set()
    for line in result.trace_lines:
        match = TRACE_RE.match(line)
        assert match, f"malformed trace line: {line!r}"
        at_us = int(match.group(1)) * 1_000_000 + int(match.group(2))
        assert at_us >= last
        last = at_us
        seen.add(match.group(3))
    assert {"SPAWN", "EXIT", "TX", "DELIVER", "FETCH", "SERVER"} <= seen


def test_untraced_runs_carry_no_lines(urban_cached):
    assert urban_cached[1].trace_lines is None
