import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from calais_cba.sim import (
    MINUTES_PER_YEAR,
    UNBOUNDED,
    BoundedQueue,
    Distribution,
    EventCalendar,
    InsufficientDataError,
    NoArrivalsError,
    OrderingError,
    QueueFullError,
    RandomStream,
    Resource,
    Simulation,
    StationStats,
    StatsCollector,
    WeeklyProfile,
    exponential,
    generate_arrivals,
    next_arrival,
    replications_needed,
    run_until,
    sample,
    summarize,
    triangular,
)
from calais_cba.sim.random import triangular_ppf


# -- calendar and clock ------------------------------------------------------------


def test_events_run_in_time_order_with_fifo_ties():
    sim = Simulation()
    seen = []
    for t, tag in [(5, "c"), (1, "a"), (5, "d"), (3, "b")]:
        sim.schedule_at(t, seen.append, tag)
    assert sim.run(10) == 4
    assert seen == ["a", "b", "c", "d"]
    assert sim.now == 10


def test_clock_never_runs_backwards():
    sim = Simulation()
    times = []

    def tick(k):
        times.append(sim.now)
        if k:
            sim.schedule(0.5 * k, tick, k - 1)

    sim.schedule_at(1, tick, 5)
    sim.run(100)
    assert times == sorted(times)


def test_scheduling_in_the_past_is_refused():
    cal = EventCalendar()
    cal.clock = 10.0
    with pytest.raises(OrderingError):
        cal.push(9.0, print)
    with pytest.raises(OrderingError):
        cal.push(float("nan"), print)
    sim = Simulation()
    with pytest.raises(OrderingError):
        sim.schedule(-1, print)


def test_events_after_end_time_stay_pending():
    sim = Simulation()
    sim.schedule_at(5, print)
    assert sim.run(4) == 0
    assert len(sim.calendar) == 1
    with pytest.raises(OrderingError):
        sim.run(3)


def test_feed_merges_with_calendar():
    sim = Simulation()
    seen = []
    sim.feed([1.0, 2.0, 4.0], lambda k: seen.append(("feed", k, sim.now)))
    sim.schedule_at(2.0, lambda _: seen.append(("cal", None, sim.now)))
    sim.schedule_at(3.0, lambda _: seen.append(("cal", None, sim.now)))
    sim.run(3.5)
    assert seen == [("feed", 0, 1.0), ("feed", 1, 2.0), ("cal", None, 2.0), ("cal", None, 3.0)]
    sim.run(10)
    assert seen[-1] == ("feed", 2, 4.0)


def test_feed_must_be_sorted():
    with pytest.raises(OrderingError):
        Simulation().feed([2.0, 1.0], print)


def test_run_until_drives_a_model():
    class Counter:
        def initialize(self, sim):
            self.n = 0
            for t in range(1, 11):
                sim.schedule_at(t, self.hit)

        def hit(self, _):
            self.n += 1

        def finalize(self, sim, end):
            return self.n

    assert run_until(Counter(), 5.5) == 5
    with pytest.raises(ValueError):
        run_until(Counter(), 0)


# -- random streams and variates -------------------------------------------------------


def test_streams_are_reproducible_and_independent():
    a = RandomStream(42, "shed-time", 3).uniform(5)
    assert np.array_equal(a, RandomStream(42, "shed-time", 3).uniform(5))
    assert not np.array_equal(a, RandomStream(42, "berth-time", 3).uniform(5))
    assert not np.array_equal(a, RandomStream(42, "shed-time", 4).uniform(5))
    assert not np.array_equal(a, RandomStream(43, "shed-time", 3).uniform(5))


def test_scalar_draws_follow_the_array_sequence():
    s = RandomStream(7, "x")
    scalars = [s.uniform() for _ in range(10)]
    assert scalars == pytest.approx(RandomStream(7, "x").uniform(10).tolist())


@pytest.mark.parametrize("dist", [triangular(5, 10, 25), triangular(4, 8, 15), triangular(0, 0, 3),
                                  triangular(2, 6, 6), exponential(3.5)])
def test_sample_means_within_three_sigma(dist):
    n = 10_000
    x = sample(dist, RandomStream(42, "moments"), n)
    k, p = dist.kind, dist.params
    if k == "triangular":
        a, c, b = p
        var = (a * a + b * b + c * c - a * b - a * c - b * c) / 18
    else:
        var = p[0] ** 2
    assert abs(x.mean() - dist.mean) < 3 * math.sqrt(var / n)
    assert x.min() >= (p[0] if k == "triangular" else 0)


@settings(max_examples=50)
@given(st.floats(0, 1, exclude_max=True), st.floats(0, 10), st.floats(0, 10), st.floats(0, 10))
def test_triangular_inverse_cdf_stays_in_support(u, a, b, c):
    lo, mode, hi = sorted((a, b, c))
    x = triangular_ppf(u, lo, mode, hi)
    assert lo - 1e-9 <= x <= hi + 1e-9


def test_triangular_inverse_cdf_hits_the_mode_at_its_cdf():
    assert triangular_ppf(0.25, 5, 10, 25) == pytest.approx(10.0)
    assert triangular_ppf(np.array([0.0, 1.0]), 5, 10, 25).tolist() == [5.0, 25.0]


def test_distribution_validation():
    for bad in [("triangular", (3, 1, 2)), ("exponential", (0,)), ("gamma", (1,)), ("constant", ())]:
        with pytest.raises(ValueError):
            Distribution(*bad)
    assert triangular(4, 8, 15).scaled(0.5).params == (2, 4, 7.5)


# -- arrival processes -------------------------------------------------------------


def test_constant_profile_gives_poisson_counts():
    rate = 100.0  # per hour
    t = generate_arrivals(WeeklyProfile.constant(rate), 0, 10_080, RandomStream(1, "arr"))
    mean = rate * 168
    assert abs(len(t) - mean) < 3 * math.sqrt(mean)
    assert np.all(np.diff(t) >= 0) and t[0] > 0 and t[-1] <= 10_080


def test_vectorised_arrivals_match_chained_next_arrival():
    profile = WeeklyProfile.from_daily_shape([0, 0, 1, 3] * 6, 52 * 168 * 5)
    fast = generate_arrivals(profile, 0, 3000, RandomStream(9, "arr"))
    stream, t, slow = RandomStream(9, "arr"), 0.0, []
    while True:
        t = next_arrival(profile, t, stream)
        if t > 3000:
            break
        slow.append(t)
    assert np.allclose(fast, slow, rtol=0, atol=1e-6)


def test_zero_rate_hours_receive_no_arrivals():
    shape = [0.0] * 24
    shape[8:12] = [1, 2, 2, 1]
    profile = WeeklyProfile.from_daily_shape(shape, 500_000)
    t = generate_arrivals(profile, 0, MINUTES_PER_YEAR, RandomStream(42, "arr"))
    hours = (np.floor(t / 60).astype(int)) % 24
    assert len(t) > 0 and set(np.unique(hours)) <= {8, 9, 10, 11}


@settings(max_examples=40)
@given(st.floats(0, 50_000))
def test_cumulative_inverse_round_trip(t):
    profile = WeeklyProfile.from_daily_shape([0.4] * 6 + [2] * 4 + [1] * 6 + [2] * 4 + [1] * 2 + [0.4] * 2, 900_000)
    assert profile.inverse_cumulative(profile.cumulative(t)) == pytest.approx(t, abs=1e-6)


def test_profile_normalises_to_annual_total():
    p = WeeklyProfile.from_daily_shape(np.arange(24) + 1.0, 900_000)
    assert p.cumulative(MINUTES_PER_YEAR) == pytest.approx(900_000)


def test_all_zero_profile_is_rejected():
    with pytest.raises(NoArrivalsError):
        generate_arrivals(WeeklyProfile.constant(0.0), 0, 100, RandomStream(1))
    with pytest.raises(ValueError):
        WeeklyProfile(np.ones(24))


# -- queues and resources ----------------------------------------------------------------


def test_bounded_queue_statistics():
    q = BoundedQueue("shed", 2)
    q.push("a", 0.0)
    q.push("b", 1.0)
    assert q.full
    with pytest.raises(QueueFullError):
        q.push("c", 1.5)
    assert q.pop(3.0) == "a"
    assert q.drain(4.0) == ["b"]
    # area: 1 * 1 + 2 * 2 + 1 * 1 = 6 over 4 minutes
    assert q.mean_length(4.0) == pytest.approx(1.5)
    assert q.max_length == 2 and q.entered == 2


def test_zero_capacity_queue_is_always_full():
    q = BoundedQueue("shed", 0)
    assert q.full
    assert BoundedQueue("x", None).capacity == UNBOUNDED


def test_resource_utilisation():
    r = Resource("bays", 2)
    r.acquire(0.0)
    r.acquire(5.0)
    r.release(10.0)
    r.release(10.0)
    assert not r.busy and r.served == 2
    # busy area 1*5 + 2*5 = 15 over 2 servers * 20 minutes
    assert r.utilization(20.0) == pytest.approx(15 / 40)
    with pytest.raises(RuntimeError):
        r.release(21.0)


def test_resource_capacity_enforced():
    r = Resource("units", 1)
    r.acquire(0)
    with pytest.raises(RuntimeError):
        r.acquire(1)
    assert Resource("none", 0).utilization(10) == 0.0


# -- statistics and output analysis ---------------------------------------------------------


def test_summary_uses_student_t():
    s = summarize([10, 12, 14, 16, 18, 20, 22, 24, 26, 28])
    assert s.mean == 19 and s.n == 10
    assert s.sd == pytest.approx(math.sqrt(110 / 3))
    # t(0.975, 9) = 2.2621571627...
    assert s.half_width == pytest.approx(2.2621571628 * s.sd / math.sqrt(10), rel=1e-9)
    assert s.ci == pytest.approx((s.mean - s.half_width, s.mean + s.half_width))


def test_summary_needs_two_values():
    with pytest.raises(InsufficientDataError):
        summarize([1.0])


def test_replications_needed_floor_and_growth():
    assert replications_needed([100, 101, 99, 100, 100]) == 5
    # sd 10 around mean 100: need t(n-1) * 10 / sqrt(n) <= 5 -> n = 18
    noisy = [100 + 10 * z for z in (-1.2649, -0.6325, 0.0, 0.6325, 1.2649)]
    assert np.std(noisy, ddof=1) == pytest.approx(10, rel=1e-3)
    assert replications_needed(noisy) == 18


def test_replications_needed_errors():
    with pytest.raises(ZeroDivisionError):
        replications_needed([0, 0, 0])
    with pytest.raises(InsufficientDataError):
        replications_needed([1])


def test_station_bottleneck_rules():
    busy = StationStats("shed", 3, 0.97, 100, 1.0)
    growing = StationStats("berth", 2, 0.5, 100, 1.0, mean_queue=6.0, first_half_mean_queue=2.0)
    calm = StationStats("mobile", 2, 0.5, 100, 1.0, mean_queue=0.4, first_half_mean_queue=0.1)
    assert busy.bottleneck and growing.bottleneck and not calm.bottleneck
    stats = StatsCollector(stations={"shed": busy, "mobile": calm}, created=5, disposed=4, in_flight=1)
    assert stats.bottlenecks() == ["shed"] and stats.conserved()
