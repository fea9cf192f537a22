"""
The event kernel on its own
===========================

A single-server queue built from the calendar, a resource and a bounded
queue, with arrivals drawn from a reproducible stream.
"""

from calais_cba.sim import BoundedQueue, RandomStream, Resource, Simulation, exponential, sample

sim = Simulation()
server = Resource("server", 1)
queue = BoundedQueue("line", 5)
rng = RandomStream(42, "kernel-demo")
gaps = sample(exponential(1.0), rng, 2000).cumsum()
service = iter(sample(exponential(0.8), RandomStream(42, "service"), 2000))
lost = 0


def start(job):
    server.acquire(sim.now)
    sim.schedule(next(service), done, job)


def done(job):
    server.release(sim.now)
    if queue:
        start(queue.pop(sim.now))


def arrive(k):
    global lost
    if not server.busy:
        start(k)
    elif queue.full:
        lost += 1
    else:
        queue.push(k, sim.now)


# arrivals come from a presorted stream; the calendar holds service completions
sim.feed(gaps, arrive)
sim.run(gaps[-1])
print(f"utilization {server.utilization(sim.now):.3f}")
print(f"mean queue {queue.mean_length(sim.now):.2f}, lost {lost}")
