"""Broker contract: ordering, conservation, backpressure, close semantics."""

import threading
import time

import pytest

from threatlight.bus import Closed, EventBus, TopicUnknown


def make_bus(*topics, capacity=10_000):
    bus = EventBus()
    for t in topics:
        bus.create_topic(t, capacity)
    return bus


def test_unknown_topic():
    bus = make_bus("a")
    with pytest.raises(TopicUnknown):
        bus.publish("missing", 1)
    with pytest.raises(TopicUnknown):
        bus.subscribe("missing")


def test_basic_delivery_order():
    bus = make_bus("t")
    sub = bus.subscribe("t")
    for i in range(50):
        bus.publish("t", i)
    assert [sub.get(timeout=1) for _ in range(50)] == list(range(50))


def test_no_delivery_before_subscribe():
    bus = make_bus("t")
    bus.publish("t", "early")
    sub = bus.subscribe("t")
    bus.publish("t", "late")
    assert sub.get(timeout=1) == "late"
    assert sub.qsize() == 0


def test_fanout_to_all_subscribers():
    bus = make_bus("t")
    subs = [bus.subscribe("t") for _ in range(3)]
    bus.publish("t", "x")
    assert all(s.get(timeout=1) == "x" for s in subs)


def test_multi_topic_subscription():
    bus = make_bus("a", "b")
    sub = bus.subscribe("a", "b")
    bus.publish("a", 1)
    bus.publish("b", 2)
    got = {sub.get(timeout=1), sub.get(timeout=1)}
    assert got == {1, 2}


def test_per_publisher_fifo_under_concurrency():
    # spec-scale: 4 publishers x 10,000 tagged messages each
    bus = make_bus("t", capacity=50_000)
    sub = bus.subscribe("t", capacity=50_000)
    n_pub, n_msg = 4, 10_000

    def publisher(tag):
        for i in range(n_msg):
            bus.publish("t", (tag, i))

    threads = [threading.Thread(target=publisher, args=(t,)) for t in range(n_pub)]
    for t in threads:
        t.start()
    seen = {tag: -1 for tag in range(n_pub)}
    for _ in range(n_pub * n_msg):
        tag, i = sub.get(timeout=10)
        assert i == seen[tag] + 1, f"publisher {tag} out of order"
        seen[tag] = i
    for t in threads:
        t.join()
    assert all(last == n_msg - 1 for last in seen.values())


def test_conservation_with_slow_consumer_backpressure():
    bus = make_bus("t", capacity=8)  # tiny queue forces publisher blocking
    sub = bus.subscribe("t")
    total = 2_000
    done = threading.Event()

    def produce():
        for i in range(total):
            bus.publish("t", i)
        done.set()

    t = threading.Thread(target=produce)
    t.start()
    received = []
    while len(received) < total:
        received.append(sub.get(timeout=10))
        if len(received) % 100 == 0:
            time.sleep(0.001)  # stay slower than the producer
    t.join()
    assert done.is_set()
    assert received == list(range(total))  # lossless and ordered


def test_get_timeout_returns_sentinel():
    bus = make_bus("t")
    sub = bus.subscribe("t")
    t0 = time.monotonic()
    assert sub.get(timeout=0.05) is None
    assert time.monotonic() - t0 < 1.0


def test_get_batch_semantics():
    bus = make_bus("t")
    sub = bus.subscribe("t")
    for i in range(5):
        bus.publish("t", i)
    assert sub.get_batch(3, timeout=0.2) == [0, 1, 2]
    assert sub.get_batch(10, timeout=0.2) == [3, 4]
    assert sub.get_batch(10, timeout=0.05) == []  # timeout, nothing pending


def test_close_drains_then_raises():
    bus = make_bus("t")
    sub = bus.subscribe("t")
    bus.publish("t", "pending")
    bus.close()
    # pending messages stay readable after close
    assert sub.get(timeout=1) == "pending"
    with pytest.raises(Closed):
        sub.get(timeout=1)
    with pytest.raises(Closed):
        sub.get_batch(4, timeout=1)
    with pytest.raises(Closed):
        bus.publish("t", "x")


def test_unsubscribe_stops_delivery():
    bus = make_bus("t")
    sub = bus.subscribe("t")
    bus.unsubscribe(sub)
    bus.publish("t", 1)  # no live subscribers: a successful no-op
    with pytest.raises(Closed):
        sub.get(timeout=0.2)


def test_create_topic_idempotent_same_capacity():
    bus = EventBus()
    bus.create_topic("t", 100)
    bus.create_topic("t", 100)
    with pytest.raises(ValueError):
        bus.create_topic("t", 200)


def test_throughput_floor():
    bus = make_bus("t", capacity=200_000)
    sub = bus.subscribe("t", capacity=200_000)
    n = 100_000
    payload = '{"kind":"verdict","event_id":"x"}'
    t0 = time.perf_counter()
    for _ in range(n):
        bus.publish("t", payload)
    drained = 0
    while drained < n:
        drained += len(sub.get_batch(4096, timeout=1))
    dt = time.perf_counter() - t0
    assert drained == n
    assert n / dt >= 100_000, f"{n / dt:.0f} msg/s"
