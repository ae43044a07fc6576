"""In-process publish/subscribe bus with bounded queues and backpressure.

Stands in for an external message broker while keeping its topic
topology: named topics, fan-out to every subscriber, per-publisher
FIFO, no replay of messages published before subscription. Queues are
bounded; a publisher facing a full subscriber queue blocks until the
subscriber drains (lossless by construction, never drop-oldest).

Messages are opaque to the bus. Pipeline code publishes the canonical
JSON wire encoding, so one subscription can watch several topics and
discriminate on the `kind` field.
"""

from __future__ import annotations

import threading
from collections import deque
from typing import Iterator, Optional

__all__ = ["TopicUnknown", "Closed", "EventBus", "Subscription", "DEFAULT_CAPACITY"]

DEFAULT_CAPACITY = 10_000


class TopicUnknown(KeyError):
    """Publish or subscribe against a topic that was never created."""


class Closed(RuntimeError):
    """The bus or subscription has shut down."""


class Subscription:
    """Receiving handle: one bounded FIFO fed by every subscribed topic."""

    def __init__(self, capacity: int, topics: tuple[str, ...]):
        self.topics = topics
        self.capacity = capacity
        self._q: deque = deque()
        self._lock = threading.Lock()
        self._not_empty = threading.Condition(self._lock)
        self._not_full = threading.Condition(self._lock)
        self._closed = False

    def _put(self, message) -> bool:
        """Blocking enqueue; returns False if the subscription closed."""
        with self._lock:
            while len(self._q) >= self.capacity:
                if self._closed:
                    return False
                self._not_full.wait()
            if self._closed:
                return False
            self._q.append(message)
            self._not_empty.notify()
            return True

    def get(self, timeout: Optional[float] = None):
        """Next message; None on timeout. Raises Closed once drained after close."""
        with self._lock:
            if not self._q:
                if self._closed:
                    raise Closed("subscription closed")
                self._not_empty.wait(timeout)
                if not self._q:
                    if self._closed:
                        raise Closed("subscription closed")
                    return None
            msg = self._q.popleft()
            self._not_full.notify()
            return msg

    def get_batch(self, max_messages: int = 256, timeout: Optional[float] = None) -> list:
        """Drain up to max_messages; waits for the first one up to timeout.

        Returns [] on timeout. Raises Closed once the subscription is
        closed and fully drained.
        """
        with self._lock:
            if not self._q:
                if self._closed:
                    raise Closed("subscription closed")
                self._not_empty.wait(timeout)
                if not self._q:
                    if self._closed:
                        raise Closed("subscription closed")
                    return []
            n = min(len(self._q), max_messages)
            out = [self._q.popleft() for _ in range(n)]
            self._not_full.notify()
            return out

    def __iter__(self) -> Iterator:
        while True:
            try:
                msg = self.get()
            except Closed:
                return
            if msg is not None:
                yield msg

    def qsize(self) -> int:
        with self._lock:
            return len(self._q)

    def close(self) -> None:
        """Detach: pending messages stay readable, then get() raises Closed."""
        with self._lock:
            self._closed = True
            self._not_empty.notify_all()
            self._not_full.notify_all()

    @property
    def closed(self) -> bool:
        return self._closed


class _Topic:
    __slots__ = ("name", "capacity", "subscribers")

    def __init__(self, name: str, capacity: int):
        self.name = name
        self.capacity = capacity
        self.subscribers: tuple[Subscription, ...] = ()


class EventBus:
    """Thread-safe broker; topics must be created before use."""

    def __init__(self):
        self._topics: dict[str, _Topic] = {}
        self._lock = threading.Lock()
        self._closed = False

    def create_topic(self, name: str, capacity: int = DEFAULT_CAPACITY) -> None:
        """Idempotent for identical capacity; re-declaring differently is an error."""
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        with self._lock:
            if self._closed:
                raise Closed("bus closed")
            existing = self._topics.get(name)
            if existing is None:
                self._topics[name] = _Topic(name, capacity)
            elif existing.capacity != capacity:
                raise ValueError(f"topic {name!r} already exists with capacity {existing.capacity}")

    def topics(self) -> list[str]:
        with self._lock:
            return sorted(self._topics)

    def _topic(self, name: str) -> _Topic:
        try:
            return self._topics[name]
        except KeyError:
            raise TopicUnknown(name) from None

    def publish(self, topic: str, message) -> bool:
        """Enqueue to every current subscriber, blocking on full queues.

        Zero subscribers is a successful no-op. Returns True as the ack.
        """
        if self._closed:
            raise Closed("bus closed")
        subs = self._topic(topic).subscribers
        for sub in subs:
            sub._put(message)
        return True

    def subscribe(self, *topic_names: str, capacity: Optional[int] = None) -> Subscription:
        """Create a handle fed by one or more topics (kind-discriminate multi-topic feeds).

        The queue bound defaults to the smallest capacity among the
        subscribed topics. Only messages published after this call are
        delivered.
        """
        if not topic_names:
            raise ValueError("subscribe needs at least one topic")
        with self._lock:
            if self._closed:
                raise Closed("bus closed")
            topics = [self._topic(n) for n in topic_names]
            cap = capacity if capacity is not None else min(t.capacity for t in topics)
            sub = Subscription(cap, tuple(topic_names))
            for t in topics:
                t.subscribers = t.subscribers + (sub,)
            return sub

    def unsubscribe(self, sub: Subscription) -> None:
        """Remove the handle from every topic and close it."""
        with self._lock:
            for t in self._topics.values():
                if sub in t.subscribers:
                    t.subscribers = tuple(s for s in t.subscribers if s is not sub)
        sub.close()

    def close(self) -> None:
        """Close the bus and every subscription (pending messages stay readable)."""
        with self._lock:
            if self._closed:
                return
            self._closed = True
            subs = {s for t in self._topics.values() for s in t.subscribers}
        for s in subs:
            s.close()

    @property
    def closed(self) -> bool:
        return self._closed
