"""Compiled single-queue event loop used by the stream simulator."""

import numpy as np
from numba import njit


@njit(cache=True)
def serve_queue(arrivals, services, lifo, t_end):
    """Run one queue whose server (the link) works whenever requests are waiting.

    ``arrivals`` must be sorted. ``services`` holds the durations of successive
    generation rounds and needs ``len(arrivals) + 1`` entries. On each
    completion the oldest (FIFO) or youngest (LIFO) waiting request takes the
    pair. Returns departure times indexed like ``arrivals`` (``inf`` when not
    served by ``t_end``) and the number still waiting at the end.
    """
    n = arrivals.size
    depart = np.full(n, np.inf)
    buf = np.empty(n, np.int64)
    head = 0
    tail = 0
    nxt = np.inf
    i = 0
    k = 0
    while i < n or tail > head:
        t_arr = arrivals[i] if i < n else np.inf
        if nxt <= t_arr:
            if nxt > t_end:
                break
            if lifo:
                tail -= 1
                r = buf[tail]
            else:
                r = buf[head]
                head += 1
            depart[r] = nxt
            if tail > head:
                nxt = nxt + services[k]
                k += 1
            else:
                nxt = np.inf
        else:
            if t_arr > t_end:
                break
            buf[tail] = i
            tail += 1
            if tail - head == 1:
                nxt = t_arr + services[k]
                k += 1
            i += 1
    return depart, tail - head
