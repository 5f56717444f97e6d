import pytest

import numpy as np

from tvtree.depq import DepqEntry, IntervalHeap, OperationCounters, PairingDepq
from tvtree.tools import TvInputError

QUEUES = [IntervalHeap, PairingDepq]

def _keys(queue):
    return sorted(entry.Key for entry in queue.entries())

@pytest.mark.parametrize("queueClass", QUEUES)
def test_empty_queue(queueClass):
    queue = queueClass()

    assert len(queue) == 0
    assert queue.findMin() is None
    assert queue.findMax() is None
    with pytest.raises(TvInputError):
        queue.removeMin()
    with pytest.raises(TvInputError):
        queue.removeMax()

@pytest.mark.parametrize("queueClass", QUEUES)
def test_single_entry_is_min_and_max(queueClass):
    queue = queueClass()
    entry = DepqEntry(1.5)
    queue.insert(entry)

    assert queue.findMin() is entry
    assert queue.findMax() is entry
    assert queue.removeMax() is entry
    assert len(queue) == 0

@pytest.mark.parametrize("queueClass", QUEUES)
def test_random_operations_match_sorted_list(queueClass, rng):
    queue = queueClass()
    reference = list()

    for _ in range(2000):
        operation = rng.random()
        if operation < 0.5 or not reference:
            # small integer keys to get duplicates
            key = float(rng.integers(-50, 50))
            queue.insert(DepqEntry(key))
            reference.append(key)
        elif operation < 0.75:
            lowest = min(reference)
            reference.remove(lowest)
            assert queue.removeMin().Key == lowest
        else:
            highest = max(reference)
            reference.remove(highest)
            assert queue.removeMax().Key == highest

        assert len(queue) == len(reference)
        if reference:
            assert queue.findMin().Key == min(reference)
            assert queue.findMax().Key == max(reference)

    assert _keys(queue) == sorted(reference)

@pytest.mark.parametrize("queueClass", QUEUES)
def test_removals_come_out_sorted(queueClass, rng):
    keys = rng.normal(size = 101)
    queue = queueClass()
    for key in keys:
        queue.insert(DepqEntry(float(key)))

    lows = [queue.removeMin().Key for _ in range(50)]
    highs = [queue.removeMax().Key for _ in range(50)]

    ordered = np.sort(keys)
    assert lows == ordered[:50].tolist()
    assert highs == ordered[:50:-1].tolist()
    assert len(queue) == 1
    assert queue.findMin().Key == ordered[50]

@pytest.mark.parametrize("queueClass", QUEUES)
def test_meld_moves_all_entries(queueClass, rng):
    counters = OperationCounters()
    first, second = queueClass(counters), queueClass(counters)
    firstKeys, secondKeys = rng.normal(size = 17), rng.normal(size = 9)
    for key in firstKeys:
        first.insert(DepqEntry(float(key)))
    for key in secondKeys:
        second.insert(DepqEntry(float(key)))
    second.removeMin()

    first.meld(second)

    expected = sorted(firstKeys.tolist() + np.sort(secondKeys)[1:].tolist())
    assert len(first) == 25
    assert len(second) == 0
    assert _keys(first) == expected
    assert first.findMin().Key == expected[0]
    assert first.findMax().Key == expected[-1]
    assert counters.Inserts == 26
    assert counters.Removes == 1
    assert counters.Melds == 1

def test_pairing_queue_melds_foreign_queue():
    heap = IntervalHeap()
    for key in (3.0, 1.0, 2.0):
        heap.insert(DepqEntry(key))
    queue = PairingDepq()
    queue.insert(DepqEntry(0.5))

    queue.meld(heap)

    assert len(heap) == 0
    assert len(queue) == 4
    assert queue.removeMax().Key == 3.0
    assert queue.removeMin().Key == 0.5
