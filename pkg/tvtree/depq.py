"""
Double ended priority queues keyed by breakpoint position.

Interfaces
----------
`IDoubleEndedQueue`

Implementations
---------------
`IntervalHeap`: array based, used on chains.
`PairingDepq`: a min and a max pairing heap sharing their entries, with lazy deletion and constant time meld. Used on trees.
"""

from typing import List, Optional

from tvtree.tools import TvInputError

import logging

logger = logging.getLogger(__name__)

class DepqEntry:
    """ Queue entry with an immutable key. Subclasses add a mutable payload. """

    __slots__ = ("Key", "_removed")

    def __init__(self, key: float):
        self.Key = key
        self._removed = False

class OperationCounters:
    """ Queue operation counters, shared by all queues of one solve. """

    __slots__ = ("Inserts", "Finds", "Removes", "Melds")

    def __init__(self):
        self.Inserts = 0
        self.Finds = 0
        self.Removes = 0
        self.Melds = 0

    def __repr__(self):
        return "OperationCounters(inserts={}, finds={}, removes={}, melds={})".format(self.Inserts, self.Finds, self.Removes, self.Melds)

class IDoubleEndedQueue:
    """ Double ended priority queue contract. `findMin`/`findMax` return `None` on an empty queue. """

    def __init__(self, counters: Optional[OperationCounters] = None):
        self._counters = counters if counters is not None else OperationCounters()

    @property
    def Counters(self) -> OperationCounters:
        return self._counters

    def __len__(self) -> int:
        raise NotImplementedError

    def insert(self, entry: DepqEntry):
        raise NotImplementedError

    def findMin(self) -> Optional[DepqEntry]:
        raise NotImplementedError

    def findMax(self) -> Optional[DepqEntry]:
        raise NotImplementedError

    def removeMin(self) -> DepqEntry:
        raise NotImplementedError

    def removeMax(self) -> DepqEntry:
        raise NotImplementedError

    def meld(self, other: "IDoubleEndedQueue"):
        """ Moves all entries of `other` into this queue. `other` is empty afterwards. """
        raise NotImplementedError

    def entries(self) -> List[DepqEntry]:
        """ All live entries in unspecified order. """
        raise NotImplementedError

class IntervalHeap(IDoubleEndedQueue):
    """ Interval heap: node `k` holds the pair `(heap[2k], heap[2k + 1])`, lows form a min heap and highs a max heap. """

    def __init__(self, counters: Optional[OperationCounters] = None):
        super().__init__(counters)
        self._heap: List[DepqEntry] = list()

    def __len__(self):
        return len(self._heap)

    def _swap(self, i: int, j: int):
        heap = self._heap
        heap[i], heap[j] = heap[j], heap[i]

    def _bubbleMin(self, i: int):
        heap = self._heap
        k = i // 2
        while k > 0:
            parent = 2 * ((k - 1) // 2)
            if heap[i].Key < heap[parent].Key:
                self._swap(i, parent)
                i, k = parent, parent // 2
            else:
                break

    def _bubbleMax(self, i: int):
        heap = self._heap
        k = i // 2
        while k > 0:
            parent = 2 * ((k - 1) // 2) + 1
            if heap[i].Key > heap[parent].Key:
                self._swap(i, parent)
                i, k = parent, parent // 2
            else:
                break

    def _push(self, entry: DepqEntry):
        heap = self._heap
        heap.append(entry)
        i = len(heap) - 1

        if i % 2 == 1:
            if entry.Key < heap[i - 1].Key:
                self._swap(i, i - 1)
                self._bubbleMin(i - 1)
            else:
                self._bubbleMax(i)
        elif i > 0:
            parent = (i // 2 - 1) // 2
            if entry.Key < heap[2 * parent].Key:
                self._bubbleMin(i)
            elif entry.Key > heap[2 * parent + 1].Key:
                self._bubbleMax(i)

    def insert(self, entry: DepqEntry):
        self._counters.Inserts += 1
        self._push(entry)

    def findMin(self) -> Optional[DepqEntry]:
        self._counters.Finds += 1
        return self._heap[0] if self._heap else None

    def findMax(self) -> Optional[DepqEntry]:
        self._counters.Finds += 1
        heap = self._heap
        if not heap:
            return None
        return heap[1] if len(heap) > 1 else heap[0]

    def removeMin(self) -> DepqEntry:
        heap = self._heap
        if not heap:
            raise TvInputError("Can't remove from an empty queue.")
        self._counters.Removes += 1

        result = heap[0]
        last = heap.pop()
        if not heap:
            return result
        heap[0] = last

        n = len(heap)
        i = 0
        while True:
            if i + 1 < n and heap[i].Key > heap[i + 1].Key:
                self._swap(i, i + 1)
            k = i // 2
            smallest = -1
            for child in (2 * k + 1, 2 * k + 2):
                if 2 * child < n and (smallest < 0 or heap[2 * child].Key < heap[smallest].Key):
                    smallest = 2 * child
            if smallest < 0 or not heap[smallest].Key < heap[i].Key:
                break
            self._swap(i, smallest)
            i = smallest
        return result

    def removeMax(self) -> DepqEntry:
        heap = self._heap
        if not heap:
            raise TvInputError("Can't remove from an empty queue.")
        self._counters.Removes += 1

        if len(heap) <= 2:
            return heap.pop()

        result = heap[1]
        heap[1] = heap.pop()

        n = len(heap)
        i = 1
        while True:
            if heap[i].Key < heap[i - 1].Key:
                self._swap(i, i - 1)
            k = i // 2
            largest = -1
            for child in (2 * k + 1, 2 * k + 2):
                position = 2 * child + 1 if 2 * child + 1 < n else 2 * child
                if position < n and (largest < 0 or heap[position].Key > heap[largest].Key):
                    largest = position
            if largest < 0 or not heap[largest].Key > heap[i].Key:
                break
            self._swap(i, largest)
            i = largest
            if i % 2 == 0:
                break
        return result

    def meld(self, other: IDoubleEndedQueue):
        self._counters.Melds += 1
        for entry in other.entries():
            self._push(entry)
        other.clear()

    def entries(self) -> List[DepqEntry]:
        return list(self._heap)

    def clear(self):
        self._heap = list()

class _PairNode:

    __slots__ = ("Key", "Entry", "Child", "Sibling")

    def __init__(self, key: float, entry: DepqEntry):
        self.Key = key
        self.Entry = entry
        self.Child = None
        self.Sibling = None

class _PairingHeap:
    """ Pairing heap with an iterative two pass merge; `sign = -1` turns it into a max heap. """

    __slots__ = ("_root", "_sign")

    def __init__(self, sign: int):
        self._root: Optional[_PairNode] = None
        self._sign = sign

    @property
    def Root(self) -> Optional[_PairNode]:
        return self._root

    def _link(self, a: _PairNode, b: _PairNode) -> _PairNode:
        if b.Key < a.Key:
            a, b = b, a
        b.Sibling = a.Child
        a.Child = b
        return a

    def push(self, entry: DepqEntry):
        node = _PairNode(self._sign * entry.Key, entry)
        self._root = node if self._root is None else self._link(self._root, node)

    def meld(self, other: "_PairingHeap"):
        if other._root is not None:
            self._root = other._root if self._root is None else self._link(self._root, other._root)
            other._root = None

    def pop(self):
        root = self._root
        pairs = list()
        node = root.Child
        while node is not None:
            second = node.Sibling
            if second is None:
                node.Sibling = None
                pairs.append(node)
                break
            following = second.Sibling
            node.Sibling = None
            second.Sibling = None
            pairs.append(self._link(node, second))
            node = following

        merged = pairs.pop() if pairs else None
        while pairs:
            merged = self._link(pairs.pop(), merged)
        self._root = merged
        return root.Entry

    def top(self) -> Optional[DepqEntry]:
        """ Discards lazily removed entries and returns the top live entry. """
        while self._root is not None and self._root.Entry._removed:
            self.pop()
        return None if self._root is None else self._root.Entry

    def entries(self) -> List[DepqEntry]:
        result = list()
        stack = [self._root] if self._root is not None else []
        while stack:
            node = stack.pop()
            if not node.Entry._removed:
                result.append(node.Entry)
            if node.Child is not None:
                stack.append(node.Child)
            if node.Sibling is not None:
                stack.append(node.Sibling)
        return result

class PairingDepq(IDoubleEndedQueue):
    """ Mergeable double ended queue: two pairing heaps over shared entries, removal marks the entry dead in the other heap. """

    def __init__(self, counters: Optional[OperationCounters] = None):
        super().__init__(counters)
        self._min = _PairingHeap(1)
        self._max = _PairingHeap(-1)
        self._size = 0

    def __len__(self):
        return self._size

    def insert(self, entry: DepqEntry):
        self._counters.Inserts += 1
        entry._removed = False
        self._min.push(entry)
        self._max.push(entry)
        self._size += 1

    def findMin(self) -> Optional[DepqEntry]:
        self._counters.Finds += 1
        return self._min.top()

    def findMax(self) -> Optional[DepqEntry]:
        self._counters.Finds += 1
        return self._max.top()

    def _remove(self, heap: _PairingHeap) -> DepqEntry:
        if heap.top() is None:
            raise TvInputError("Can't remove from an empty queue.")
        self._counters.Removes += 1
        entry = heap.pop()
        entry._removed = True
        self._size -= 1
        return entry

    def removeMin(self) -> DepqEntry:
        return self._remove(self._min)

    def removeMax(self) -> DepqEntry:
        return self._remove(self._max)

    def meld(self, other: IDoubleEndedQueue):
        self._counters.Melds += 1
        if isinstance(other, PairingDepq):
            self._min.meld(other._min)
            self._max.meld(other._max)
            self._size += other._size
            other._size = 0
        else:
            for entry in other.entries():
                self._min.push(entry)
                self._max.push(entry)
                self._size += 1
            other.clear()

    def entries(self) -> List[DepqEntry]:
        return self._min.entries()

    def clear(self):
        self._min = _PairingHeap(1)
        self._max = _PairingHeap(-1)
        self._size = 0
