"""
Tree topology, edge weights and the generic forward/backward dynamic programming skeleton shared by all tree solvers.

Every non-root node `i` owns exactly one edge `(i, parent(i))`; edge quantities (weights, back pointers) are therefore stored per
child node. The forward pass visits nodes leaves first, the backward pass root first.

Interfaces
----------
`IMessageOperations`, `IBackPointer`

Implementations
---------------
`Tree`, `ConvexWeights`, `TruncatedWeights`, `BackPointerStore`, `TreeFile`
"""

from typing import Any, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from tvtree.tools import TvInputError, TopologyError, FileFormatError, formatReal

import collections
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

ROOT_PARENT = -1

class Tree:
    """ Rooted tree given by a parent array, validated on construction. """

    def __init__(self, parents: Sequence[int]):
        self._parents: Tuple[int, ...] = tuple(int(parent) for parent in parents)
        n = len(self._parents)

        if n == 0:
            raise TopologyError("A tree needs at least one node.")

        roots = [i for i, parent in enumerate(self._parents) if parent == ROOT_PARENT]
        if len(roots) != 1:
            raise TopologyError("A tree needs exactly one root, found '{}'.".format(len(roots)))

        children: List[List[int]] = [list() for _ in range(n)]
        for i, parent in enumerate(self._parents):
            if parent == ROOT_PARENT:
                continue
            if not 0 <= parent < n or parent == i:
                raise TopologyError("Node '{}' has invalid parent '{}'.".format(i, parent))
            children[parent].append(i)

        self._root = roots[0]
        self._children = tuple(tuple(nodeChildren) for nodeChildren in children)

        # breadth first from the root, reversed: every child precedes its parent
        order = [self._root]
        queue = collections.deque([self._root])
        while queue:
            node = queue.popleft()
            for child in self._children[node]:
                order.append(child)
                queue.append(child)

        if len(order) != n:
            raise TopologyError("Parent array contains a cycle or a second component, reached '{}' of '{}' nodes.".format(len(order), n))

        self._order = tuple(reversed(order))
        self._isChain = all(parent == i + 1 for i, parent in enumerate(self._parents[:-1])) and self._parents[-1] == ROOT_PARENT

    @classmethod
    def chain(cls, n: int) -> "Tree":
        """ Chain `0 - 1 - ... - (n-1)` rooted at the last node. """
        return cls([i + 1 for i in range(n - 1)] + [ROOT_PARENT])

    @property
    def NodeCount(self) -> int:
        return len(self._parents)

    @property
    def EdgeCount(self) -> int:
        return len(self._parents) - 1

    @property
    def Root(self) -> int:
        return self._root

    @property
    def Parents(self) -> Tuple[int, ...]:
        """ Parent of every node, `ROOT_PARENT` for the root. """
        return self._parents

    @property
    def Children(self) -> Tuple[Tuple[int, ...], ...]:
        return self._children

    @property
    def Order(self) -> Tuple[int, ...]:
        """ All nodes, every child before its parent; the root comes last. """
        return self._order

    @property
    def IsChain(self) -> bool:
        """ Whether the tree is the chain `0 - 1 - ... - (n-1)` rooted at the last node. """
        return self._isChain

    def edges(self) -> Iterable[Tuple[int, int]]:
        """ All edges `(child, parent)` in forward pass order. """
        for node in self._order:
            if node != self._root:
                yield node, self._parents[node]

class ConvexWeights:
    """ Per-edge weights `w⁻ <= w⁺` of the convex pairwise term, stored per child node. The root entry is unused. """

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        self._lower = np.asarray(lower, dtype = float)
        self._upper = np.asarray(upper, dtype = float)

        if self._lower.shape != self._upper.shape or self._lower.ndim != 1:
            raise TvInputError("Weight arrays need equal one dimensional shapes, got '{}' and '{}'.".format(self._lower.shape, self._upper.shape))

        violations = np.flatnonzero(~(self._lower <= self._upper))
        if violations.size:
            i = int(violations[0])
            raise TvInputError("Edge of node '{}' violates w⁻ <= w⁺ with '{}' > '{}'.".format(i, self._lower[i], self._upper[i]))

    @classmethod
    def symmetric(cls, weights) -> "ConvexWeights":
        """ Symmetric TV weights `(-w, w)`. """
        weights = np.asarray(weights, dtype = float)
        if np.any(weights < 0):
            raise TvInputError("Symmetric TV weights have to be non-negative.")
        return cls(-weights, weights)

    @classmethod
    def chain(cls, lower: Sequence[float], upper: Sequence[float]) -> "ConvexWeights":
        """ Weights of the `n - 1` chain edges `(i, i + 1)`; a zero entry for the root is appended. """
        return cls(np.append(np.asarray(lower, dtype = float), 0.0), np.append(np.asarray(upper, dtype = float), 0.0))

    @property
    def Lower(self) -> np.ndarray:
        return self._lower

    @property
    def Upper(self) -> np.ndarray:
        return self._upper

    def __len__(self):
        return len(self._lower)

class TruncatedWeights:
    """ Per-edge weight `w >= 0` and truncation `C` in `(0, +inf]` of `min(w|z|, C)`, stored per child node. """

    def __init__(self, weights: Sequence[float], truncations: Optional[Sequence[float]] = None):
        self._weights = np.asarray(weights, dtype = float)
        self._truncations = np.full(self._weights.shape, math.inf) if truncations is None else np.asarray(truncations, dtype = float)

        if np.any(self._weights < 0):
            raise TvInputError("Truncated TV weights have to be non-negative.")
        if np.any(~(self._truncations > 0)):
            raise TvInputError("Truncation values have to be positive or infinite.")

    @property
    def Weights(self) -> np.ndarray:
        return self._weights

    @property
    def Truncations(self) -> np.ndarray:
        return self._truncations

    def __len__(self):
        return len(self._weights)

def pairwiseConvex(z, lower, upper):
    """ `w⁻ z` for `z < 0`, `w⁺ z` otherwise. Works elementwise on arrays. """
    return np.where(np.asarray(z) < 0, lower * np.asarray(z), upper * np.asarray(z))

def pairwiseTruncated(z, weight, truncation):
    """ `min(w |z|, C)`. Works elementwise on arrays. """
    return np.minimum(weight * np.abs(z), truncation)

def convexEnergy(tree: Tree, unaries: Sequence[Any], weights: ConvexWeights, x: Sequence[float]) -> float:
    """ Energy of `x` for unaries with an `evaluate` method and convex pairwise terms. """
    total = math.fsum(unary.evaluate(x[i]) for i, unary in enumerate(unaries))
    total += math.fsum(float(pairwiseConvex(x[j] - x[i], weights.Lower[i], weights.Upper[i])) for i, j in tree.edges())
    return total

def truncatedEnergy(tree: Tree, unaries: Sequence[Any], weights: TruncatedWeights, x: Sequence[float]) -> float:
    """ Energy of `x` for unaries with an `evaluate` method and truncated TV pairwise terms. """
    total = math.fsum(unary.evaluate(x[i]) for i, unary in enumerate(unaries))
    total += math.fsum(float(pairwiseTruncated(x[j] - x[i], weights.Weights[i], weights.Truncations[i])) for i, j in tree.edges())
    return total

class IBackPointer:
    """ Back pointer of an edge `(i, j)`: maps the parent value `x_j` to a minimizing child value `x_i`. """

    def query(self, y: float) -> float:
        raise NotImplementedError

class ClipBackPointer(IBackPointer):
    """ Back pointer of the convex case: `x_i = clip(x_j, [λ⁻, λ⁺])`. """

    __slots__ = ("Lower", "Upper")

    def __init__(self, lower: float, upper: float):
        self.Lower = lower
        self.Upper = upper

    def query(self, y: float) -> float:
        if y < self.Lower:
            return self.Lower
        if y > self.Upper:
            return self.Upper
        return y

class BackPointerStore:
    """ Back pointers of all edges of a tree, stored per child node. """

    def __init__(self, nodeCount: int):
        self._pointers: List[Optional[IBackPointer]] = [None] * nodeCount

    def __setitem__(self, node: int, pointer: IBackPointer):
        self._pointers[node] = pointer

    def __getitem__(self, node: int) -> IBackPointer:
        return self._pointers[node]

    def query(self, node: int, y: float) -> float:
        """ Returns the child value of the edge owned by `node` for the parent value `y`. """
        return self._pointers[node].query(y)

class IMessageOperations:
    """ Solver specific message algebra used by `dp_solve`. """

    def accumulate(self, node: int, childMessages: List[Any]) -> Any:
        """ Returns the node message `M̂_i = f_i + Σ M_ki`. """
        raise NotImplementedError

    def convolve(self, node: int, message: Any) -> Tuple[Any, IBackPointer]:
        """ Returns the edge message `M_ij = M̂_i ⊗ f_ij` of the edge owned by `node` and its back pointer. """
        raise NotImplementedError

    def minimize(self, message: Any) -> Tuple[float, Optional[float]]:
        """ Returns the lowest minimizer of the root message and the minimum value, `None` if unknown. """
        raise NotImplementedError

class DpResult(NamedTuple):
    x: np.ndarray
    value: Optional[float]
    pointers: BackPointerStore

def dp_solve(tree: Tree, operations: IMessageOperations) -> DpResult:
    """ Runs the forward pass leaves to root, minimizes the root message and backtracks root to leaves. """
    n = tree.NodeCount
    pending: List[Optional[List[Any]]] = [None] * n
    pointers = BackPointerStore(n)
    rootValue: Tuple[float, Optional[float]] = (math.nan, None)

    for node in tree.Order:
        childMessages = pending[node] or []
        pending[node] = None
        message = operations.accumulate(node, childMessages)

        if node == tree.Root:
            rootValue = operations.minimize(message)
        else:
            edgeMessage, pointer = operations.convolve(node, message)
            pointers[node] = pointer

            parent = tree.Parents[node]
            if pending[parent] is None:
                pending[parent] = list()
            pending[parent].append(edgeMessage)

    x = np.empty(n)
    x[tree.Root] = rootValue[0]
    for node in reversed(tree.Order):
        if node != tree.Root:
            x[node] = pointers.query(node, x[tree.Parents[node]])

    logger.debug("Solved tree with %d nodes, root value %s.", n, rootValue[1])
    return DpResult(x, rootValue[1], pointers)

class TreeFile(NamedTuple):
    """ Contents of a tree file. Weight arrays are stored per child node, root entries are zero or infinite. """
    tree: Tree
    lower: np.ndarray
    upper: np.ndarray
    truncations: np.ndarray

    def convexWeights(self) -> ConvexWeights:
        return ConvexWeights(self.lower, self.upper)

    def truncatedWeights(self) -> TruncatedWeights:
        """ Symmetric truncated weights `w = w⁺`; requires `w⁻ = -w⁺` on every edge. """
        for i, j in self.tree.edges():
            if self.lower[i] != -self.upper[i]:
                raise TvInputError("Truncated TV needs symmetric weights, edge '({}, {})' has '{}' and '{}'.".format(i, j, self.lower[i], self.upper[i]))
        return TruncatedWeights(self.upper, self.truncations)

def parseTree(lines: Iterable[str]) -> TreeFile:
    """ Parses the tree text format: `n`, then `n - 1` lines `child parent w⁻ w⁺ [C]` with 0-based node indices. """
    content = [(lineNumber, line.split()) for lineNumber, line in enumerate(lines, start = 1) if line.strip() and not line.lstrip().startswith("#")]

    if not content:
        raise FileFormatError("Tree file is empty.")

    try:
        n = int(content[0][1][0])
    except (IndexError, ValueError) as ex:
        raise FileFormatError("Line '{}': expected the node count.".format(content[0][0])) from ex

    if n < 1 or len(content) != n:
        raise FileFormatError("Expected '{}' edge lines after the node count, got '{}'.".format(max(n - 1, 0), len(content) - 1))

    parents = [ROOT_PARENT] * n
    lower = np.zeros(n)
    upper = np.zeros(n)
    truncations = np.full(n, math.inf)

    for lineNumber, tokens in content[1:]:
        try:
            if len(tokens) not in (4, 5):
                raise ValueError("expected 4 or 5 fields")
            child, parent = int(tokens[0]), int(tokens[1])
            if not 0 <= child < n:
                raise ValueError("child index out of range")
            if parents[child] != ROOT_PARENT:
                raise ValueError("node has a second parent")
            parents[child] = parent
            lower[child] = float(tokens[2])
            upper[child] = float(tokens[3])
            if len(tokens) == 5:
                truncations[child] = float(tokens[4])
        except ValueError as ex:
            raise FileFormatError("Line '{}': invalid edge '{}' ({}).".format(lineNumber, " ".join(tokens), ex)) from ex

    return TreeFile(Tree(parents), lower, upper, truncations)

def formatTree(treeFile: TreeFile) -> List[str]:
    """ Formats a tree file, inverse of `parseTree`. """
    lines = [str(treeFile.tree.NodeCount)]
    for child in range(treeFile.tree.NodeCount):
        parent = treeFile.tree.Parents[child]
        if parent == ROOT_PARENT:
            continue
        tokens = [str(child), str(parent), formatReal(treeFile.lower[child]), formatReal(treeFile.upper[child])]
        if math.isfinite(treeFile.truncations[child]):
            tokens.append(formatReal(treeFile.truncations[child]))
        lines.append(" ".join(tokens))
    return lines
