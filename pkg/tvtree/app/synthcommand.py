"""
Extension which adds the `synth` subcommand producing deterministic fixtures from a seed.

Kinds
-----
`image`: noisy gray images (`step`, `disk`, `camera`, `constant`) as binary PGM.
`volume`: stereo-like unary volumes, costs `min(|k - d|, cap)` at integer disparities `k` around a piecewise planar ground truth,
with a share of outlier pixels holding random costs.
`tree`: a random tree file with a matching unary file, truncated TV with non-convex unaries or convex TV with convex unaries.
`signal`: a noisy sine or staircase as CSV column `c`.
"""
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import Tuple

from tvtree.bench import SIGNALS, makeSignal
from tvtree.oracle import randomTreeInstance
from tvtree.pwl import UnaryPwl
from tvtree.tree import ConvexWeights, TreeFile
from tvtree.tools import TvInputError

from skimage import data, draw, transform, util

import logging
import math

import numpy as np

# extension dependencies
from tvtree.app.arraytextsaving import LabeledArray
from tvtree.app.core import SolverCommand, RunConfig
from tvtree.app.unaryvolumesaving import UnaryVolume

rootLogger = logging.getLogger("tvtree")

logger = rootLogger.getChild(__name__)

KIND_IMAGE = "image"
KIND_VOLUME = "volume"
KIND_TREE = "tree"
KIND_SIGNAL = "signal"

IMAGES = ("step", "disk", "camera", "constant")

def parseShape(value, default: Tuple[int, int]) -> Tuple[int, int]:
    """ `m,n` or a single `n` for a square. """
    if value is None:
        return default
    parts = value.split(",") if isinstance(value, str) else list(value) if isinstance(value, (list, tuple)) else [value]
    try:
        sizes = [int(part) for part in parts]
    except (TypeError, ValueError) as ex:
        raise TvInputError("Size has to be given as 'm,n' or 'n', got '{}'.".format(value)) from ex
    if len(sizes) == 1:
        sizes = sizes * 2
    if len(sizes) != 2 or min(sizes) < 1:
        raise TvInputError("Size has to be given as positive 'm,n' or 'n', got '{}'.".format(value))
    return sizes[0], sizes[1]

def cleanImage(kind: str, shape: Tuple[int, int], level: float = 0.5) -> np.ndarray:
    """ Noise free test image with values in `[0, 1]`. """
    m, n = shape
    if kind == "step":
        image = np.full(shape, 0.25)
        image[:, n // 2:] = 0.75
    elif kind == "disk":
        image = np.full(shape, 0.2)
        rows, columns = draw.disk((m / 2.0, n / 2.0), min(m, n) / 3.0, shape = shape)
        image[rows, columns] = 0.8
    elif kind == "camera":
        image = transform.resize(util.img_as_float(data.camera()), shape, order = 1, anti_aliasing = True)
    elif kind == "constant":
        image = np.full(shape, level)
    else:
        raise TvInputError("Unknown image '{}', expected one of '{}'.".format(kind, ", ".join(IMAGES)))
    return np.clip(image, 0.0, 1.0)

def groundTruthDisparity(shape: Tuple[int, int], breakCount: int) -> np.ndarray:
    """ Slanted background with a fronto-parallel square in front, inside `[0, breakCount - 1]`. """
    m, n = shape
    top = breakCount - 1
    columns = np.arange(n)[None, :] / max(n - 1, 1)
    disparity = np.repeat(0.2 * top + 0.15 * top * columns, m, axis = 0)
    disparity[m // 4:(3 * m) // 4 + 1, n // 4:(3 * n) // 4 + 1] = 0.7 * top
    return disparity

def stereoVolume(shape: Tuple[int, int], breakCount: int, rng: np.random.Generator, cap: float = 2.0, noise: float = 0.3,
        outliers: float = 0.05, wall: float = 1.0) -> Tuple[UnaryVolume, np.ndarray]:
    """ Unary volume and its ground truth disparity. """
    if breakCount < 2:
        raise TvInputError("A unary volume needs at least two disparities, got '{}'.".format(breakCount))

    m, n = shape
    truth = groundTruthDisparity(shape, breakCount)
    labels = np.arange(breakCount, dtype = float)
    costs = np.minimum(np.abs(labels[None, None, :] - (truth + rng.normal(scale = noise, size = shape))[:, :, None]), cap)

    outlierMask = rng.random(shape) < outliers
    costs[outlierMask] = rng.uniform(0.0, cap, size = (int(outlierMask.sum()), breakCount))

    rows = list()
    for r in range(m):
        row = list()
        for c in range(n):
            slopes = np.concatenate([[-wall], np.diff(costs[r, c]), [wall]])
            row.append(UnaryPwl(slopes, labels, (labels[0], costs[r, c, 0])))
        rows.append(row)
    return UnaryVolume.fromUnaries(rows), truth

class SynthCommand(SolverCommand):
    """ Writes seeded synthetic inputs for the other subcommands. """

    _USER_CONFIG_SECTION_BENCH = "Bench"

    _SIGMA_KEY = "noise-sigma"
    _SIGMA_DEFAULT = 0.1

    _IMAGE_SHAPE_DEFAULT = (32, 32)
    _VOLUME_SHAPE_DEFAULT = (16, 16)
    _BREAKS_DEFAULT = 16
    _N_DEFAULT = 12

    @classmethod
    def configureParser(cls, parser: ArgumentParser):
        kinds = parser.add_subparsers(dest = "kind", metavar = "kind")
        kinds.required = True

        image = kinds.add_parser(KIND_IMAGE, help = "noisy gray image as PGM")
        image.add_argument("--image", choices = IMAGES, help = "clean image")
        image.add_argument("--size", help = "m,n or n")
        image.add_argument("--level", type = float, help = "gray value of the constant image in [0, 1]")

        volume = kinds.add_parser(KIND_VOLUME, help = "stereo-like unary volume")
        volume.add_argument("--size", help = "m,n or n")
        volume.add_argument("--breaks", type = int, help = "number of disparities")
        volume.add_argument("--truth", help = "CSV file for the ground truth disparities")

        tree = kinds.add_parser(KIND_TREE, help = "random tree with unaries")
        tree.add_argument("--n", type = int, help = "number of nodes")
        tree.add_argument("--convex", action = "store_true", default = None, help = "convex TV with convex unaries")
        tree.add_argument("--unaries", help = "unary file to write")

        signal = kinds.add_parser(KIND_SIGNAL, help = "noisy 1D signal as CSV")
        signal.add_argument("--n", type = int, help = "signal length")
        signal.add_argument("--signal", choices = SIGNALS, help = "clean signal")

        for subparser in (image, volume, tree, signal):
            subparser.add_argument("--seed", type = int, help = "seed of the generation")
            subparser.add_argument("--out", help = "file to write")
        for subparser in (image, signal):
            subparser.add_argument("--sigma", type = float, help = "deviation of the Gaussian noise")

    def execute(self, arguments: Namespace) -> int:
        runConfig = self.runConfig(arguments)
        kind = runConfig.require("kind")
        rng = np.random.default_rng(self.seed(runConfig))

        if kind == KIND_IMAGE:
            self._image(runConfig, rng)
        elif kind == KIND_VOLUME:
            self._volume(runConfig, rng)
        elif kind == KIND_TREE:
            self._tree(runConfig, rng)
        elif kind == KIND_SIGNAL:
            self._signal(runConfig, rng)
        else:
            raise TvInputError("Unknown fixture kind '{}'.".format(kind))
        return 0

    def _sigma(self, runConfig: RunConfig) -> float:
        sigma = runConfig.getFloat("sigma")
        if sigma is None:
            sigma = self.getConfigValue(self._USER_CONFIG_SECTION_BENCH, self._SIGMA_KEY, self._SIGMA_DEFAULT, float)
        return sigma

    def _save(self, objectToSave, runConfig: RunConfig, saveType, what: str):
        location = self.saveObject(objectToSave, Path(runConfig.require("out")), saveType)
        logger.info("%s written to '%s'.", what, location)
        self.writeLine(location.as_posix())

    def _image(self, runConfig: RunConfig, rng: np.random.Generator):
        shape = parseShape(runConfig.get("size"), self._IMAGE_SHAPE_DEFAULT)
        clean = cleanImage(runConfig.get("image", IMAGES[0]), shape, runConfig.getFloat("level", 0.5))
        noisy = np.clip(clean + rng.normal(scale = self._sigma(runConfig), size = shape), 0.0, 1.0)
        self._save(noisy, runConfig, np.ndarray, "Image")

    def _volume(self, runConfig: RunConfig, rng: np.random.Generator):
        shape = parseShape(runConfig.get("size"), self._VOLUME_SHAPE_DEFAULT)
        volume, truth = stereoVolume(shape, runConfig.getInt("breaks", self._BREAKS_DEFAULT), rng)
        self._save(volume, runConfig, UnaryVolume, "Unary volume")
        if runConfig.has("truth"):
            location = self.saveObject(truth, runConfig.getPath("truth"), np.ndarray)
            logger.info("Ground truth written to '%s'.", location)

    def _tree(self, runConfig: RunConfig, rng: np.random.Generator):
        n = runConfig.getInt("n", self._N_DEFAULT)
        instance = randomTreeInstance(rng, n, truncated = not runConfig.getBool("convex"))

        if isinstance(instance.weights, ConvexWeights):
            treeFile = TreeFile(instance.tree, instance.weights.Lower, instance.weights.Upper, np.full(n, math.inf))
        else:
            treeFile = TreeFile(instance.tree, -instance.weights.Weights, instance.weights.Weights, instance.weights.Truncations)
        self._save(treeFile, runConfig, TreeFile, "Tree")

        if runConfig.has("unaries"):
            location = self.saveObject(instance.unaries, runConfig.getPath("unaries"), UnaryPwl)
            logger.info("Unaries written to '%s'.", location)

    def _signal(self, runConfig: RunConfig, rng: np.random.Generator):
        n = runConfig.getInt("n", 1000)
        values = makeSignal(n, runConfig.get("signal", SIGNALS[0]), rng, self._sigma(runConfig))
        self._save(LabeledArray(values[:, None], ("c",)), runConfig, np.ndarray, "Signal")

# extension area

from tvtree.app.manifest import manifest

# commands
manifest.insert(SynthCommand, "synth", help = "write seeded synthetic fixtures")
