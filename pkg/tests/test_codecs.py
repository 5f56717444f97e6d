from pathlib import Path

import numpy as np
import pytest

from tvtree.app.arraytextsaving import LabeledArray, splitHeader
from tvtree.app.objectsaving import matchFormat
from tvtree.app.pgmimagesaving import decodePgm, encodePgm, toBytes, toReals
from tvtree.app.unaryvolumesaving import UnaryVolume, decodeVolume, encodeVolume
from tvtree.pwl import UnaryPwl
from tvtree.tools import FileFormatError, TvInputError

def test_pgm_encoding():
    pixels = np.array([[0, 255, 7], [10, 20, 30]], dtype = np.uint8)

    data = encodePgm(pixels)

    assert data == b"P5\n3 2\n255\n" + bytes([0, 255, 7, 10, 20, 30])
    np.testing.assert_array_equal(decodePgm(data), pixels)

def test_pgm_header_comments_and_whitespace():
    data = b"P5 # made by hand\n2\t1\n# maxval follows\n255\n" + bytes([1, 2])

    np.testing.assert_array_equal(decodePgm(data), [[1, 2]])

@pytest.mark.parametrize("data", [
    b"P2\n1 1\n255\n\x00",
    b"P5\n1 1\n65535\n\x00\x00",
    b"P5\n2 2\n255\n\x00\x00",
    b"P5\nx 1\n255\n\x00",
    b"P5\n0 1\n255\n",
    b"P5\n1 1",
])
def test_malformed_pgm(data):
    with pytest.raises(FileFormatError):
        decodePgm(data)

def test_pgm_value_mapping():
    np.testing.assert_array_equal(toBytes([[-1.0, 0.5, 2.0]]), [[0, 128, 255]])
    np.testing.assert_allclose(toReals(np.array([[0, 51, 255]], dtype = np.uint8)), [[0.0, 0.2, 1.0]])

def _volume():
    rows = [[UnaryPwl((-1.0, 0.5, 1.0), (0.0, 2.0), (0.0, 1.5)), UnaryPwl((-2.0, 0.0, 3.0), (1.0, 1.5), (1.0, 0.0))]]
    return rows, UnaryVolume.fromUnaries(rows)

def test_volume_layout():
    rows, volume = _volume()

    data = encodeVolume(volume)

    assert volume.Shape == (1, 2)
    assert volume.BreakCount == 2
    assert len(data) == 12 + 8 * (1 * 2 * 2 + 1 * 2 * 3 + 1 * 2)
    np.testing.assert_array_equal(np.frombuffer(data[:12], dtype = "<i4"), [1, 2, 2])

    decoded = decodeVolume(data)
    for c, original in enumerate(rows[0]):
        unary = decoded.unary(0, c)
        for x in (-1.0, 0.0, 0.7, 1.5, 2.0, 4.0):
            assert unary.evaluate(x) == pytest.approx(original.evaluate(x))

def test_volume_needs_common_break_count():
    with pytest.raises(TvInputError):
        UnaryVolume.fromUnaries([[UnaryPwl.absolute(0.0), UnaryPwl((-1.0, 0.0, 1.0), (0.0, 1.0), (0.0, 0.0))]])

def test_malformed_volumes():
    _, volume = _volume()
    data = encodeVolume(volume)

    with pytest.raises(FileFormatError):
        decodeVolume(data[:8])
    with pytest.raises(FileFormatError):
        decodeVolume(data[:-8])
    with pytest.raises(FileFormatError):
        decodeVolume(np.array([0, 2, 2], dtype = "<i4").tobytes())

    unsorted = UnaryVolume(volume.breaks[:, :, ::-1].copy(), volume.slopes, volume.values)
    with pytest.raises(FileFormatError):
        decodeVolume(encodeVolume(unsorted))

    infinite = UnaryVolume(volume.breaks, volume.slopes, np.full((1, 2), np.inf))
    with pytest.raises(FileFormatError):
        decodeVolume(encodeVolume(infinite))

def test_split_header():
    assert splitHeader(["a,b", "1,2", "", "3,4"], ",") == (("a", "b"), [(2, "1,2"), (4, "3,4")])
    assert splitHeader(["# comment", "1 2"], None) == ((), [(2, "1 2")])
    assert splitHeader([], ",") == ((), [])

def test_labeled_array_keeps_columns():
    table = LabeledArray(np.ones((2, 2)), ("n", "seconds"))

    assert table.Columns == ("n", "seconds")
    assert table[1:].Columns == ("n", "seconds")

@pytest.mark.parametrize("name, expected", [
    ("times.csv", ".csv"),
    ("times.CSV.gz", ".csv.gz"),
    (".csv", None),
    ("image.pgm", None),
])
def test_match_format(name, expected):
    assert matchFormat(Path(name), (".csv", ".csv.gz", ".txt")) == expected
