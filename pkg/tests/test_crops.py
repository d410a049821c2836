import numpy as np
import pytest

from presstrack.crops import CROP_SIZE, CropOverflowWarning, crop_window, extract_crop, extract_crops
from presstrack.frames import PressureSequence, SparseFrame
from presstrack.geometry import Box
from presstrack.io import read_pgm16, write_crop_archive
from presstrack.tracker import TrackRow


def ramp(h=240, w=120):
    return np.arange(h * w, dtype=float).reshape(h, w) / 100.0 + 0.01


def test_box_centered_at_expected_offset():
    grid = ramp()
    c = extract_crop(grid, Box(10, 10, 30, 20), frame=7)
    assert c.patch.shape == (CROP_SIZE, CROP_SIZE)
    # 30 wide -> column offset 49, 20 high -> row offset 54
    np.testing.assert_array_equal(c.patch[54:74, 49:79], grid[10:30, 10:40])
    mask = np.ones_like(c.patch, bool)
    mask[54:74, 49:79] = False
    assert not c.patch[mask].any()
    assert c.center == (25.0, 20.0)
    assert c.frame == 7 and not c.overflow


def test_full_size_box_needs_no_padding():
    grid = ramp(200, 200)
    c = extract_crop(grid, Box(5, 6, 128, 128))
    np.testing.assert_array_equal(c.patch, grid[6:134, 5:133])


def test_empty_pressure_gives_zero_patch():
    c = extract_crop(np.zeros((240, 120)), Box(10, 10, 30, 20))
    assert not c.patch.any()


def test_oversized_box_is_center_cropped_with_warning():
    grid = ramp()
    with pytest.warns(CropOverflowWarning):
        c = extract_crop(grid, Box(0, 0, 20, 200))
    assert c.overflow
    # 200 rows -> keep rows 36..164; 20 columns -> offset 54
    np.testing.assert_array_equal(c.patch[:, 54:74], grid[36:164, 0:20])


def test_window_clips_to_mat_and_rounds_outward():
    assert crop_window(Box(-3.2, 5.5, 10, 4.2), 240, 120) == (5, 10, 0, 7)
    assert crop_window(Box(115.5, 235, 10, 10), 240, 120) == (235, 240, 115, 120)


def test_extract_crops_groups_by_track(tmp_path):
    grid = ramp(20, 20)
    seq = PressureSequence(20, 20, 25.0, [SparseFrame.from_dense(grid)] * 2)
    rows = [TrackRow(1, 2, Box(0, 0, 4, 4)), TrackRow(1, 1, Box(5, 5, 3, 3)), TrackRow(2, 2, Box(1, 1, 4, 4))]
    crops = extract_crops(seq, rows)
    assert list(crops) == [1, 2]
    assert [c.frame for c in crops[2]] == [1, 2]
    write_crop_archive(tmp_path, crops)
    back = read_pgm16(tmp_path / "track_2" / "frame_1.pgm")
    np.testing.assert_allclose(back, crops[2][0].patch, atol=0.005)
    lines = (tmp_path / "centers.csv").read_text().splitlines()
    assert lines[0] == "1,1,6.500000,6.500000"
    assert len(lines) == 3
