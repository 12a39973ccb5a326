"""Hyperspectral cubes and ground-truth maps: loading, writing, splitting, synthesis.

A cube is stored band-sequential as an ``(n_bands, height, width)`` array of
unsigned 16-bit sensor counts. Ground truth is an ``(height, width)`` integer
grid where 0 marks an unlabeled pixel and 1..num_classes are classes.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .errors import FormatError, ValidationError

MAGIC = b"HSIC"
HEADER = struct.Struct("<4sIII")
MAX_SAMPLE = 65535
# refuse headers describing more than 2**34 samples (32 GiB of payload)
MAX_SAMPLES = 2**34

CUBE_FORMATS = ("binary-cube", "pixel-csv")


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class HyperCube:
    """Band-sequential image cube of raw 16-bit counts."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise ValidationError(f"cube data must be 3-D (bands, rows, cols), got shape {data.shape}")
        if min(data.shape) < 1:
            raise ValidationError(f"cube dimensions must all be >= 1, got {data.shape}")
        if data.dtype != np.uint16:
            if not np.issubdtype(data.dtype, np.integer):
                raise ValidationError(f"cube samples must be integers, got {data.dtype}")
            if data.min() < 0 or data.max() > MAX_SAMPLE:
                raise ValidationError("cube samples must lie in [0, 65535]")
            data = data.astype(np.uint16)
        object.__setattr__(self, "data", _frozen(data))

    @property
    def n_bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def band(self, index: int) -> np.ndarray:
        return self.data[index]

    def pixels(self, coords: np.ndarray, bands) -> np.ndarray:
        """Feature matrix ``(len(coords), len(bands))`` for ``(row, col)`` coordinates."""
        coords = np.asarray(coords, dtype=np.intp).reshape(-1, 2)
        sub = self.data[np.asarray(bands, dtype=np.intp)]
        return sub[:, coords[:, 0], coords[:, 1]].T


@dataclass(frozen=True)
class GroundTruthMap:
    labels: np.ndarray
    num_classes: int = field(init=False)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or min(labels.shape) < 1:
            raise ValidationError(f"ground truth must be a non-empty 2-D grid, got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValidationError(f"ground-truth labels must be integers, got {labels.dtype}")
        if labels.min() < 0:
            raise ValidationError("ground-truth labels must be non-negative")
        if not labels.any():
            raise ValidationError("ground truth has no labeled pixels")
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int64)))
        object.__setattr__(self, "num_classes", int(labels.max()))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.labels > 0

    @property
    def n_labeled(self) -> int:
        return int(np.count_nonzero(self.labels))

    def labeled_pixels(self) -> np.ndarray:
        """Row-major ``(n, 2)`` array of labeled ``(row, col)`` coordinates."""
        return np.argwhere(self.labels > 0)

    def labels_at(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.intp).reshape(-1, 2)
        return self.labels[coords[:, 0], coords[:, 1]]

    def check_matches(self, cube: HyperCube) -> None:
        if (self.height, self.width) != (cube.height, cube.width):
            raise ValidationError(
                f"ground truth is {self.height}x{self.width} but cube is {cube.height}x{cube.width}"
            )


@dataclass(frozen=True)
class LabeledSplit:
    train_pixels: np.ndarray
    test_pixels: np.ndarray
    seed: int
    fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "train_pixels", _frozen(np.asarray(self.train_pixels, dtype=np.int64).reshape(-1, 2)))
        object.__setattr__(self, "test_pixels", _frozen(np.asarray(self.test_pixels, dtype=np.int64).reshape(-1, 2)))


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a planted-signal cube.

    Relevant bands carry the class as a mean level plus bounded uniform noise,
    redundant copies are ``gain * parent + offset`` plus noise, and noise bands
    are label-independent draws around mid-range with the same noise law.
    """

    width: int = 64
    height: int = 64
    n_classes: int = 4
    relevant_bands: int = 4
    redundant_copies_per_relevant: int = 2
    noise_bands: int = 8
    noise_amplitude: float = 0.25
    copy_gain: float = 1.0
    copy_offset: float = 0.0

    @property
    def n_bands(self) -> int:
        return self.relevant_bands * (1 + self.redundant_copies_per_relevant) + self.noise_bands

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValidationError("synthetic width and height must be >= 1")
        if self.n_classes < 1 or self.n_classes > self.width * self.height:
            raise ValidationError("n_classes must be in [1, width*height]")
        if min(self.relevant_bands, self.redundant_copies_per_relevant, self.noise_bands) < 0:
            raise ValidationError("band counts must be non-negative")
        if self.n_bands < 2:
            raise ValidationError(f"synthetic cube needs at least 2 bands, spec gives {self.n_bands}")
        if not 0.0 <= self.noise_amplitude <= 1.0:
            raise ValidationError("noise_amplitude must lie in [0, 1]")


@dataclass(frozen=True)
class BandRole:
    band_index: int
    role: str  # relevant | redundant | noise
    parent_index: Optional[int] = None


# ---------------------------------------------------------------------------
# cube I/O


def load_cube(path, format: str = "binary-cube", width: Optional[int] = None,
              height: Optional[int] = None) -> HyperCube:
    """Read a cube file.

    ``width``/``height`` are only consulted for ``pixel-csv``, where they
    declare the expected image size; otherwise the size is inferred from the
    largest row and column indices.
    """
    path = Path(path)
    if format == "binary-cube":
        return _load_binary(path)
    if format == "pixel-csv":
        return _load_pixel_csv(path, width, height)
    raise ValidationError(f"unknown cube format {format!r}; expected one of {CUBE_FORMATS}")


def _load_binary(path: Path) -> HyperCube:
    raw = path.read_bytes()
    if len(raw) < HEADER.size:
        raise FormatError(f"header needs {HEADER.size} bytes, file has {len(raw)}", path, f"byte {len(raw)}")
    magic, width, height, n_bands = HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", path, "byte 0")
    for name, value, offset in (("width", width, 4), ("height", height, 8), ("n_bands", n_bands, 12)):
        if value == 0:
            raise FormatError(f"{name} must be >= 1", path, f"byte {offset}")
    n_samples = width * height * n_bands
    if n_samples > MAX_SAMPLES:
        raise FormatError(f"dimensions {width}x{height}x{n_bands} overflow the sample limit", path, "byte 4")
    expected = HEADER.size + 2 * n_samples
    if len(raw) < expected:
        band_bytes = 2 * width * height
        complete = (len(raw) - HEADER.size) // band_bytes
        raise FormatError(
            f"truncated payload: expected {expected} bytes for {n_bands} bands, got {len(raw)} "
            f"({complete} complete bands)",
            path,
            f"byte {len(raw)}",
        )
    if len(raw) > expected:
        raise FormatError(f"{len(raw) - expected} trailing bytes after payload", path, f"byte {expected}")
    data = np.frombuffer(raw, dtype="<u2", count=n_samples, offset=HEADER.size)
    return HyperCube(data.reshape(n_bands, height, width).astype(np.uint16))


def _load_pixel_csv(path: Path, width: Optional[int], height: Optional[int]) -> HyperCube:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty file", path, "line 1") from None
        if len(header) < 3 or header[0].strip() != "row" or header[1].strip() != "col":
            raise FormatError("header must start with 'row,col' followed by band columns", path, "line 1")
        n_bands = len(header) - 2
        rows: List[Tuple[int, int, List[int]]] = []
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != n_bands + 2:
                raise FormatError(f"expected {n_bands + 2} fields, got {len(fields)}", path, f"line {lineno}")
            try:
                values = [int(v) for v in fields]
            except ValueError:
                raise FormatError("non-integer field", path, f"line {lineno}") from None
            r, c, samples = values[0], values[1], values[2:]
            if r < 0 or c < 0:
                raise FormatError("negative pixel coordinate", path, f"line {lineno}")
            for s in samples:
                if not 0 <= s <= MAX_SAMPLE:
                    raise FormatError(f"sample {s} outside the 16-bit range", path, f"line {lineno}")
            rows.append((r, c, samples))
    if not rows:
        raise FormatError("no pixel rows", path, "line 2")
    h = max(r for r, _, _ in rows) + 1 if height is None else height
    w = max(c for _, c, _ in rows) + 1 if width is None else width
    if len(rows) != w * h:
        raise FormatError(f"declared {h}x{w} image needs {w * h} pixel rows, got {len(rows)}", path)
    data = np.zeros((n_bands, h, w), dtype=np.uint16)
    seen = np.zeros((h, w), dtype=bool)
    for lineno, (r, c, samples) in enumerate(rows, start=2):
        if r >= h or c >= w:
            raise FormatError(f"pixel ({r},{c}) outside the {h}x{w} image", path, f"line {lineno}")
        if seen[r, c]:
            raise FormatError(f"duplicate pixel ({r},{c})", path, f"line {lineno}")
        seen[r, c] = True
        data[:, r, c] = samples
    return HyperCube(data)


def write_cube(cube: HyperCube, path, format: str = "binary-cube") -> None:
    path = Path(path)
    if format == "binary-cube":
        header = HEADER.pack(MAGIC, cube.width, cube.height, cube.n_bands)
        path.write_bytes(header + cube.data.astype("<u2").tobytes(order="C"))
    elif format == "pixel-csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["row", "col"] + [f"b{i}" for i in range(cube.n_bands)])
            for r in range(cube.height):
                for c in range(cube.width):
                    writer.writerow([r, c] + cube.data[:, r, c].tolist())
    else:
        raise ValidationError(f"unknown cube format {format!r}; expected one of {CUBE_FORMATS}")


# ---------------------------------------------------------------------------
# ground truth I/O


def load_ground_truth(path) -> GroundTruthMap:
    path = Path(path)
    rows = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            try:
                row = [int(t) for t in tokens]
            except ValueError:
                raise FormatError("non-integer label token", path, f"line {lineno}") from None
            if any(v < 0 for v in row):
                raise FormatError("negative label", path, f"line {lineno}")
            if rows and len(row) != len(rows[0]):
                raise FormatError(f"ragged row: {len(row)} labels, expected {len(rows[0])}", path, f"line {lineno}")
            rows.append(row)
    if not rows:
        raise FormatError("empty ground-truth file", path)
    labels = np.array(rows, dtype=np.int64)
    if not labels.any():
        raise FormatError("ground truth has no labeled pixels", path)
    return GroundTruthMap(labels)


def write_ground_truth(gt: GroundTruthMap, path) -> None:
    with Path(path).open("w", newline="\n") as fh:
        for row in gt.labels:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# splitting


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def random_split(gt: GroundTruthMap, fraction: float = 0.5, seed: int = 0,
                 stratified: bool = False) -> LabeledSplit:
    """Draw ``round(fraction * n_labeled)`` labeled pixels for training, the rest for testing.

    With ``stratified`` the rounding is applied per class, so the train size
    can differ from the global rule by a few pixels.
    """
    if not 0.0 < fraction < 1.0:
        raise ValidationError(f"split fraction must lie in (0, 1), got {fraction}")
    coords = gt.labeled_pixels()
    if len(coords) < 2:
        raise ValidationError("need at least 2 labeled pixels to split")
    rng = np.random.default_rng(seed)
    if stratified:
        labels = gt.labels_at(coords)
        train_idx = []
        for cls in np.unique(labels):
            members = np.flatnonzero(labels == cls)
            n = _round_half_up(fraction * len(members))
            train_idx.extend(rng.permutation(members)[:n].tolist())
        is_train = np.zeros(len(coords), dtype=bool)
        is_train[train_idx] = True
    else:
        n_train = _round_half_up(fraction * len(coords))
        is_train = np.zeros(len(coords), dtype=bool)
        is_train[rng.permutation(len(coords))[:n_train]] = True
    if is_train.all() or not is_train.any():
        raise ValidationError(
            f"fraction {fraction} leaves an empty train or test set for {len(coords)} labeled pixels"
        )
    return LabeledSplit(coords[is_train], coords[~is_train], seed=seed, fraction=fraction)


# ---------------------------------------------------------------------------
# synthesis


def generate_synthetic(spec: SyntheticSpec, seed: int = 0):
    """Build ``(cube, gt, roles)`` from ``spec``.

    Bands are laid out parent first, then its copies, for every relevant band,
    followed by the noise bands.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    shape = (spec.height, spec.width)
    n_pix = spec.width * spec.height

    labels = rng.integers(1, spec.n_classes + 1, size=n_pix)
    labels[rng.choice(n_pix, size=spec.n_classes, replace=False)] = np.arange(1, spec.n_classes + 1)
    labels = labels.reshape(shape)

    half_width = spec.noise_amplitude * 60000 / 2

    def jitter():
        return rng.uniform(-half_width, half_width, size=shape)

    def to_counts(values):
        return np.clip(np.rint(values), 0, MAX_SAMPLE).astype(np.uint16)

    bands = []
    roles: List[BandRole] = []
    level = labels * (60000 / spec.n_classes)
    for _ in range(spec.relevant_bands):
        parent = to_counts(level + jitter())
        parent_index = len(bands)
        bands.append(parent)
        roles.append(BandRole(parent_index, "relevant"))
        for _ in range(spec.redundant_copies_per_relevant):
            copy = to_counts(spec.copy_gain * parent.astype(np.float64) + spec.copy_offset + jitter())
            roles.append(BandRole(len(bands), "redundant", parent_index))
            bands.append(copy)
    for _ in range(spec.noise_bands):
        roles.append(BandRole(len(bands), "noise"))
        bands.append(to_counts(30000 + jitter()))

    return HyperCube(np.stack(bands)), GroundTruthMap(labels), roles


def write_provenance(roles, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["band_index", "role", "parent_index"])
        for role in roles:
            writer.writerow([role.band_index, role.role, "" if role.parent_index is None else role.parent_index])


def load_provenance(path) -> List[BandRole]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            BandRole(int(row["band_index"]), row["role"],
                     int(row["parent_index"]) if row["parent_index"] else None)
            for row in reader
        ]
