"""8-bit grayscale image values, PGM I/O, seeded Gaussian corruption and
partition validity checking.

Everything here is a pure function over immutable values: a loaded or
constructed :class:`GrayImage` never changes, so images, histograms and
labelings can be shared freely across threads.

Noise reproducibility contract: deviates come from ``numpy.random.default_rng``
(PCG64) seeded with the 64-bit ``NoiseSpec.seed``, drawn as one sequential
normal stream in row-major pixel order. That generator/stream pair is a repo
constant; changing it would invalidate every recorded benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "GrayImage",
    "Histogram",
    "NoiseSpec",
    "RegionLabeling",
    "PartitionVerdict",
    "PgmError",
    "MalformedHeaderError",
    "UnsupportedMaxvalError",
    "TruncatedRasterError",
    "load_pgm",
    "save_pgm",
    "load_image",
    "histogram",
    "add_gaussian_noise",
    "validate_partition",
    "range_predicate",
    "round_half_up",
    "two_level_phantom",
    "bimodal_phantom",
]

LEVELS = 256  # 8-bit intensity domain [0, 255]


def round_half_up(x):
    """Round with halves going up (2.5 -> 3), the convention pinned repo-wide.

    Accepts scalars or arrays; returns int64.
    """
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


class GrayImage:
    """Immutable 8-bit single-channel raster.

    ``pixels`` is a read-only row-major uint8 vector of length
    ``width * height``.
    """

    __slots__ = ("width", "height", "pixels")

    def __init__(self, width: int, height: int, pixels):
        if width <= 0 or height <= 0:
            raise ValueError(f"dimensions must be positive, got {width}x{height}")
        arr = np.asarray(pixels)
        if arr.size != width * height:
            raise ValueError(
                f"pixel count {arr.size} does not match {width}x{height}"
            )
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("pixel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = arr.reshape(-1).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "width", width)
        object.__setattr__(self, "height", height)
        object.__setattr__(self, "pixels", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GrayImage is immutable")

    @classmethod
    def from_array(cls, array2d) -> "GrayImage":
        arr = np.asarray(array2d)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls(arr.shape[1], arr.shape[0], arr.reshape(-1))

    def to_array(self) -> np.ndarray:
        """Return the raster as a read-only (height, width) view."""
        return self.pixels.reshape(self.height, self.width)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.pixels, other.pixels)
        )

    def __repr__(self) -> str:
        return f"GrayImage({self.width}x{self.height})"


@dataclass(frozen=True)
class Histogram:
    """256-bin intensity census. ``sum(counts) == total`` always."""

    counts: np.ndarray
    total: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (LEVELS,):
            raise ValueError("histogram needs exactly 256 bins")
        if counts.min() < 0:
            raise ValueError("bin counts must be non-negative")
        if int(counts.sum()) != self.total:
            raise ValueError("total does not match sum of counts")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def occupied_range(self) -> tuple[int, int]:
        """(lowest, highest) occupied bin; raises on an empty histogram."""
        nz = np.flatnonzero(self.counts)
        if nz.size == 0:
            raise ValueError("empty histogram has no occupied bins")
        return int(nz[0]), int(nz[-1])


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise parameters: std-dev in intensity levels plus
    the 64-bit PRNG seed that makes the corruption reproducible."""

    sigma: float
    seed: int

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class RegionLabeling:
    """Row-major region identifiers partitioning an image into
    ``region_count`` regions, every id in [0, region_count) used."""

    labels: np.ndarray
    region_count: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.region_count < 1:
            raise ValueError("need at least one region")
        if labels.size == 0:
            raise ValueError("empty labeling")
        if labels.min() < 0 or labels.max() >= self.region_count:
            raise ValueError("label outside [0, region_count)")
        present = np.unique(labels)
        if present.size != self.region_count:
            missing = sorted(set(range(self.region_count)) - set(present.tolist()))
            raise ValueError(f"region ids never used: {missing}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)


@dataclass(frozen=True)
class PartitionVerdict:
    """Outcome of the four partition-validity checks."""

    union_ok: bool
    disjoint_ok: bool
    homogeneous_ok: bool
    adjacent_merge_fails: bool

    @property
    def valid(self) -> bool:
        return (
            self.union_ok
            and self.disjoint_ok
            and self.homogeneous_ok
            and self.adjacent_merge_fails
        )


# ---------------------------------------------------------------------------
# PGM (P5) I/O
# ---------------------------------------------------------------------------

class PgmError(ValueError):
    """Base for PGM parse failures."""


class MalformedHeaderError(PgmError):
    """Magic/number tokens missing or unparseable."""


class UnsupportedMaxvalError(PgmError):
    """maxval outside [1, 255]; two-byte rasters are out of scope."""


class TruncatedRasterError(PgmError):
    """Fewer raster bytes than width*height."""


_WHITESPACE = b" \t\n\r\x0b\x0c"


def _read_header_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Comments run from '#' to end of line and count as whitespace.
    n = len(data)
    while pos < n:
        if data[pos : pos + 1] in _WHITESPACE:
            pos += 1
        elif data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise MalformedHeaderError("unexpected end of header")
    return data[start:pos], pos


def load_pgm(data: bytes) -> GrayImage:
    """Parse a binary PGM (P5) byte string into a GrayImage.

    Header tokens may be separated by any whitespace and '#' comments.
    Distinct errors: malformed header, maxval > 255, truncated raster.
    """
    magic, pos = _read_header_token(data, 0)
    if magic != b"P5":
        raise MalformedHeaderError(f"not a binary PGM (magic {magic!r})")
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _read_header_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise MalformedHeaderError(f"non-numeric {name} token {token!r}") from None
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise MalformedHeaderError(f"non-positive dimensions {width}x{height}")
    if maxval > 255:
        raise UnsupportedMaxvalError(f"maxval {maxval} exceeds 255")
    if maxval < 1:
        raise MalformedHeaderError(f"maxval {maxval} below 1")
    # Exactly one whitespace byte separates maxval from the raster.
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise MalformedHeaderError("missing raster delimiter after maxval")
    pos += 1
    raster = data[pos : pos + width * height]
    if len(raster) < width * height:
        raise TruncatedRasterError(
            f"raster holds {len(raster)} bytes, needs {width * height}"
        )
    return GrayImage(width, height, np.frombuffer(raster, dtype=np.uint8))


def save_pgm(image: GrayImage) -> bytes:
    """Serialize to canonical binary PGM: maxval fixed at 255.

    ``load_pgm(save_pgm(img)) == img`` byte-for-byte.
    """
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def load_image(path) -> GrayImage:
    """Load a grayscale image from disk.

    ``.pgm`` files go through the native parser; anything else is decoded
    with Pillow (optional dependency) and converted to 8-bit gray, which for
    an equivalent PNG yields the same GrayImage as the PGM would.
    """
    path = str(path)
    if path.lower().endswith(".pgm"):
        with open(path, "rb") as fh:
            return load_pgm(fh.read())
    try:
        from PIL import Image
    except ImportError:  # pragma: no cover - depends on extras
        raise RuntimeError(
            "reading non-PGM images requires pillow (install grayfuzz[png])"
        ) from None
    with Image.open(path) as img:
        gray = img.convert("L")
        return GrayImage.from_array(np.asarray(gray, dtype=np.uint8))


# ---------------------------------------------------------------------------
# Histogram and noise
# ---------------------------------------------------------------------------

def histogram(image: GrayImage) -> Histogram:
    """256-bin census of the image; conserves the pixel count."""
    counts = np.bincount(image.pixels, minlength=LEVELS).astype(np.int64)
    return Histogram(counts=counts, total=image.width * image.height)


def add_gaussian_noise(image: GrayImage, spec: NoiseSpec) -> GrayImage:
    """Corrupt with additive N(0, sigma^2), round-half-up, clamp to [0, 255].

    Deterministic: the same (image, spec) always yields the same output.
    """
    rng = np.random.default_rng(int(spec.seed))
    noise = rng.normal(0.0, spec.sigma, size=image.pixels.size)
    noisy = round_half_up(image.pixels.astype(np.float64) + noise)
    return GrayImage(image.width, image.height, np.clip(noisy, 0, 255))


# ---------------------------------------------------------------------------
# Partition validity (two-region homogeneity checking)
# ---------------------------------------------------------------------------

def range_predicate(tolerance: int) -> Callable[[np.ndarray], bool]:
    """Default homogeneity test: intensity range (max-min) <= tolerance."""

    def predicate(values: np.ndarray) -> bool:
        values = np.asarray(values)
        if values.size == 0:
            return True
        return int(values.max()) - int(values.min()) <= tolerance

    return predicate


def validate_partition(
    image: GrayImage,
    labeling: RegionLabeling,
    predicate: Callable[[np.ndarray], bool],
) -> PartitionVerdict:
    """Check a labeling against the four partition conditions.

    * union_ok: every pixel carries a label (guaranteed by construction once
      lengths match, reported for completeness);
    * disjoint_ok: labels are a function of position, also representational;
    * homogeneous_ok: ``predicate`` holds on every region's pixel values;
    * adjacent_merge_fails: ``predicate`` fails on the union of every
      4-connected adjacent region pair (vacuously true with one region).
    """
    if labeling.labels.size != image.pixels.size:
        raise ValueError(
            f"labeling covers {labeling.labels.size} pixels, image has {image.pixels.size}"
        )
    labels2d = labeling.labels.reshape(image.height, image.width)
    values = image.pixels

    homogeneous_ok = all(
        predicate(values[labeling.labels == region])
        for region in range(labeling.region_count)
    )

    pairs = set()
    horiz = labels2d[:, :-1] != labels2d[:, 1:]
    for a, b in zip(labels2d[:, :-1][horiz], labels2d[:, 1:][horiz]):
        pairs.add((min(int(a), int(b)), max(int(a), int(b))))
    vert = labels2d[:-1, :] != labels2d[1:, :]
    for a, b in zip(labels2d[:-1, :][vert], labels2d[1:, :][vert]):
        pairs.add((min(int(a), int(b)), max(int(a), int(b))))

    adjacent_merge_fails = all(
        not predicate(
            values[(labeling.labels == a) | (labeling.labels == b)]
        )
        for a, b in sorted(pairs)
    )

    return PartitionVerdict(
        union_ok=True,
        disjoint_ok=True,
        homogeneous_ok=homogeneous_ok,
        adjacent_merge_fails=adjacent_merge_fails,
    )


# ---------------------------------------------------------------------------
# Synthetic phantoms (the benchmark needs known-ground-truth scenes)
# ---------------------------------------------------------------------------

def two_level_phantom(
    width: int = 256,
    height: int = 256,
    low: int = 40,
    high: int = 210,
    orientation: str = "vertical",
    split: float = 0.5,
) -> GrayImage:
    """Two flat regions separated by a straight edge.

    ``orientation`` 'vertical' splits into left/right halves at
    ``split * width``; 'horizontal' into top/bottom.
    """
    arr = np.full((height, width), low, dtype=np.uint8)
    if orientation == "vertical":
        arr[:, int(width * split):] = high
    elif orientation == "horizontal":
        arr[int(height * split):, :] = high
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    return GrayImage.from_array(arr)


def bimodal_phantom(
    width: int = 256,
    height: int = 256,
    low: tuple[int, int] = (35, 115),
    high: tuple[int, int] = (140, 220),
    radius_fraction: float = 0.35,
) -> GrayImage:
    """Bright disk on a dark background, each region carrying a smooth ramp.

    The background ramps horizontally across ``low`` and the disk vertically
    across ``high``, so the histogram shows two broad lobes and no two-level
    quantization can reproduce the scene exactly.
    """
    yy, xx = np.mgrid[0:height, 0:width]
    bg = low[0] + (low[1] - low[0]) * xx / (width - 1)
    fg = high[0] + (high[1] - high[0]) * yy / (height - 1)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    disk = (xx - cx) ** 2 + (yy - cy) ** 2 <= (radius_fraction * min(width, height)) ** 2
    arr = np.round(np.where(disk, fg, bg)).astype(np.uint8)
    return GrayImage.from_array(arr)
