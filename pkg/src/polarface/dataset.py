"""Dataset loading: portable graymaps, directory layouts, eye-based
geometric normalization.

Supported image format is PGM, binary (P5) or ASCII (P2), maxval up to
65535.  Two dataset layouts: "orl" (one subdirectory per subject holding
its .pgm images) and "flat-manifest" (a UTF-8 text file listing
`path,subject[,x_left,y_left,x_right,y_right]` per line, '#' comments
allowed, image paths resolved relative to the manifest).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DatasetError, DomainError, ParseError
from .fileio import atomic_write_bytes
from .polar import bilinear_sample

_WHITESPACE = b" \t\r\n\x0b\x0c"


def load_pgm(path) -> np.ndarray:
    """Read a P5 or P2 graymap into a float64 (height, width) array.

    Intensities are kept verbatim (no rescaling).  Malformed input
    raises ParseError naming the byte offset of the problem.
    """
    data = Path(path).read_bytes()
    pos = 0

    def skip_filler():
        nonlocal pos
        while pos < len(data):
            if data[pos:pos + 1] in (b"#",):
                while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif data[pos:pos + 1] in _WHITESPACE:
                pos += 1
            else:
                return

    def token(what: str) -> tuple[bytes, int]:
        nonlocal pos
        skip_filler()
        if pos >= len(data):
            raise ParseError(f"{path}: missing {what} at byte {pos}")
        start = pos
        while pos < len(data) and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
            pos += 1
        return data[start:pos], start

    def int_token(what: str, low: int, high: int) -> int:
        tok, off = token(what)
        try:
            value = int(tok)
        except ValueError:
            raise ParseError(f"{path}: bad {what} {tok!r} at byte {off}") from None
        if not (low <= value <= high):
            raise ParseError(
                f"{path}: {what} {value} at byte {off} outside [{low}, {high}]"
            )
        return value

    magic, off = token("magic number")
    if magic not in (b"P5", b"P2"):
        raise ParseError(f"{path}: unsupported magic {magic!r} at byte {off}")
    width = int_token("width", 1, 1 << 30)
    height = int_token("height", 1, 1 << 30)
    maxval = int_token("maxval", 1, 65535)

    if magic == b"P5":
        if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
            raise ParseError(f"{path}: expected single whitespace after maxval at byte {pos}")
        pos += 1
        bytes_per = 2 if maxval > 255 else 1
        need = width * height * bytes_per
        avail = len(data) - pos
        if avail < need:
            raise ParseError(
                f"{path}: truncated pixel payload at byte {pos}: "
                f"expected {need} bytes, found {avail}"
            )
        dtype = ">u2" if bytes_per == 2 else "u1"
        pixels = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
        return pixels.reshape(height, width).astype(float)

    values = np.empty(width * height)
    for i in range(width * height):
        values[i] = int_token(f"pixel {i}", 0, 65535)
    return values.reshape(height, width).astype(float)


def save_pgm(path, image, maxval: int = 255, binary: bool = True) -> None:
    """Write a graymap; intensities are rounded and clipped to [0, maxval].

    maxval > 255 switches the binary payload to big-endian 16-bit.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise DomainError(f"image must be 2-D, got shape {img.shape}")
    if not (1 <= maxval <= 65535):
        raise ConfigError(f"maxval must be in [1, 65535], got {maxval}")
    h, w = img.shape
    pixels = np.clip(np.rint(img), 0, maxval)
    if binary:
        header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
        dtype = ">u2" if maxval > 255 else "u1"
        payload = pixels.astype(dtype).tobytes()
        atomic_write_bytes(path, header + payload)
    else:
        rows = "\n".join(" ".join(str(int(v)) for v in row) for row in pixels)
        atomic_write_bytes(path, f"P2\n{w} {h}\n{maxval}\n{rows}\n".encode("ascii"))


Eyes = tuple[tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class DatasetEntry:
    """One image: id, subject, and either a file path or in-memory pixels."""

    image_id: str
    subject_id: str
    path: Path | None = None
    image: np.ndarray | None = None
    eyes: Eyes | None = None

    def load(self) -> np.ndarray:
        if self.image is not None:
            return self.image
        if self.path is None:
            raise DatasetError(f"entry {self.image_id!r} has neither pixels nor a path")
        return load_pgm(self.path)


@dataclass(frozen=True)
class Dataset:
    entries: tuple[DatasetEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise DatasetError("dataset is empty")
        seen = set()
        for e in self.entries:
            if e.image_id in seen:
                raise DatasetError(f"duplicate image id {e.image_id!r}")
            seen.add(e.image_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def id_subject_pairs(self) -> list[tuple[str, str]]:
        return [(e.image_id, e.subject_id) for e in self.entries]

    def subjects(self) -> list[str]:
        return sorted({e.subject_id for e in self.entries})


def load_dataset_dir(root, layout: str = "orl") -> Dataset:
    """Enumerate a dataset in deterministic (lexicographic) order.

    layout "orl": `root` is a directory of per-subject subdirectories.
    layout "flat-manifest": `root` is the manifest file itself.
    """
    root = Path(root)
    if layout == "orl":
        if not root.is_dir():
            raise DatasetError(f"{root} is not a directory")
        entries = []
        for sub in sorted(p for p in root.iterdir() if p.is_dir()):
            for img in sorted(p for p in sub.iterdir() if p.suffix.lower() == ".pgm"):
                entries.append(
                    DatasetEntry(
                        image_id=f"{sub.name}/{img.name}",
                        subject_id=sub.name,
                        path=img,
                    )
                )
        return Dataset(entries=tuple(entries))
    if layout == "flat-manifest":
        if not root.is_file():
            raise DatasetError(f"{root} is not a manifest file")
        entries = []
        base = root.parent
        text = root.read_text(encoding="utf-8")
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) not in (2, 6):
                raise ParseError(
                    f"{root}:{lineno}: expected 2 or 6 comma-separated fields, "
                    f"got {len(parts)}"
                )
            rel, subject = parts[0], parts[1]
            if not rel or not subject:
                raise ParseError(f"{root}:{lineno}: empty path or subject field")
            eyes = None
            if len(parts) == 6:
                try:
                    xl, yl, xr, yr = (float(v) for v in parts[2:])
                except ValueError:
                    raise ParseError(
                        f"{root}:{lineno}: eye coordinates must be numbers"
                    ) from None
                eyes = ((xl, yl), (xr, yr))
            entries.append(
                DatasetEntry(
                    image_id=rel,
                    subject_id=subject,
                    path=base / rel,
                    eyes=eyes,
                )
            )
        return Dataset(entries=tuple(entries))
    raise ConfigError(f"unknown dataset layout {layout!r}")


@dataclass(frozen=True)
class NormalizationConfig:
    """Eye-anchored similarity normalization.

    The annotated eyes are mapped onto fixed target positions in a crop
    of crop_width x crop_height; everything outside the ellipse is
    blanked to 0 to suppress hair and background.
    """

    left_eye_target: tuple[float, float] = (29.0, 47.0)
    right_eye_target: tuple[float, float] = (88.0, 47.0)
    crop_width: int = 118
    crop_height: int = 140
    ellipse_center: tuple[float, float] = (58.5, 70.0)
    ellipse_axes: tuple[float, float] = (56.0, 68.0)

    def __post_init__(self):
        if self.crop_width < 2 or self.crop_height < 2:
            raise ConfigError("crop must be at least 2 x 2")
        if self.ellipse_axes[0] <= 0 or self.ellipse_axes[1] <= 0:
            raise ConfigError("ellipse semi-axes must be positive")
        for x, y in (self.left_eye_target, self.right_eye_target):
            if not (0 <= x <= self.crop_width - 1 and 0 <= y <= self.crop_height - 1):
                raise ConfigError(f"eye target ({x}, {y}) lies outside the crop")
        if self.left_eye_target == self.right_eye_target:
            raise ConfigError("eye targets must be distinct")


def normalize_face(image, left_eye, right_eye, config: NormalizationConfig = NormalizationConfig()) -> np.ndarray:
    """Rotate/scale/translate a face so the eyes land on fixed targets.

    The unique similarity transform taking the annotated eye pair to the
    target pair is applied with bilinear resampling (source pixels
    outside the image read as 0), then the elliptical mask zeroes the
    crop outside the face region.
    """
    img = np.asarray(image, dtype=float)
    for name, (x, y) in (("left_eye", tuple(left_eye)), ("right_eye", tuple(right_eye))):
        if not (math.isfinite(x) and math.isfinite(y)):
            raise DomainError(f"{name} coordinates must be finite")
    sl = complex(left_eye[0], left_eye[1])
    sr = complex(right_eye[0], right_eye[1])
    if sl == sr:
        raise DomainError("eye annotations coincide; similarity transform is degenerate")
    tl = complex(*config.left_eye_target)
    tr = complex(*config.right_eye_target)
    scale_rot = (sr - sl) / (tr - tl)
    ys, xs = np.mgrid[0:config.crop_height, 0:config.crop_width].astype(float)
    targets = xs + 1j * ys
    source = sl + scale_rot * (targets - tl)
    out = bilinear_sample(img, source.real, source.imag)
    cx, cy = config.ellipse_center
    ax, ay = config.ellipse_axes
    inside = ((xs - cx) / ax) ** 2 + ((ys - cy) / ay) ** 2 <= 1.0
    return np.where(inside, out, 0.0)
