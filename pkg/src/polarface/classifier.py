"""Dissimilarity-space classification.

Feature vectors are re-represented by their Euclidean distances to the
training (gallery) set.  In that space a pseudo-Fisher linear
discriminant is trained per class, one against all others: the centered
distance matrix gets a constant bias column, and the minimum-norm
least-squares solution of [D_centered | 1] w = y (targets +1 for the
class, -1 otherwise) is taken via SVD with relative cutoff 1e-10.  With
n_train <= dimension this interpolates the training targets, which makes
the discriminant usable even though classes have too few samples for a
classical within-scatter estimate.

Classifier outputs of two feature families are fused by the max rule on
their normalized posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ParseError
from .features import FeatureVector
from .fileio import atomic_write_text

_SVD_CUTOFF = 1e-10  # relative singular value cutoff in the least-squares solve
_MODEL_MAGIC = "PFLD1"
_DIST_CHUNK = 64


def _pad_to_chunk(X: np.ndarray) -> np.ndarray:
    pad = (-X.shape[-1]) % _DIST_CHUNK
    if pad == 0:
        return X
    shape = X.shape[:-1] + (pad,)
    return np.concatenate([X, np.zeros(shape)], axis=-1)


def _distances_to(X: np.ndarray, row: np.ndarray) -> np.ndarray:
    """Euclidean distance from every row of X to `row`.

    Both operands must be pre-padded to a _DIST_CHUNK multiple.  Squares
    are reduced chunk by chunk in a fixed order, so appending zero
    coordinates (which lands in pad positions or adds all-zero chunks)
    cannot change any distance, not even its last bit.
    """
    diff = X - row
    parts = diff.reshape(X.shape[0], -1, _DIST_CHUNK)
    chunks = np.einsum("ijk,ijk->ij", parts, parts)
    acc = chunks[:, 0].copy()
    for k in range(1, chunks.shape[1]):
        acc += chunks[:, k]
    return np.sqrt(acc)


def _stack_checked(features: Sequence[FeatureVector]) -> tuple[np.ndarray, str]:
    if len(features) == 0:
        raise ConfigError("need at least one feature vector")
    layout = features[0].layout_id
    dim = features[0].values.size
    for f in features:
        if f.layout_id != layout:
            raise ConfigError(
                f"mixed feature layouts: {layout!r} vs {f.layout_id!r}"
            )
        if f.values.size != dim:
            raise ConfigError(
                f"feature length mismatch under layout {layout!r}: {dim} vs {f.values.size}"
            )
    return np.array([f.values for f in features], dtype=float), layout


@dataclass(frozen=True)
class DissimilarityMatrix:
    """Pairwise Euclidean distances between gallery feature vectors."""

    ids: tuple[str, ...]
    distances: np.ndarray
    layout_id: str


def dissimilarity_matrix(features: Sequence[FeatureVector], ids: Sequence[str] | None = None) -> DissimilarityMatrix:
    """Pairwise Euclidean distance matrix of a feature list.

    Distances are computed row-by-row from explicit differences (not the
    Gram shortcut), so the matrix is exactly symmetric with a zero
    diagonal, and reduced in fixed chunk order so zero-padding a layout
    reproduces it bit for bit.
    """
    X, layout = _stack_checked(features)
    n = X.shape[0]
    if ids is None:
        ids = tuple(str(i) for i in range(n))
    else:
        ids = tuple(str(i) for i in ids)
        if len(ids) != n:
            raise ConfigError(f"{len(ids)} ids for {n} feature vectors")
    Xp = _pad_to_chunk(X)
    D = np.empty((n, n))
    for i in range(n):
        D[i] = _distances_to(Xp, Xp[i])
    np.fill_diagonal(D, 0.0)
    return DissimilarityMatrix(ids=ids, distances=D, layout_id=layout)


@dataclass(frozen=True)
class TrainedModel:
    """Per-class discriminants over the dissimilarity embedding.

    Keeps the gallery features (a probe is embedded as its distances to
    them), the stored column-mean offset of the training dissimilarity
    matrix, and the stacked weight matrix, one augmented weight column
    per class label.
    """

    layout_id: str
    class_labels: tuple
    gallery: np.ndarray          # (n_train, feature_dim)
    mean_offset: np.ndarray      # (n_train,)
    weights: np.ndarray          # (n_train + 1, n_classes)


def embed_probe(probe: FeatureVector, model: TrainedModel) -> np.ndarray:
    """Distances from a probe to every gallery vector, in gallery order."""
    if probe.layout_id != model.layout_id:
        raise ConfigError(
            f"probe layout {probe.layout_id!r} does not match model {model.layout_id!r}"
        )
    if probe.values.size != model.gallery.shape[1]:
        raise ConfigError(
            f"probe length {probe.values.size} does not match gallery "
            f"dimension {model.gallery.shape[1]}"
        )
    return _distances_to(_pad_to_chunk(model.gallery), _pad_to_chunk(probe.values))


def train_pfld(D: DissimilarityMatrix, subject_of: Mapping[str, object], gallery: Sequence[FeatureVector]) -> TrainedModel:
    """Fit one-vs-rest linear discriminants on the dissimilarity matrix.

    Args:
        D: training dissimilarity matrix.
        subject_of: image id -> subject label for every id in D.
        gallery: the feature vectors behind D, same order; stored on the
            model so probes can be embedded later.

    The solve is np.linalg.lstsq (SVD based) with rcond 1e-10, i.e. the
    minimum-norm least-squares solution per class.
    """
    missing = [i for i in D.ids if i not in subject_of]
    if missing:
        raise ConfigError(f"no subject label for gallery ids {missing[:5]}")
    X, layout = _stack_checked(gallery)
    if layout != D.layout_id or X.shape[0] != len(D.ids):
        raise ConfigError("gallery does not match the dissimilarity matrix")
    labels = [subject_of[i] for i in D.ids]
    class_labels = tuple(sorted(set(labels)))
    if len(class_labels) < 2:
        raise ConfigError(f"need >= 2 classes, got {len(class_labels)}")
    n = len(labels)
    mean_offset = D.distances.mean(axis=0)
    centered = D.distances - mean_offset
    design = np.hstack([centered, np.ones((n, 1))])
    targets = np.where(
        np.array(labels, dtype=object)[:, None] == np.array(class_labels, dtype=object)[None, :],
        1.0,
        -1.0,
    )
    weights, _, _, _ = np.linalg.lstsq(design, targets, rcond=_SVD_CUTOFF)
    return TrainedModel(
        layout_id=layout,
        class_labels=class_labels,
        gallery=X,
        mean_offset=mean_offset,
        weights=weights,
    )


@dataclass(frozen=True)
class ClassScores:
    """Raw discriminant outputs and normalized posteriors per class."""

    class_labels: tuple
    raw: np.ndarray
    posterior: np.ndarray

    @property
    def predicted(self):
        # np.argmax takes the first maximum, i.e. the lowest class index.
        return self.class_labels[int(np.argmax(self.posterior))]


def _posterior(raw: np.ndarray) -> np.ndarray:
    # Logistic squash, numerically stable on both tails, then normalized
    # to sum 1 across classes.
    p = np.where(raw >= 0, 1.0 / (1.0 + np.exp(-np.abs(raw))),
                 np.exp(-np.abs(raw)) / (1.0 + np.exp(-np.abs(raw))))
    total = p.sum()
    if total <= 0.0:
        return np.full_like(p, 1.0 / p.size)
    return p / total


def classify(model: TrainedModel, probe: FeatureVector) -> ClassScores:
    """Score a probe against every class of a trained model."""
    d = embed_probe(probe, model)
    augmented = np.concatenate([d - model.mean_offset, [1.0]])
    raw = augmented @ model.weights
    return ClassScores(class_labels=model.class_labels, raw=raw, posterior=_posterior(raw))


def fuse_max(a: ClassScores, b: ClassScores):
    """Max-rule fusion: per-class max of posteriors, then argmax.

    Ties resolve to the lower class index.  Both score sets must carry
    the identical class label tuple.
    """
    if a.class_labels != b.class_labels:
        raise ConfigError("cannot fuse scores over different class label sets")
    fused = np.maximum(a.posterior, b.posterior)
    return a.class_labels[int(np.argmax(fused))]


def fused_posterior(a: ClassScores, b: ClassScores) -> np.ndarray:
    """The per-class max-rule score vector behind fuse_max."""
    if a.class_labels != b.class_labels:
        raise ConfigError("cannot fuse scores over different class label sets")
    return np.maximum(a.posterior, b.posterior)


def nearest_neighbor_single_feature(
    train: Sequence[FeatureVector],
    train_labels: Sequence,
    probe: FeatureVector,
    feature_index: int,
):
    """1-D nearest neighbor on one selected coefficient.

    Ties resolve to the lowest training index.  Used to score how
    discriminative each spectrum position is on its own.
    """
    X, layout = _stack_checked(train)
    if len(train_labels) != X.shape[0]:
        raise ConfigError(f"{len(train_labels)} labels for {X.shape[0]} vectors")
    if probe.layout_id != layout:
        raise ConfigError(
            f"probe layout {probe.layout_id!r} does not match training {layout!r}"
        )
    if not (0 <= feature_index < X.shape[1]):
        raise DomainError(
            f"feature index {feature_index} outside 0..{X.shape[1] - 1}"
        )
    gaps = np.abs(X[:, feature_index] - probe.values[feature_index])
    return train_labels[int(np.argmin(gaps))]


def save_model(model: TrainedModel, path) -> None:
    """Persist a trained model as text, full float64 precision."""
    lines = [_MODEL_MAGIC, f"layout {model.layout_id}", f"classes {len(model.class_labels)}"]
    for label in model.class_labels:
        lines.append(str(label))
    n, dim = model.gallery.shape
    lines.append(f"gallery {n} {dim}")
    for row in model.gallery:
        lines.append(",".join(f"{v:.17g}" for v in row))
    lines.append("offset")
    lines.append(",".join(f"{v:.17g}" for v in model.mean_offset))
    lines.append(f"weights {model.weights.shape[0]} {model.weights.shape[1]}")
    for row in model.weights:
        lines.append(",".join(f"{v:.17g}" for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_model(path) -> TrainedModel:
    """Load a model written by save_model; labels come back as strings."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    pos = 0

    def take(what: str) -> str:
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(f"{path}: truncated model file, expected {what} at line {pos + 1}")
        line = lines[pos]
        pos += 1
        return line

    if take("magic") != _MODEL_MAGIC:
        raise ParseError(f"{path}: not a {_MODEL_MAGIC} model file")
    layout_line = take("layout")
    if not layout_line.startswith("layout "):
        raise ParseError(f"{path}: expected 'layout <id>' at line 2")
    layout = layout_line[len("layout "):]
    classes_line = take("class count")
    try:
        n_classes = int(classes_line.split()[1])
    except (IndexError, ValueError):
        raise ParseError(f"{path}: bad classes line {classes_line!r}") from None
    labels = tuple(take(f"class label {i + 1}") for i in range(n_classes))

    def matrix(name: str) -> np.ndarray:
        head = take(f"{name} header").split()
        if len(head) != 3 or head[0] != name:
            raise ParseError(f"{path}: expected '{name} <rows> <cols>' at line {pos}")
        try:
            rows, cols = int(head[1]), int(head[2])
        except ValueError:
            raise ParseError(f"{path}: bad {name} dimensions at line {pos}") from None
        out = []
        for _ in range(rows):
            try:
                out.append([float(v) for v in take(f"{name} row").split(",")])
            except ValueError as exc:
                raise ParseError(f"{path}: bad number at line {pos}: {exc}") from None
        arr = np.array(out)
        if arr.shape != (rows, cols):
            raise ParseError(f"{path}: {name} block is {arr.shape}, header says {(rows, cols)}")
        return arr

    gallery = matrix("gallery")
    take("offset")  # section header
    try:
        offset = np.array([float(v) for v in take("offset row").split(",")])
    except ValueError as exc:
        raise ParseError(f"{path}: bad number in offset: {exc}") from None
    weights = matrix("weights")
    if offset.size != gallery.shape[0] or weights.shape[0] != gallery.shape[0] + 1:
        raise ParseError(f"{path}: inconsistent model dimensions")
    if weights.shape[1] != n_classes:
        raise ParseError(f"{path}: {weights.shape[1]} weight columns for {n_classes} classes")
    return TrainedModel(
        layout_id=layout,
        class_labels=labels,
        gallery=gallery,
        mean_offset=offset,
        weights=weights,
    )
