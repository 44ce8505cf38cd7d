"""Shared image builders for the tests (not fixtures, plain functions)."""

import numpy as np

from polarface import synth_mix


def pseudo_face(size: int = 101) -> np.ndarray:
    """Smooth face-like arrangement of Gaussian blobs on [0, 1]."""
    c = (size - 1) / 2.0
    ys, xs = np.mgrid[0:size, 0:size].astype(float)

    def blob(x0, y0, sx, sy, amp):
        return amp * np.exp(-(((xs - x0) / sx) ** 2 + ((ys - y0) / sy) ** 2))

    img = 0.35 + np.zeros((size, size))
    img += blob(c - 16, c - 12, 8, 10, 0.45)
    img += blob(c + 16, c - 12, 8, 10, 0.45)
    img += blob(c, c + 6, 5, 9, -0.2)
    img += blob(c, c + 22, 14, 5, 0.35)
    return np.clip(img, 0.0, 1.0)


def jittered_mix_images(n_subjects: int = 10, per_subject: int = 10, size: int = 64, seed: int = 11):
    """(image_id, subject_id, image) triples: each subject owns a distinct
    (radial, angular) cycle pair; images jitter the radial cycles and add
    pixel noise, both tiny against the between-subject separation."""
    radial = (4.0, 8.0, 12.0, 16.0, 20.0)
    angular = (3, 6)
    pairs = [(r, a) for a in angular for r in radial][:n_subjects]
    rng = np.random.default_rng(seed)
    out = []
    for s, (r_cyc, a_cyc) in enumerate(pairs):
        for k in range(per_subject):
            img = synth_mix(r_cyc + rng.normal(0.0, 0.05), a_cyc, size)
            img = np.clip(img + rng.normal(0.0, 0.01, size=(size, size)), 0.0, 1.0)
            out.append((f"s{s:02d}/{k:02d}", f"s{s:02d}", img))
    return out
