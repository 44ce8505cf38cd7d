"""Command line front end.

Three subcommands:

* ``extract``     write per-image feature vectors to CSV
* ``experiment``  run an identification / verification experiment
* ``synth``       write a synthetic polar test pattern as a PGM

Every experiment drops a canonical copy of its effective configuration
(``run_config_<hash>.ini``) next to its outputs, and the same 8-digit
hash is embedded in each output file name, so rerunning an identical
configuration overwrites the previous files with byte-identical ones.
Exit codes: 0 success, 1 failed self-check (synth-oracle), 2 bad input
or I/O trouble.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import (
    EXPERIMENTS,
    LAYOUTS,
    MODES,
    ORIENTATIONS,
    RunConfig,
    config_hash,
    load_run_config,
    resolved_text,
)
from .dataset import Dataset, load_dataset_dir, normalize_face, save_pgm
from .errors import ConfigError, PolarFaceError
from .evaluate import (
    cmc,
    equal_error_rate,
    learning_curve,
    per_feature_error_rates,
    random_split,
    run_error_experiment,
    score_matrix,
    subject_count_curve,
    verification_pairs,
    verification_roc,
    fused_predictor,
    pfld_predictor,
    write_cmc_csv,
    write_matrix_csv,
    write_roc_csv,
    write_summary_csv,
)
from .features import (
    FBTConfig,
    FeatureVector,
    dft_error_map,
    extract_dft,
    extract_fbt,
    fbt,
    fbt_error_map,
    synth_angular,
    synth_mix,
    synth_radial,
    write_feature_file,
)
from .fileio import atomic_write_text
from .polar import to_polar


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="FILE", help="INI config file")
    sub.add_argument("--mode", choices=MODES)
    sub.add_argument("--dataset", metavar="PATH")
    sub.add_argument("--layout", choices=LAYOUTS)
    sub.add_argument("--k-train", type=int, dest="k_train", metavar="K")
    sub.add_argument("--reps", type=int, metavar="N")
    sub.add_argument("--seed", type=int, metavar="S")
    sub.add_argument("--normalize", action="store_true", default=None)
    sub.add_argument("--out", metavar="DIR")
    sub.add_argument("--workers", type=int, metavar="N")
    sub.add_argument("--score-orientation", choices=ORIENTATIONS, dest="score_orientation")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarface",
        description="Polar-frequency face recognition experiments.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_ext = subs.add_parser("extract", help="write feature CSVs for a dataset")
    _add_common(p_ext)
    p_ext.set_defaults(func=cmd_extract)

    p_exp = subs.add_parser("experiment", help="run an experiment")
    p_exp.add_argument(
        "experiment_type",
        nargs="?",
        choices=EXPERIMENTS,
        help="defaults to the config file's experiment.type",
    )
    _add_common(p_exp)
    p_exp.set_defaults(func=cmd_experiment)

    p_syn = subs.add_parser("synth", help="write a synthetic test pattern")
    p_syn.add_argument("kind", choices=("radial", "angular", "mix"))
    p_syn.add_argument("cycles", help="radial: float, angular: int, mix: R,A")
    p_syn.add_argument("size", type=int)
    p_syn.add_argument("out")
    p_syn.set_defaults(func=cmd_synth)
    return parser


def _resolve(args) -> RunConfig:
    overrides = {
        "mode": args.mode,
        "dataset": args.dataset,
        "layout": args.layout,
        "k_train": args.k_train,
        "repetitions": args.reps,
        "seed": args.seed,
        "normalize": args.normalize,
        "out": args.out,
        "workers": args.workers,
        "score_orientation": args.score_orientation,
        "experiment": getattr(args, "experiment_type", None),
    }
    return load_run_config(args.config, overrides)


def _load_dataset(cfg: RunConfig) -> Dataset:
    if not cfg.dataset:
        raise ConfigError("no dataset given (use --dataset or [run] dataset)")
    return load_dataset_dir(cfg.dataset, layout=cfg.layout)


def _feature_tables(dataset: Dataset, cfg: RunConfig) -> dict[str, dict[str, FeatureVector]]:
    """Per-mode {image_id: FeatureVector} maps, dataset order preserved."""
    modes = ("fbt", "dft") if cfg.mode == "fused" else (cfg.mode,)

    def work(entry):
        img = entry.load()
        if cfg.normalize:
            if entry.eyes is None:
                raise ConfigError(
                    f"normalization needs eye coordinates but {entry.image_id!r} "
                    "has none (provide a 6-field flat manifest)"
                )
            img = normalize_face(img, entry.eyes[0], entry.eyes[1], cfg.normalization)
        row = {}
        if "fbt" in modes:
            row["fbt"] = extract_fbt(img, cfg.fbt)
        if "dft" in modes:
            row["dft"] = extract_dft(img, cfg.dft)
        return row

    entries = list(dataset)
    if cfg.workers > 1 and len(entries) > 1:
        # first image serially so the cached basis tables are built once
        first = work(entries[0])
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = [first, *pool.map(work, entries[1:])]
    else:
        rows = [work(e) for e in entries]
    tables: dict[str, dict[str, FeatureVector]] = {m: {} for m in modes}
    for entry, row in zip(entries, rows):
        for m in modes:
            tables[m][entry.image_id] = row[m]
    return tables


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config_copy(cfg: RunConfig, out: Path, tag: str) -> None:
    atomic_write_text(out / f"run_config_{tag}.ini", resolved_text(cfg))


def cmd_extract(args) -> int:
    cfg = _resolve(args)
    dataset = _load_dataset(cfg)
    tables = _feature_tables(dataset, cfg)
    out = _out_dir(cfg)
    tag = config_hash(cfg)
    _write_config_copy(cfg, out, tag)
    for mode, table in tables.items():
        path = out / f"features_{mode}_{tag}.csv"
        rows = [(e.image_id, e.subject_id, table[e.image_id]) for e in dataset]
        write_feature_file(path, rows)
        dim = next(iter(table.values())).values.size
        print(f"extract[{mode}]: {len(rows)} images, {dim} features -> {path}")
    return 0


def _predictor_factory(cfg: RunConfig, tables):
    if cfg.mode == "fused":
        return fused_predictor(tables["fbt"], tables["dft"])
    return pfld_predictor(tables[cfg.mode])


def _embedding_distances(table, train_ids, probe_ids, subject_of):
    """Min Euclidean distance from each probe to each claimed subject's
    gallery examples; distance-like by construction."""
    labels = sorted({str(subject_of[i]) for i in train_ids})
    gallery = {
        lab: np.stack([table[i].values for i in train_ids if str(subject_of[i]) == lab])
        for lab in labels
    }
    rows = np.empty((len(probe_ids), len(labels)))
    for r, pid in enumerate(probe_ids):
        p = table[pid].values
        for c, lab in enumerate(labels):
            diff = gallery[lab] - p
            rows[r, c] = np.sqrt(np.einsum("ij,ij->i", diff, diff).min())
    return rows, tuple(labels)


def _split_pairs(claim, true_subjects, labels):
    index_of = {lab: j for j, lab in enumerate(labels)}
    truth = np.array([index_of[t] for t in true_subjects])
    mask = np.zeros(claim.shape, dtype=bool)
    mask[np.arange(len(truth)), truth] = True
    return claim[mask].ravel(), claim[~mask].ravel()


_ORACLE_FBT = FBTConfig(max_order=30, max_root=10, angular_resolution=0.5)
_ORACLE_SIZE = 131


def _oracle_peaks(image) -> list[tuple[tuple[int, int], float]]:
    """Spectrum cells sorted by descending modulus, DC cell excluded."""
    spectrum = fbt(to_polar(image, _ORACLE_FBT.angular_resolution), _ORACLE_FBT)
    mod = spectrum.modulus()
    cells = []
    for n in range(_ORACLE_FBT.max_order + 1):
        for i in range(1, _ORACLE_FBT.max_root + 1):
            if (n, i) == (0, 1):
                continue
            cells.append(((n, i), float(mod[n, i - 1])))
    cells.sort(key=lambda c: -c[1])
    return cells


def _run_synth_oracle(out: Path, tag: str) -> tuple[list[str], bool]:
    """Peak-location self-checks on analytically understood patterns."""
    rows = ["check,expected,observed,status"]
    all_ok = True

    def record(name, expected, observed):
        nonlocal all_ok
        ok = expected == observed
        all_ok = all_ok and ok
        status = "PASS" if ok else "FAIL"
        exp_text = "+".join(f"({n};{i})" for n, i in sorted(expected))
        obs_text = "+".join(f"({n};{i})" for n, i in sorted(observed))
        rows.append(f"{name},{exp_text},{obs_text},{status}")
        print(f"synth-oracle {name}: expected {exp_text} observed {obs_text} {status}")

    peaks = _oracle_peaks(synth_radial(8, _ORACLE_SIZE))
    record("radial-8", {(0, 8)}, {peaks[0][0]})
    peaks = _oracle_peaks(synth_angular(4, _ORACLE_SIZE))
    record("angular-4", {(4, 1)}, {peaks[0][0]})
    peaks = _oracle_peaks(synth_mix(8, 4, _ORACLE_SIZE))
    record("mix-8-4", {(0, 8), (4, 1)}, {peaks[0][0], peaks[1][0]})

    atomic_write_text(out / f"synth_oracle_{tag}.csv", "\n".join(rows) + "\n")
    return rows, all_ok


def _curve_csv(path, column: str, points) -> None:
    lines = [f"{column},mean,sem"]
    for x, report in points:
        lines.append(f"{x},{report.mean_error:.17g},{report.sem:.17g}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def cmd_experiment(args) -> int:
    cfg = _resolve(args)
    out = _out_dir(cfg)
    tag = config_hash(cfg)
    _write_config_copy(cfg, out, tag)

    if cfg.experiment == "synth-oracle":
        _, ok = _run_synth_oracle(out, tag)
        return 0 if ok else 1

    dataset = _load_dataset(cfg)
    tables = _feature_tables(dataset, cfg)
    entries = dataset.id_subject_pairs()
    subject_of = {i: s for i, s in entries}
    summary = []

    if cfg.experiment == "error-rate":
        report = run_error_experiment(entries, cfg.split, _predictor_factory(cfg, tables))
        summary.append((f"error-rate-{cfg.mode}", report.mean_error, report.sem, None))
        print(f"error-rate[{cfg.mode}]: error {report.mean_error:.3f} sem {report.sem:.3f}")

    elif cfg.experiment == "learning-curve":
        points = learning_curve(entries, cfg.split, _predictor_factory(cfg, tables), cfg.k_values)
        _curve_csv(out / f"learning_curve_{cfg.mode}_{tag}.csv", "k_train", points)
        for k, report in points:
            summary.append((f"learning-curve-k{k}-{cfg.mode}", report.mean_error, report.sem, None))
            print(
                f"learning-curve[{cfg.mode}] k={k}: "
                f"error {report.mean_error:.3f} sem {report.sem:.3f}"
            )

    elif cfg.experiment == "subject-curve":
        if not cfg.subject_counts:
            raise ConfigError("subject-curve needs experiment.subject_counts")
        points = subject_count_curve(
            entries, cfg.split, _predictor_factory(cfg, tables), cfg.subject_counts
        )
        _curve_csv(out / f"subject_curve_{cfg.mode}_{tag}.csv", "n_subjects", points)
        for c, report in points:
            summary.append((f"subject-curve-n{c}-{cfg.mode}", report.mean_error, report.sem, None))
            print(
                f"subject-curve[{cfg.mode}] n={c}: "
                f"error {report.mean_error:.3f} sem {report.sem:.3f}"
            )

    elif cfg.experiment == "cmc":
        train_ids, probe_ids = random_split(entries, cfg.split, 0)
        features_b = tables["dft"] if cfg.mode == "fused" else None
        table = tables["fbt"] if cfg.mode == "fused" else tables[cfg.mode]
        scores, labels = score_matrix(table, train_ids, probe_ids, subject_of, features_b)
        truths = [subject_of[p] for p in probe_ids]
        curve = cmc(scores, truths, labels)
        write_cmc_csv(out / f"cmc_{cfg.mode}_{tag}.csv", curve)
        rank1_error = 100.0 * (1.0 - float(curve.proportions[0]))
        summary.append((f"cmc-{cfg.mode}", rank1_error, 0.0, None))
        print(
            f"cmc[{cfg.mode}]: rank-1 error {rank1_error:.3f} "
            f"over {len(probe_ids)} probes"
        )

    elif cfg.experiment == "roc":
        train_ids, probe_ids = random_split(entries, cfg.split, 0)
        truths = [subject_of[p] for p in probe_ids]
        if cfg.verification_score == "embedding":
            if cfg.mode == "fused":
                raise ConfigError("embedding verification needs a single spectrum mode")
            dists, labels = _embedding_distances(
                tables[cfg.mode], train_ids, probe_ids, subject_of
            )
            claim = dists if cfg.score_orientation == "distance" else -dists
            genuine, impostor = _split_pairs(claim, truths, labels)
        else:
            features_b = tables["dft"] if cfg.mode == "fused" else None
            table = tables["fbt"] if cfg.mode == "fused" else tables[cfg.mode]
            scores, labels = score_matrix(table, train_ids, probe_ids, subject_of, features_b)
            genuine, impostor = verification_pairs(scores, truths, labels, cfg.score_orientation)
        roc = verification_roc(genuine, impostor, cfg.score_orientation)
        eer = equal_error_rate(roc)
        write_roc_csv(out / f"roc_{cfg.mode}_{tag}.csv", roc)
        summary.append((f"roc-{cfg.mode}", 100.0 * eer.eer, 0.0, eer.eer))
        print(
            f"roc[{cfg.mode}]: eer {100.0 * eer.eer:.3f} between thresholds "
            f"{eer.threshold_low:.6g} and {eer.threshold_high:.6g}"
        )

    elif cfg.experiment == "feature-map":
        if cfg.mode == "fused":
            raise ConfigError("feature-map needs a single spectrum mode (fbt or dft)")
        table = tables[cfg.mode]
        values = np.stack([table[i].values for i, _ in entries])
        errors = per_feature_error_rates(entries, values, cfg.split)
        if cfg.mode == "fbt":
            planes = fbt_error_map(errors, cfg.fbt.max_order, cfg.fbt.max_root)
            write_matrix_csv(out / f"feature_map_fbt_a_{tag}.csv", planes[0])
            write_matrix_csv(out / f"feature_map_fbt_b_{tag}.csv", planes[1])
        else:
            write_matrix_csv(out / f"feature_map_dft_{tag}.csv", dft_error_map(errors, cfg.dft))
        summary.append((f"feature-map-{cfg.mode}-best", float(errors.min()), 0.0, None))
        summary.append((f"feature-map-{cfg.mode}-worst", float(errors.max()), 0.0, None))
        print(
            f"feature-map[{cfg.mode}]: best {errors.min():.3f} "
            f"worst {errors.max():.3f} over {errors.size} features"
        )

    write_summary_csv(out / f"summary_{tag}.csv", summary)
    return 0


def cmd_synth(args) -> int:
    if args.size < 2:
        raise ConfigError(f"pattern size must be at least 2, got {args.size}")
    try:
        if args.kind == "radial":
            image = synth_radial(float(args.cycles), args.size)
        elif args.kind == "angular":
            image = synth_angular(int(args.cycles), args.size)
        else:
            r_text, a_text = args.cycles.split(",")
            image = synth_mix(float(r_text), int(a_text), args.size)
    except ValueError:
        raise ConfigError(
            f"bad cycles value {args.cycles!r} for kind {args.kind!r}"
        ) from None
    save_pgm(args.out, np.rint(image * 255.0), maxval=255)
    print(f"synth {args.kind} cycles {args.cycles} size {args.size} -> {args.out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PolarFaceError, OSError) as exc:
        print(f"polarface: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
