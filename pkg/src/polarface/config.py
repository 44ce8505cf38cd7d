"""Run configuration: defaults, INI config files, CLI overrides.

Config files are line-oriented `key = value` under `[section]` headers
('#' starts a comment line).  Unknown sections or keys are rejected so
typos fail loudly.  The resolved configuration can be rendered back to
canonical text; its hash (which ignores the output directory and worker
count, neither of which affects results) is embedded in output file
names so reruns with the same effective settings collide byte-for-byte.
The output directory and worker count are execution details, not part
of the canonical text.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, replace

from .dataset import NormalizationConfig
from .errors import ConfigError
from .evaluate import SplitSpec
from .features import DFTConfig, FBTConfig

MODES = ("fbt", "dft", "fused")
LAYOUTS = ("orl", "flat-manifest")
ORIENTATIONS = ("distance", "similarity")
EXPERIMENTS = (
    "error-rate",
    "learning-curve",
    "subject-curve",
    "cmc",
    "roc",
    "feature-map",
    "synth-oracle",
)
VERIFICATION_SCORES = ("posterior", "embedding")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "fbt"
    dataset: str = ""
    layout: str = "orl"
    normalize: bool = False
    out: str = "runs"
    workers: int = 1
    score_orientation: str = "distance"
    experiment: str = "error-rate"
    k_values: tuple[int, ...] = (1, 3, 5)
    subject_counts: tuple[int, ...] = ()
    verification_score: str = "posterior"
    fbt: FBTConfig = field(default_factory=FBTConfig)
    dft: DFTConfig = field(default_factory=DFTConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.layout not in LAYOUTS:
            raise ConfigError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        if self.score_orientation not in ORIENTATIONS:
            raise ConfigError(
                f"score_orientation must be one of {ORIENTATIONS}, "
                f"got {self.score_orientation!r}"
            )
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}"
            )
        if self.verification_score not in VERIFICATION_SCORES:
            raise ConfigError(
                f"verification_score must be one of {VERIFICATION_SCORES}, "
                f"got {self.verification_score!r}"
            )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if not self.k_values:
            raise ConfigError("k_values must not be empty")


def _num(x: float) -> str:
    return f"{x:.17g}"


def _bool(text: str, what: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{what} must be a boolean, got {text!r}")


def _int(text: str, what: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"{what} must be an integer, got {text!r}") from None


def _float(text: str, what: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ConfigError(f"{what} must be a number, got {text!r}") from None


def _int_list(text: str, what: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(_int(part, what) for part in text.split(","))


def _pair(text: str, what: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{what} must be two comma-separated numbers, got {text!r}")
    return (_float(parts[0], what), _float(parts[1], what))


_KNOWN_KEYS = {
    "run": {"mode", "dataset", "layout", "normalize", "out", "workers", "score_orientation"},
    "experiment": {"type", "k_values", "subject_counts", "verification_score"},
    "fbt": {"max_order", "max_root", "angular_resolution"},
    "dft": {"max_cycles"},
    "split": {"k_train", "n_subjects", "repetitions", "seed"},
    "normalize": {
        "left_eye_target",
        "right_eye_target",
        "crop_width",
        "crop_height",
        "ellipse_center",
        "ellipse_axes",
    },
}


def load_run_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, overlaid with a config file, overlaid with CLI values."""
    cfg = RunConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"bad config file {path}: {exc}") from None
        for section in parser.sections():
            if section not in _KNOWN_KEYS:
                raise ConfigError(f"{path}: unknown config section [{section}]")
            for key in parser[section]:
                if key not in _KNOWN_KEYS[section]:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
        g = parser.get
        if parser.has_section("run"):
            run = parser["run"]
            cfg = replace(
                cfg,
                mode=run.get("mode", cfg.mode).strip(),
                dataset=run.get("dataset", cfg.dataset).strip(),
                layout=run.get("layout", cfg.layout).strip(),
                normalize=_bool(run.get("normalize", str(cfg.normalize)), "run.normalize"),
                out=run.get("out", cfg.out).strip(),
                workers=_int(run.get("workers", str(cfg.workers)), "run.workers"),
                score_orientation=run.get("score_orientation", cfg.score_orientation).strip(),
            )
        if parser.has_section("experiment"):
            ex = parser["experiment"]
            cfg = replace(
                cfg,
                experiment=ex.get("type", cfg.experiment).strip(),
                k_values=_int_list(ex.get("k_values", ""), "experiment.k_values") or cfg.k_values,
                subject_counts=_int_list(ex.get("subject_counts", ""), "experiment.subject_counts")
                or cfg.subject_counts,
                verification_score=ex.get("verification_score", cfg.verification_score).strip(),
            )
        if parser.has_section("fbt"):
            fb = parser["fbt"]
            cfg = replace(
                cfg,
                fbt=FBTConfig(
                    max_order=_int(fb.get("max_order", str(cfg.fbt.max_order)), "fbt.max_order"),
                    max_root=_int(fb.get("max_root", str(cfg.fbt.max_root)), "fbt.max_root"),
                    angular_resolution=_float(
                        fb.get("angular_resolution", _num(cfg.fbt.angular_resolution)),
                        "fbt.angular_resolution",
                    ),
                ),
            )
        if parser.has_section("dft"):
            cfg = replace(
                cfg,
                dft=DFTConfig(
                    max_cycles=_float(
                        g("dft", "max_cycles", fallback=_num(cfg.dft.max_cycles)),
                        "dft.max_cycles",
                    )
                ),
            )
        if parser.has_section("split"):
            sp = parser["split"]
            n_subj_text = sp.get("n_subjects", "").strip()
            cfg = replace(
                cfg,
                split=SplitSpec(
                    k_train=_int(sp.get("k_train", str(cfg.split.k_train)), "split.k_train"),
                    n_subjects=_int(n_subj_text, "split.n_subjects") if n_subj_text else None,
                    repetitions=_int(
                        sp.get("repetitions", str(cfg.split.repetitions)), "split.repetitions"
                    ),
                    seed=_int(sp.get("seed", str(cfg.split.seed)), "split.seed"),
                ),
            )
        if parser.has_section("normalize"):
            nm = parser["normalize"]
            d = cfg.normalization
            cfg = replace(
                cfg,
                normalization=NormalizationConfig(
                    left_eye_target=_pair(
                        nm.get("left_eye_target", f"{d.left_eye_target[0]},{d.left_eye_target[1]}"),
                        "normalize.left_eye_target",
                    ),
                    right_eye_target=_pair(
                        nm.get("right_eye_target", f"{d.right_eye_target[0]},{d.right_eye_target[1]}"),
                        "normalize.right_eye_target",
                    ),
                    crop_width=_int(nm.get("crop_width", str(d.crop_width)), "normalize.crop_width"),
                    crop_height=_int(nm.get("crop_height", str(d.crop_height)), "normalize.crop_height"),
                    ellipse_center=_pair(
                        nm.get("ellipse_center", f"{d.ellipse_center[0]},{d.ellipse_center[1]}"),
                        "normalize.ellipse_center",
                    ),
                    ellipse_axes=_pair(
                        nm.get("ellipse_axes", f"{d.ellipse_axes[0]},{d.ellipse_axes[1]}"),
                        "normalize.ellipse_axes",
                    ),
                ),
            )
    if overrides:
        direct = {
            k: v
            for k, v in overrides.items()
            if v is not None
            and k in ("mode", "dataset", "layout", "normalize", "out", "workers",
                      "score_orientation", "experiment")
        }
        cfg = replace(cfg, **direct)
        split_kw = {}
        for src, dst in (("k_train", "k_train"), ("repetitions", "repetitions"), ("seed", "seed")):
            if overrides.get(src) is not None:
                split_kw[dst] = overrides[src]
        if split_kw:
            cfg = replace(cfg, split=replace(cfg.split, **split_kw))
    return cfg


def resolved_text(cfg: RunConfig) -> str:
    """Canonical INI rendering of every result-relevant setting."""
    n_subjects = "" if cfg.split.n_subjects is None else str(cfg.split.n_subjects)
    return "\n".join(
        [
            "[run]",
            f"dataset = {cfg.dataset}",
            f"layout = {cfg.layout}",
            f"mode = {cfg.mode}",
            f"normalize = {'true' if cfg.normalize else 'false'}",
            f"score_orientation = {cfg.score_orientation}",
            "",
            "[experiment]",
            f"k_values = {','.join(str(k) for k in cfg.k_values)}",
            f"subject_counts = {','.join(str(c) for c in cfg.subject_counts)}",
            f"type = {cfg.experiment}",
            f"verification_score = {cfg.verification_score}",
            "",
            "[fbt]",
            f"angular_resolution = {_num(cfg.fbt.angular_resolution)}",
            f"max_order = {cfg.fbt.max_order}",
            f"max_root = {cfg.fbt.max_root}",
            "",
            "[dft]",
            f"max_cycles = {_num(cfg.dft.max_cycles)}",
            "",
            "[split]",
            f"k_train = {cfg.split.k_train}",
            f"n_subjects = {n_subjects}",
            f"repetitions = {cfg.split.repetitions}",
            f"seed = {cfg.split.seed}",
            "",
            "[normalize]",
            f"crop_height = {cfg.normalization.crop_height}",
            f"crop_width = {cfg.normalization.crop_width}",
            f"ellipse_axes = {_num(cfg.normalization.ellipse_axes[0])},{_num(cfg.normalization.ellipse_axes[1])}",
            f"ellipse_center = {_num(cfg.normalization.ellipse_center[0])},{_num(cfg.normalization.ellipse_center[1])}",
            f"left_eye_target = {_num(cfg.normalization.left_eye_target[0])},{_num(cfg.normalization.left_eye_target[1])}",
            f"right_eye_target = {_num(cfg.normalization.right_eye_target[0])},{_num(cfg.normalization.right_eye_target[1])}",
            "",
        ]
    )


def config_hash(cfg: RunConfig) -> str:
    """Eight hex digits over the canonical text."""
    return hashlib.sha1(resolved_text(cfg).encode("utf-8")).hexdigest()[:8]
