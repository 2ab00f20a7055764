"""Batch commands behind the CLI: classify, enhance, evaluate, split,
augment, and report.

Every command is a plain function taking parsed inputs plus a PipelineConfig
and returning a process exit code (0 ok, 2 empty input or parse failure,
3 missing weights, 4 bad parameters). All outputs are deterministic for a
given (input set, config, seed) at any thread count: per-image work is pure,
results are collected in input order, and output files never embed absolute
paths or timestamps.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classify import (
    Category8,
    ClassifierThresholds,
    RANK_ORDER,
    classify,
    cooccurrence_csv,
    summarize,
    summary_csv,
)
from .enhance import ClaheParams, NlmParams, StepKind, apply_plan, build_plan
from .errors import AquaClearError, ConfigError, CsvParseError
from .image import ImageF32, channel_stats, laplacian_variance, load_ppm, save_ppm
from .metrics import EvalItem, evaluate_batch, report_csv
from .neural import (
    attention_map,
    build_resnet_head,
    build_vgg_head,
    conv_output_dim,
    extract_features,
    feature_guided_enhance,
    fuse_attention,
    init_weights,
    load_weights,
)

__all__ = [
    "PipelineConfig",
    "EXIT_OK",
    "EXIT_EMPTY",
    "EXIT_MISSING_WEIGHTS",
    "EXIT_BAD_PARAMS",
    "METHOD_LABELS",
    "cmd_classify",
    "cmd_enhance",
    "cmd_evaluate",
    "cmd_split",
    "cmd_augment",
    "cmd_report",
]

EXIT_OK = 0
EXIT_EMPTY = 2
EXIT_MISSING_WEIGHTS = 3
EXIT_BAD_PARAMS = 4

# filename method token -> report label
METHOD_LABELS = {
    "classic": "Classic",
    "vgg": "VGG19",
    "resnet": "ResNet50",
    "unite": "Unite",
}


@dataclass(frozen=True)
class NeuralConfig:
    method: str = "classic"
    gain: float = 0.5
    seed: int = 7
    vgg_manifest: str | None = None
    resnet_manifest: str | None = None

    def __post_init__(self):
        if self.method not in ("classic", "vgg", "resnet", "unite"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.gain < 0.0:
            raise ConfigError("gain must be >= 0")


@dataclass(frozen=True)
class SharpenConfig:
    strength: float = 1.0
    kernel_mode: str = "zero_sum"

    def __post_init__(self):
        if self.strength < 0.0:
            raise ConfigError("sharpen strength must be >= 0")
        if self.kernel_mode not in ("zero_sum", "paper"):
            raise ConfigError(f"unknown kernel_mode {self.kernel_mode!r}")


@dataclass(frozen=True)
class AugmentConfig:
    crop_fraction: float = 0.8
    jitter_amplitude: float = 0.1
    samples_per_image: int = 2

    def __post_init__(self):
        if not 0.0 < self.crop_fraction <= 1.0:
            raise ConfigError("crop_fraction must lie in (0, 1]")
        if not 0.0 <= self.jitter_amplitude < 1.0:
            raise ConfigError("jitter_amplitude must lie in [0, 1)")
        if self.samples_per_image < 1:
            raise ConfigError("samples_per_image must be >= 1")


@dataclass(frozen=True)
class PipelineConfig:
    thresholds: ClassifierThresholds = field(default_factory=ClassifierThresholds)
    clahe: ClaheParams = field(default_factory=ClaheParams)
    nlm: NlmParams = field(default_factory=NlmParams)
    sharpen: SharpenConfig = field(default_factory=SharpenConfig)
    neural: NeuralConfig = field(default_factory=NeuralConfig)
    split_ratios: tuple = (8.0, 1.0, 1.0)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    output_dir: str = "out"
    reference_dir: str | None = None
    seed: int = 7
    threads: int = 1

    def __post_init__(self):
        if len(self.split_ratios) != 3 or any(r <= 0 for r in self.split_ratios):
            raise ConfigError("split ratios must be three positive numbers")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        """Build from a JSON document, validating every section."""
        known = {
            "thresholds", "clahe", "nlm", "sharpen", "neural", "split",
            "augment", "output_dir", "reference_dir", "seed", "threads",
        }
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        def section(name, ctor, **renames):
            sub = doc.get(name, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"{name} must be an object")
            kwargs = {renames.get(k, k): v for k, v in sub.items()}
            try:
                return ctor(**kwargs)
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad {name} section: {exc}") from exc

        split = doc.get("split", {})
        ratios = tuple(float(r) for r in split.get("ratios", (8, 1, 1)))
        try:
            return cls(
                thresholds=section("thresholds", ClassifierThresholds),
                clahe=section("clahe", ClaheParams),
                nlm=section("nlm", NlmParams),
                sharpen=section("sharpen", SharpenConfig),
                neural=section("neural", NeuralConfig),
                split_ratios=ratios,
                augment=section("augment", AugmentConfig),
                output_dir=str(doc.get("output_dir", "out")),
                reference_dir=(
                    str(doc["reference_dir"])
                    if doc.get("reference_dir") is not None
                    else None
                ),
                seed=int(doc.get("seed", 7)),
                threads=int(doc.get("threads", 1)),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CsvParseError(0, f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(doc)

    def plan_overrides(self) -> dict:
        from dataclasses import asdict

        return {
            StepKind.CLAHE: asdict(self.clahe),
            StepKind.DENOISE: asdict(self.nlm),
            StepKind.SHARPEN: asdict(self.sharpen),
        }


def _list_ppms(directory) -> list:
    return sorted(Path(directory).glob("*.ppm"), key=lambda p: p.name)


def _pmap(fn, items, threads: int) -> list:
    """Map preserving input order; fans out to a thread pool when asked."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _log(verbose: bool, message: str) -> None:
    if verbose:
        print(message, file=sys.stderr)


# ----------------------------------------------------------------- classify

def cmd_classify(input_dir, config: PipelineConfig, output_dir=None,
                 verbose: bool = False) -> int:
    """Label every PPM and write labels.csv, summary.csv, cooccurrence.csv."""
    out = Path(output_dir or config.output_dir)
    files = _list_ppms(input_dir)
    if not files:
        print("no input images", file=sys.stderr)
        return EXIT_EMPTY

    def one(path):
        try:
            img = load_ppm(path)
        except AquaClearError as exc:
            return (path.name, None, str(exc))
        flags, category = classify(img, config.thresholds)
        return (path.name, (flags, category), None)

    results = _pmap(one, files, config.threads)
    rows, labels, skipped = [], [], 0
    for name, payload, err in results:
        if payload is None:
            skipped += 1
            _log(True, f"skipping {name}: {err}")
            continue
        flags, category = payload
        rows.append(
            f"{name},{int(flags.color_cast)},{int(flags.low_light)},"
            f"{int(flags.blurred)},{category.name.lower()}"
        )
        labels.append(category)

    if not labels:
        print("no input images", file=sys.stderr)
        return EXIT_EMPTY
    _write(out / "labels.csv", "file,cast,lowlight,blur,category\n" + "\n".join(rows) + "\n")
    report = summarize(labels)
    _write(out / "summary.csv", summary_csv(report))
    _write(out / "cooccurrence.csv", cooccurrence_csv(report))
    print(f"classified {len(labels)} images, skipped {skipped}")
    return EXIT_OK


# ------------------------------------------------------------------ enhance

def _axis_ok(spec, extent: int) -> bool:
    """Whether one spatial extent survives the head's convs and poolings."""
    e = extent
    for layer in spec.layers:
        if layer.kind == "conv":
            if e + 2 * layer.padding < layer.kernel:
                return False
            e = conv_output_dim(e, layer.kernel, layer.stride, layer.padding)
        elif layer.kind == "pool":
            if e % 2:
                return False
            e //= 2
        if layer.name == spec.tap:
            return True
    return True


def _largest_valid(specs, extent: int) -> int | None:
    for e in range(extent, max(extent - 64, 7), -1):
        if all(_axis_ok(s, e) for s in specs):
            return e
    return None


def _center_crop(img: ImageF32, h: int, w: int) -> ImageF32:
    top = (img.height - h) // 2
    left = (img.width - w) // 2
    return ImageF32(np.ascontiguousarray(img.data[:, top : top + h, left : left + w]))


def _load_heads(config: PipelineConfig, method: str, seed: int):
    """Build and bind the extractor(s) a method needs, or raise."""
    heads = {}
    if method in ("vgg", "unite"):
        spec = build_vgg_head()
        if config.neural.vgg_manifest:
            heads["vgg"] = load_weights(spec, config.neural.vgg_manifest)
        else:
            heads["vgg"] = init_weights(spec, seed)
    if method in ("resnet", "unite"):
        spec = build_resnet_head()
        if config.neural.resnet_manifest:
            heads["resnet"] = load_weights(spec, config.neural.resnet_manifest)
        else:
            heads["resnet"] = init_weights(spec, seed + 1)
    return heads


def cmd_enhance(input_dir, config: PipelineConfig, output_dir=None,
                method: str | None = None, seed: int | None = None,
                verbose: bool = False) -> int:
    """Enhance every PPM with the chosen method and log each image's plan.

    classic runs the flag-driven filter plan; vgg/resnet/unite first apply
    attention-guided V adjustment from the respective head(s), then the same
    plan. Images whose dims break a head are center-cropped to the nearest
    valid size first.
    """
    out = Path(output_dir or config.output_dir)
    method = method or config.neural.method
    seed = config.seed if seed is None else seed
    if method not in ("classic", "vgg", "resnet", "unite"):
        print(f"unknown method {method!r}", file=sys.stderr)
        return EXIT_BAD_PARAMS
    files = _list_ppms(input_dir)
    if not files:
        print("no input images", file=sys.stderr)
        return EXIT_EMPTY

    for manifest in (config.neural.vgg_manifest, config.neural.resnet_manifest):
        if manifest and not Path(manifest).exists():
            print(f"weight manifest not found: {manifest}", file=sys.stderr)
            return EXIT_MISSING_WEIGHTS
    try:
        heads = _load_heads(config, method, seed)
    except AquaClearError as exc:
        print(f"cannot load weights: {exc}", file=sys.stderr)
        return EXIT_MISSING_WEIGHTS

    overrides = config.plan_overrides()
    specs = [h.spec for h in heads.values()]

    def one(path):
        try:
            img = load_ppm(path)
        except AquaClearError as exc:
            return {"file": path.name, "error": str(exc)}
        record = {"file": path.name, "method": method}
        steps = []

        def on_step(i, kind, intermediate):
            stats = channel_stats(intermediate)
            steps.append(
                {
                    "step": i,
                    "kind": kind.value,
                    "means": [
                        round(stats.mean_r, 9),
                        round(stats.mean_g, 9),
                        round(stats.mean_b, 9),
                    ],
                    "laplacian_variance": round(laplacian_variance(intermediate), 12),
                }
            )

        hook = on_step if verbose else None
        if method == "classic":
            flags, category = classify(img, config.thresholds)
            plan = build_plan(flags, overrides)
            enhanced = apply_plan(img, plan, hook)
        else:
            h_ok = _largest_valid(specs, img.height)
            w_ok = _largest_valid(specs, img.width)
            if h_ok is None or w_ok is None:
                return {"file": path.name, "error": "image too small for extractor"}
            if (h_ok, w_ok) != (img.height, img.width):
                record["cropped"] = [h_ok, w_ok]
                _log(True, f"{path.name}: center-cropped to {w_ok}x{h_ok}")
                img = _center_crop(img, h_ok, w_ok)
            maps = [
                attention_map(extract_features(img, heads[name]), img.height, img.width)
                for name in ("vgg", "resnet")
                if name in heads
            ]
            attn = maps[0] if len(maps) == 1 else fuse_attention(maps[0], maps[1])
            flags, category = classify(img, config.thresholds)
            enhanced = feature_guided_enhance(
                img, attn, config.neural.gain, config.thresholds, overrides, hook
            )
        record["flags"] = {
            "cast": flags.color_cast,
            "lowlight": flags.low_light,
            "blur": flags.blurred,
        }
        record["category"] = category.name.lower()
        record["plan"] = build_plan(flags).kinds()
        if verbose:
            record["steps"] = steps
        out_path = out / f"{path.stem}.{method}.ppm"
        out.mkdir(parents=True, exist_ok=True)
        save_ppm(enhanced, out_path)
        record["output"] = out_path.name
        return record

    records = _pmap(one, files, config.threads)
    out.mkdir(parents=True, exist_ok=True)
    log_lines = [json.dumps(r, sort_keys=True) for r in records]
    _write(out / "enhance_log.jsonl", "\n".join(log_lines) + "\n")
    done = sum(1 for r in records if "error" not in r)
    skipped = len(records) - done
    print(f"enhanced {done} images with {method}, skipped {skipped}")
    return EXIT_OK if done else EXIT_EMPTY


# ----------------------------------------------------------------- evaluate

def _parse_enhanced_name(name: str):
    """'stem.method.ppm' -> (stem, label); bare 'stem.ppm' -> Original."""
    base = name[:-4]
    if "." in base:
        stem, token = base.rsplit(".", 1)
        if token in METHOD_LABELS:
            return stem, METHOD_LABELS[token]
    return base, "Original"


def cmd_evaluate(input_dir, config: PipelineConfig, reference_dir=None,
                 output_dir=None, verbose: bool = False) -> int:
    """Score each enhanced image and write scores.csv (fixed header)."""
    out = Path(output_dir or config.output_dir)
    files = _list_ppms(input_dir)
    if not files:
        print("no images to evaluate", file=sys.stderr)
        return EXIT_EMPTY

    if reference_dir is None:
        reference_dir = config.reference_dir
    ref_dir = Path(reference_dir) if reference_dir else None

    def one(path):
        stem, label = _parse_enhanced_name(path.name)
        try:
            test = load_ppm(path)
        except AquaClearError as exc:
            _log(True, f"skipping {path.name}: {exc}")
            return None
        reference = None
        if ref_dir is not None:
            ref_path = ref_dir / f"{stem}.ppm"
            if ref_path.exists():
                try:
                    reference = load_ppm(ref_path)
                except AquaClearError as exc:
                    _log(True, f"unusable reference {ref_path.name}: {exc}")
            else:
                _log(True, f"no reference for {path.name}")
        if reference is not None and reference.data.shape != test.data.shape:
            _log(True, f"reference shape mismatch for {path.name}, scoring without it")
            reference = None
        return EvalItem(image=stem, method=label, test=test, reference=reference)

    items = [i for i in _pmap(one, files, config.threads) if i is not None]
    if not items:
        print("no images to evaluate", file=sys.stderr)
        return EXIT_EMPTY
    report = evaluate_batch(items)
    _write(out / "scores.csv", report_csv(report))
    print(f"evaluated {len(items)} images")
    return EXIT_OK


# -------------------------------------------------------------------- split

def _largest_remainder(total: int, ratios) -> list:
    weights = [r / sum(ratios) for r in ratios]
    quotas = [total * w for w in weights]
    counts = [int(math.floor(q)) for q in quotas]
    leftover = total - sum(counts)
    by_frac = sorted(
        range(len(ratios)), key=lambda i: (-(quotas[i] - counts[i]), i)
    )
    for i in by_frac[:leftover]:
        counts[i] += 1
    return counts


def cmd_split(input_dir, config: PipelineConfig, output_dir=None,
              seed: int | None = None, verbose: bool = False) -> int:
    """Shuffle the file list and allocate train/val/test by largest remainder."""
    out = Path(output_dir or config.output_dir)
    seed = config.seed if seed is None else seed
    files = _list_ppms(input_dir)
    if len(files) < 3:
        print("need at least 3 files to split", file=sys.stderr)
        return EXIT_EMPTY
    counts = _largest_remainder(len(files), config.split_ratios)
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(files))
    buckets = {}
    cursor = 0
    for bucket, n in zip(("train", "val", "test"), counts):
        for idx in order[cursor : cursor + n]:
            buckets[files[int(idx)].name] = bucket
        cursor += n
    lines = ["file,bucket"] + [f"{f.name},{buckets[f.name]}" for f in files]
    _write(out / "split.csv", "\n".join(lines) + "\n")
    print(
        f"split {len(files)} files: train={counts[0]} val={counts[1]} test={counts[2]}"
    )
    return EXIT_OK


# ------------------------------------------------------------------ augment

def _augment_rng(seed: int, name: str, sample: int) -> np.random.Generator:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    file_key = int.from_bytes(digest[:8], "big")
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([seed, file_key, sample])
    ))


def cmd_augment(input_dir, config: PipelineConfig, output_dir=None,
                seed: int | None = None, verbose: bool = False) -> int:
    """Seeded random crop + per-channel gain jitter, samples_per_image each.

    The per-sample generator is derived from (seed, file name, sample index)
    and draws, in order: top offset, left offset, then R/G/B gains.
    """
    out = Path(output_dir or config.output_dir)
    seed = config.seed if seed is None else seed
    aug = config.augment
    files = _list_ppms(input_dir)
    if not files:
        print("no input images", file=sys.stderr)
        return EXIT_EMPTY

    def one(path):
        try:
            img = load_ppm(path)
        except AquaClearError as exc:
            _log(True, f"skipping {path.name}: {exc}")
            return 0
        crop_h = int(round(aug.crop_fraction * img.height))
        crop_w = int(round(aug.crop_fraction * img.width))
        if crop_h < 1 or crop_w < 1:
            return None  # crop smaller than one pixel
        out.mkdir(parents=True, exist_ok=True)
        for k in range(aug.samples_per_image):
            rng = _augment_rng(seed, path.name, k)
            top = int(rng.integers(0, img.height - crop_h + 1))
            left = int(rng.integers(0, img.width - crop_w + 1))
            gains = rng.uniform(
                1.0 - aug.jitter_amplitude, 1.0 + aug.jitter_amplitude, size=3
            )
            cropped = img.data[:, top : top + crop_h, left : left + crop_w]
            jittered = cropped.astype(np.float64) * gains[:, None, None]
            save_ppm(
                ImageF32.from_array(jittered), out / f"{path.stem}.aug{k}.ppm"
            )
        return aug.samples_per_image

    results = _pmap(one, files, config.threads)
    if any(r is None for r in results):
        print("crop_fraction yields an empty crop", file=sys.stderr)
        return EXIT_BAD_PARAMS
    made = sum(r for r in results)
    print(f"augmented {len(files)} images into {made} samples")
    return EXIT_OK


# ------------------------------------------------------------------- report

def _read_csv(path: Path) -> list:
    try:
        text = path.read_text()
    except OSError as exc:
        raise CsvParseError(0, f"cannot read {path.name}: {exc}") from exc
    rows = []
    reader = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(reader, start=1):
        if row:
            rows.append((lineno, row))
    return rows


def _markdown_table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |",
             "| " + " | ".join("---" for _ in header) + " |"]
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    return "\n".join(lines)


def cmd_report(input_dir, config: PipelineConfig, output_dir=None,
               verbose: bool = False) -> int:
    """Combine labels.csv and scores.csv into report.md plus report.csv.

    The Markdown carries the category table and the method-by-metric table;
    the CSV holds the compact method summary (method,psnr,uciqe,uiqm).
    """
    src = Path(input_dir)
    out = Path(output_dir or config.output_dir)
    labels_path = src / "labels.csv"
    scores_path = src / "scores.csv"

    try:
        label_rows = _read_csv(labels_path)
        if not label_rows or label_rows[0][1] != ["file", "cast", "lowlight", "blur", "category"]:
            raise CsvParseError(1, "labels.csv missing expected header")
        by_name = {c.name.lower(): c for c in Category8}
        labels = []
        for lineno, row in label_rows[1:]:
            if len(row) != 5 or row[4] not in by_name:
                raise CsvParseError(lineno, f"bad labels row: {','.join(row)}")
            labels.append(by_name[row[4]])
        if not labels:
            raise CsvParseError(1, "labels.csv has no data rows")
        summary = summarize(labels)

        score_rows = []
        have_scores = scores_path.exists()
        if have_scores:
            parsed = _read_csv(scores_path)
            if parsed:
                expected = "image,method,psnr,uciqe,uiqm,sigma_c,con_l,mu_s,uicm,uism,uiconm"
                if parsed[0][1] != expected.split(","):
                    raise CsvParseError(1, "scores.csv missing expected header")
                for lineno, row in parsed[1:]:
                    if len(row) != 11:
                        raise CsvParseError(lineno, f"bad scores row: {','.join(row)}")
                    score_rows.append(row)
    except CsvParseError as exc:
        print(f"parse failure at line {exc.line}: {exc}", file=sys.stderr)
        return EXIT_EMPTY

    cat_rows = [
        (c.rank, c.description, summary.counts[c], f"{summary.proportions[c]:.4f}")
        for c in RANK_ORDER
    ]
    md = ["# Batch report", "", "## Degradation categories", ""]
    md.append(_markdown_table(("Rank", "Description", "Count", "Proportion"), cat_rows))

    method_rows = []
    mean_rows = [r for r in score_rows if r[0] == "mean"]
    if not mean_rows and score_rows:
        # scores.csv without aggregate rows: average the per-image rows here
        by_method: dict = {}
        for row in score_rows:
            by_method.setdefault(row[1], []).append(row)
        for method in by_method:
            rows = by_method[method]

            def col_mean(idx):
                vals = [float(r[idx]) for r in rows if r[idx] not in ("", "inf")]
                return f"{sum(vals) / len(vals):.6f}" if vals else ""

            mean_rows.append(["mean", method, col_mean(2), col_mean(3), col_mean(4)])
    for row in mean_rows:
        method_rows.append((row[1], row[2] or "-", row[3], row[4]))

    md += ["", "## Method quality summary", ""]
    if method_rows:
        md.append(_markdown_table(("Method", "PSNR", "UCIQE", "UIQM"), method_rows))
    else:
        md.append("No quality scores were provided; category table only.")
    _write(out / "report.md", "\n".join(md) + "\n")

    csv_lines = ["method,psnr,uciqe,uiqm"]
    for method, p, uc, uq in method_rows:
        csv_lines.append(f"{method},{'' if p == '-' else p},{uc},{uq}")
    _write(out / "report.csv", "\n".join(csv_lines) + "\n")
    print("report written")
    return EXIT_OK
