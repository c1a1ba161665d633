"""End-to-end pipeline: two photos in, volume report out.

segment -> clean -> align -> normalize -> profiles -> volume -> features
(-> predict when a model is supplied). All intermediates are written to the
output directory so each stage can be re-run standalone on its own artifact.

Determinism contract: identical inputs and config produce byte-identical
report.json and summary CSVs, at any worker count. Stage timings are
therefore kept out of report.json (they land in timings.csv).
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import composition, raster, segmentation, volumetry
from .alignment import RotationSearchParams, align_upright, bounding_rect, normalize_views
from .errors import BadImage, ManifestParse, PipelineError
from .segmentation import HueThresholdParams
from .volumetry import CalibrationScale, FEATURE_NAMES

CONFIG_ENV_VAR = "BODYVOL_CONFIG"


def sig6(x: float) -> float:
    """Round to 6 significant digits; fixes golden-file stability."""
    return float(f"{float(x):.6g}")


@dataclass
class RunConfig:
    threshold: HueThresholdParams = field(default_factory=HueThresholdParams)
    search: RotationSearchParams = field(default_factory=RotationSearchParams)
    rows: int = 400
    scale: CalibrationScale | None = None
    smooth_radius: int = 0
    workers: int = 1
    output_dir: str = "out"

    def __post_init__(self):
        if self.rows < 2:
            raise ValueError("rows must be >= 2")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_dict(self) -> dict:
        d = {
            "threshold": vars(self.threshold).copy(),
            "search": vars(self.search).copy(),
            "rows": self.rows,
            "scale": vars(self.scale).copy() if self.scale else None,
            "smooth_radius": self.smooth_radius,
            "workers": self.workers,
            "output_dir": self.output_dir,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "threshold" in d:
            d["threshold"] = HueThresholdParams(**d["threshold"])
        if "search" in d:
            d["search"] = RotationSearchParams(**d["search"])
        if d.get("scale"):
            d["scale"] = CalibrationScale(**d["scale"])
        return cls(**d)


@dataclass
class PipelineReport:
    inputs: dict
    config: dict
    alignment: dict
    volume: dict
    features: dict
    prediction: float | None
    timings_ms: list[tuple[str, float]]

    def to_dict(self) -> dict:
        """Deterministic report content; timings deliberately excluded."""
        d = {
            "inputs": self.inputs,
            "config": self.config,
            "alignment": self.alignment,
            "volume": self.volume,
            "features": self.features,
        }
        if self.prediction is not None:
            d["prediction"] = self.prediction
        return d


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 16), b""):
                h.update(chunk)
    except OSError as exc:
        raise BadImage(f"cannot read {path!r}: {exc}") from exc
    return h.hexdigest()


class _Timer:
    def __init__(self):
        self.records: list[tuple[str, float]] = []
        self._t = time.perf_counter()

    def lap(self, name: str):
        now = time.perf_counter()
        self.records.append((name, (now - self._t) * 1000.0))
        self._t = now


def run_pipeline(
    back_image: str,
    side_image: str,
    config: RunConfig,
    model_path: str | None = None,
) -> PipelineReport:
    """Run the whole measurement chain on one image pair.

    Raises a PipelineError subclass on any failure; nothing is partially
    reported in that case (intermediates written so far remain on disk for
    inspection).
    """
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    timer = _Timer()

    inputs = {
        "back": {"path": back_image, "sha256": _sha256(back_image)},
        "side": {"path": side_image, "sha256": _sha256(side_image)},
    }
    back_rgb = raster.read_image(back_image)
    side_rgb = raster.read_image(side_image)
    timer.lap("read")

    masks = {}
    for name, rgb in (("back", back_rgb), ("side", side_rgb)):
        m = segmentation.segment_green_screen(rgb, config.threshold)
        m = segmentation.clean_mask(m, smooth_radius=config.smooth_radius)
        raster.write_mask(os.path.join(out, f"{name}_mask.png"), m)
        masks[name] = m
    timer.lap("segment")

    aligned = {}
    align_info = {}
    for name, m in masks.items():
        res = align_upright(m, config.search)
        raster.write_mask(os.path.join(out, f"{name}_aligned.png"), res.mask)
        aligned[name] = res.mask
        align_info[name] = {"angle": sig6(res.angle), "score": sig6(res.score)}
    timer.lap("align")

    crop_heights = [bounding_rect(aligned[n]).height for n in ("back", "side")]
    nb, ns = normalize_views(aligned["back"], aligned["side"], config.rows)
    raster.write_mask(os.path.join(out, "back_norm.png"), nb)
    raster.write_mask(os.path.join(out, "side_norm.png"), ns)
    row_height = (crop_heights[0] + crop_heights[1]) / 2.0 / config.rows
    timer.lap("normalize")

    profiles = volumetry.extract_profiles(nb, ns, config.scale, row_height_px=row_height)
    write_profiles_csv(os.path.join(out, "profiles.csv"), profiles)
    volume = volumetry.body_volume(profiles)
    features = volumetry.shape_features(profiles, volume)
    timer.lap("volume")

    prediction = None
    if model_path is not None:
        model = composition.load_model(model_path)
        prediction = sig6(composition.predict(model, features))
        timer.lap("predict")

    volume_dict = {
        "total_px3": sig6(volume.total_px3),
        "trunk_px3": sig6(volume.trunk_px3),
        "limbs_px3": sig6(volume.limbs_px3),
        "row_height_px": sig6(row_height),
    }
    if volume.total_cm3 is not None:
        volume_dict["total_cm3"] = sig6(volume.total_cm3)

    report = PipelineReport(
        inputs=inputs,
        config=config.to_dict(),
        alignment=align_info,
        volume=volume_dict,
        features={k: sig6(v) for k, v in features.as_dict().items()},
        prediction=prediction,
        timings_ms=timer.records,
    )
    with open(os.path.join(out, "report.json"), "w") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(out, "timings.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["stage", "ms"])
        for name, ms in report.timings_ms:
            w.writerow([name, f"{ms:.3f}"])
    return report


def write_profiles_csv(path: str, profiles: volumetry.SliceProfileSet) -> None:
    """Per-row record: row, trunk width, side width, other (limb) widths, area."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["row", "trunk_width", "side_width", "limb_widths", "area"])
        for rr, sw in zip(profiles.back_runs, profiles.side_width):
            if rr.runs:
                widest = max(rr.runs, key=lambda r: r[1])
                limbs = [r[1] for r in rr.runs if r is not widest]
                trunk_area = volumetry.slice_area(widest[1], sw)
                area = trunk_area + sum(volumetry.slice_area(x, x) for x in limbs)
                w.writerow(
                    [rr.row, widest[1], sw, ";".join(str(x) for x in limbs), f"{area:.6g}"]
                )
            else:
                w.writerow([rr.row, 0, sw, "", "0"])


BATCH_FIELDS = (
    ["id", "status", "error", "total_px3", "trunk_px3", "limbs_px3"]
    + list(FEATURE_NAMES)
    + ["angle_back", "angle_side", "prediction"]
)


def run_batch(
    manifest_path: str,
    config: RunConfig,
    model_path: str | None = None,
) -> tuple[list[dict], int]:
    """Process every image pair in a manifest CSV (columns: back, side, [id]).

    Per-pair failures become rows with an error code instead of aborting the
    batch. Returns (summary rows in manifest order, warning count) and writes
    summary.csv in the output directory.
    """
    try:
        with open(manifest_path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None:
                raise ManifestParse(f"{manifest_path!r}: empty manifest")
            missing = {"back", "side"} - set(reader.fieldnames)
            if missing:
                raise ManifestParse(f"{manifest_path!r}: missing columns {sorted(missing)}")
            entries = list(reader)
    except OSError as exc:
        raise ManifestParse(f"cannot read manifest {manifest_path!r}: {exc}") from exc
    except csv.Error as exc:
        raise ManifestParse(f"malformed manifest {manifest_path!r}: {exc}") from exc

    def one(index: int, entry: dict) -> dict:
        pair_id = entry.get("id") or f"pair{index:04d}"
        row = {k: "" for k in BATCH_FIELDS}
        row["id"] = pair_id
        sub = RunConfig(
            threshold=config.threshold,
            search=config.search,
            rows=config.rows,
            scale=config.scale,
            smooth_radius=config.smooth_radius,
            workers=1,
            output_dir=os.path.join(config.output_dir, pair_id),
        )
        try:
            report = run_pipeline(entry["back"], entry["side"], sub, model_path)
        except PipelineError as exc:
            row["status"] = "error"
            row["error"] = exc.code
            return row
        row["status"] = "ok"
        for key in ("total_px3", "trunk_px3", "limbs_px3"):
            row[key] = report.volume[key]
        for name in FEATURE_NAMES:
            row[name] = report.features[name]
        row["angle_back"] = report.alignment["back"]["angle"]
        row["angle_side"] = report.alignment["side"]["angle"]
        if report.prediction is not None:
            row["prediction"] = report.prediction
        return row

    os.makedirs(config.output_dir, exist_ok=True)
    if config.workers == 1:
        rows = [one(i, e) for i, e in enumerate(entries)]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(one, range(len(entries)), entries))

    warnings = sum(1 for r in rows if r["status"] != "ok")
    with open(os.path.join(config.output_dir, "summary.csv"), "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=BATCH_FIELDS)
        w.writeheader()
        w.writerows(rows)
    return rows, warnings
