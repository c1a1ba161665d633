"""Command-line front end.

Subcommands mirror the pipeline stages (segment, align, volume, features),
the regression tools (fit, predict, evaluate), the synthetic phantom
generator, and the end-to-end runners (pipeline, batch). Configuration comes
from built-in defaults, optionally a JSON config file (--config or the
BODYVOL_CONFIG environment variable), then individual flags, in that order.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import sys

import click
import numpy as np

from . import composition, raster, volumetry
from .alignment import align_upright, bounding_rect, normalize_views
from .errors import ManifestParse, PipelineError
from .phantom import PhantomSpec, analytic_volume, render_phantom, voxel_volume
from .pipeline import (
    CONFIG_ENV_VAR,
    RunConfig,
    run_batch,
    run_pipeline,
    sig6,
    write_profiles_csv,
)
from .segmentation import clean_mask, segment_green_screen
from .volumetry import CalibrationScale


def _fail(exc: PipelineError) -> None:
    click.echo(json.dumps({"error": exc.code, "message": str(exc)}), err=True)
    sys.exit(exc.exit_status)


def config_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(), default=None,
                     help="JSON config file (default: $BODYVOL_CONFIG)."),
        click.option("--out", "output_dir", default=None, help="Output directory."),
        click.option("--workers", type=int, default=None),
        click.option("--rows", type=int, default=None,
                     help="Row count the two views are normalized to."),
        click.option("--hue-min", type=float, default=None),
        click.option("--hue-max", type=float, default=None),
        click.option("--sat-min", type=float, default=None),
        click.option("--val-min", type=float, default=None),
        click.option("--angle-range", type=float, default=None,
                     help="Symmetric rotation search range in degrees (+-R)."),
        click.option("--scale-back-x", type=float, default=None, help="cm per back-view x pixel."),
        click.option("--scale-side-x", type=float, default=None, help="cm per side-view x pixel."),
        click.option("--scale-y", type=float, default=None, help="cm per vertical pixel."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def build_config(
    config_path=None, output_dir=None, workers=None, rows=None,
    hue_min=None, hue_max=None, sat_min=None, val_min=None,
    angle_range=None, scale_back_x=None, scale_side_x=None, scale_y=None,
) -> RunConfig:
    path = config_path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        with open(path) as f:
            cfg = RunConfig.from_dict(json.load(f))
    else:
        cfg = RunConfig()

    thr = cfg.threshold
    updates = {
        k: v
        for k, v in (("hue_min", hue_min), ("hue_max", hue_max),
                     ("sat_min", sat_min), ("val_min", val_min))
        if v is not None
    }
    if updates:
        thr = dataclasses.replace(thr, **updates)
    search = cfg.search
    if angle_range is not None:
        search = dataclasses.replace(search, angle_min=-angle_range, angle_max=angle_range)
    scale = cfg.scale
    scales = (scale_back_x, scale_side_x, scale_y)
    if any(v is not None for v in scales):
        if not all(v is not None for v in scales):
            raise click.UsageError("--scale-back-x, --scale-side-x and --scale-y must be given together")
        scale = CalibrationScale(*scales)
    return RunConfig(
        threshold=thr,
        search=search,
        rows=rows if rows is not None else cfg.rows,
        scale=scale,
        smooth_radius=cfg.smooth_radius,
        workers=workers if workers is not None else cfg.workers,
        output_dir=output_dir if output_dir is not None else cfg.output_dir,
    )


@click.group()
def main():
    """Two-view silhouette body volumetry."""


@main.command()
@click.argument("image", type=click.Path(exists=True))
@click.argument("out_mask", type=click.Path())
@click.option("--raw", is_flag=True, help="Skip component/hole cleanup.")
@config_options
def segment(image, out_mask, raw, **cfg_kwargs):
    """Segment a green-screen photo into a binary body mask."""
    cfg = build_config(**cfg_kwargs)
    try:
        mask = segment_green_screen(raster.read_image(image), cfg.threshold)
        if not raw:
            mask = clean_mask(mask, smooth_radius=cfg.smooth_radius)
        raster.write_mask(out_mask, mask)
    except PipelineError as exc:
        _fail(exc)


@main.command()
@click.argument("in_mask", type=click.Path(exists=True))
@click.argument("out_mask", type=click.Path())
@click.option("--record", type=click.Path(), default=None,
              help="Where to write the one-line CSV record (default: stdout).")
@config_options
def align(in_mask, out_mask, record, **cfg_kwargs):
    """Rotate a body mask to the upright (max left-right symmetry) position."""
    cfg = build_config(**cfg_kwargs)
    try:
        res = align_upright(raster.read_mask(in_mask), cfg.search)
        raster.write_mask(out_mask, res.mask)
    except PipelineError as exc:
        _fail(exc)
    line = f"{in_mask},{sig6(res.angle):.6g},{sig6(res.score):.6g}"
    if record:
        with open(record, "w") as f:
            f.write(line + "\n")
    else:
        click.echo(line)


def _volume_from_masks(back_path, side_path, cfg):
    back = raster.read_mask(back_path)
    side = raster.read_mask(side_path)
    heights = [bounding_rect(m).height for m in (back, side)]
    nb, ns = normalize_views(back, side, cfg.rows)
    row_height = (heights[0] + heights[1]) / 2.0 / cfg.rows
    profiles = volumetry.extract_profiles(nb, ns, cfg.scale, row_height_px=row_height)
    volume = volumetry.body_volume(profiles)
    features = volumetry.shape_features(profiles, volume)
    return profiles, volume, features


@main.command()
@click.argument("back_mask", type=click.Path(exists=True))
@click.argument("side_mask", type=click.Path(exists=True))
@config_options
def volume(back_mask, side_mask, **cfg_kwargs):
    """Integrate two aligned masks into a body volume (CSV + JSON summary)."""
    cfg = build_config(**cfg_kwargs)
    try:
        profiles, vol, features = _volume_from_masks(back_mask, side_mask, cfg)
    except PipelineError as exc:
        _fail(exc)
    os.makedirs(cfg.output_dir, exist_ok=True)
    write_profiles_csv(os.path.join(cfg.output_dir, "profiles.csv"), profiles)
    summary = {
        "total_px3": sig6(vol.total_px3),
        "trunk_px3": sig6(vol.trunk_px3),
        "limbs_px3": sig6(vol.limbs_px3),
        "row_height_px": sig6(profiles.row_height_px),
        "features": {k: sig6(v) for k, v in features.as_dict().items()},
        "scale": vars(cfg.scale).copy() if cfg.scale else None,
        "rows": cfg.rows,
    }
    if vol.total_cm3 is not None:
        summary["total_cm3"] = sig6(vol.total_cm3)
    path = os.path.join(cfg.output_dir, "volume.json")
    with open(path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    click.echo(json.dumps(summary, sort_keys=True))


@main.command()
@click.argument("back_mask", type=click.Path(exists=True))
@click.argument("side_mask", type=click.Path(exists=True))
@config_options
def features(back_mask, side_mask, **cfg_kwargs):
    """Print the 7-entry shape feature vector for a mask pair."""
    cfg = build_config(**cfg_kwargs)
    try:
        _, _, feats = _volume_from_masks(back_mask, side_mask, cfg)
    except PipelineError as exc:
        _fail(exc)
    click.echo(json.dumps({k: sig6(v) for k, v in feats.as_dict().items()}, sort_keys=True))


def _read_training_csv(path, feature_names=None, need_target=True):
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise ManifestParse(f"{path!r}: empty CSV")
        cols = list(reader.fieldnames)
        if feature_names is None:
            feature_names = [c for c in cols if c != "target"]
        missing = [c for c in feature_names if c not in cols]
        if missing:
            raise ManifestParse(f"{path!r}: missing feature columns {missing}")
        if need_target and "target" not in cols:
            raise ManifestParse(f"{path!r}: missing 'target' column")
        X, y = [], []
        for row in reader:
            X.append([float(row[c]) for c in feature_names])
            if need_target:
                y.append(float(row["target"]))
    return np.array(X), (np.array(y) if need_target else None), feature_names


@main.command()
@click.argument("data_csv", type=click.Path(exists=True))
@click.argument("model_json", type=click.Path())
@click.option("--features", "feature_list", default=None,
              help="Comma-separated feature columns (default: all but 'target').")
def fit(data_csv, model_json, feature_list):
    """Fit a linear composition model on a training CSV."""
    names = feature_list.split(",") if feature_list else None
    try:
        X, y, names = _read_training_csv(data_csv, names)
        model, report = composition.fit_linear(X, y, names)
    except PipelineError as exc:
        _fail(exc)
    composition.save_model(
        model, model_json,
        metadata={"r_squared": sig6(report.r_squared), "rmse": sig6(report.rmse),
                  "n_samples": report.n_samples},
    )
    click.echo(json.dumps({"r_squared": sig6(report.r_squared),
                           "rmse": sig6(report.rmse), "n": report.n_samples}))


@main.command()
@click.argument("model_json", type=click.Path(exists=True))
@click.argument("data_csv", type=click.Path(exists=True))
def predict(model_json, data_csv):
    """Predict the composition value for each row of a feature CSV."""
    model = composition.load_model(model_json)
    try:
        X, _, _ = _read_training_csv(data_csv, model.feature_order, need_target=False)
        for row in X:
            click.echo(f"{sig6(composition.predict(model, row)):.6g}")
    except PipelineError as exc:
        _fail(exc)


@main.command()
@click.argument("model_json", type=click.Path(exists=True))
@click.argument("data_csv", type=click.Path(exists=True))
def evaluate(model_json, data_csv):
    """Score a model against a CSV with feature columns and a target column."""
    model = composition.load_model(model_json)
    try:
        X, y, _ = _read_training_csv(data_csv, model.feature_order)
        report = composition.evaluate(model, X, y)
    except PipelineError as exc:
        _fail(exc)
    click.echo(json.dumps({"r_squared": sig6(report.r_squared),
                           "rmse": sig6(report.rmse), "n": report.n_samples}))


@main.command()
@click.argument("spec_json", type=click.Path(exists=True))
@click.option("--out", "output_dir", default="out")
@click.option("--voxel", is_flag=True, help="Also run the voxel oracle (resolution 2).")
def phantom(spec_json, output_dir, voxel):
    """Render a phantom spec into a green-screen image pair plus truth JSON."""
    with open(spec_json) as f:
        try:
            spec = PhantomSpec.from_dict(json.load(f))
            back, side = render_phantom(spec)
        except PipelineError as exc:
            _fail(exc)
    os.makedirs(output_dir, exist_ok=True)
    raster.write_image(os.path.join(output_dir, "back.png"), back)
    raster.write_image(os.path.join(output_dir, "side.png"), side)
    truth = {
        "analytic_px3": sig6(analytic_volume(spec)),
        "rotation": spec.rotation,
        "spec": spec.to_dict(),
    }
    if voxel:
        truth["voxel_px3"] = sig6(voxel_volume(spec, resolution=2))
    with open(os.path.join(output_dir, "truth.json"), "w") as f:
        json.dump(truth, f, indent=2, sort_keys=True)
        f.write("\n")
    click.echo(json.dumps({"analytic_px3": truth["analytic_px3"]}))


@main.command()
@click.argument("back_image", type=click.Path(exists=True))
@click.argument("side_image", type=click.Path(exists=True))
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@config_options
def pipeline(back_image, side_image, model_path, **cfg_kwargs):
    """Run the full measurement chain on one image pair."""
    cfg = build_config(**cfg_kwargs)
    try:
        report = run_pipeline(back_image, side_image, cfg, model_path)
    except PipelineError as exc:
        _fail(exc)
    click.echo(json.dumps(report.volume, sort_keys=True))


@main.command()
@click.argument("manifest", type=click.Path(exists=True))
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@config_options
def batch(manifest, model_path, **cfg_kwargs):
    """Process every image pair listed in a manifest CSV."""
    cfg = build_config(**cfg_kwargs)
    try:
        rows, warnings = run_batch(manifest, cfg, model_path)
    except PipelineError as exc:
        _fail(exc)
    ok = sum(1 for r in rows if r["status"] == "ok")
    click.echo(json.dumps({"pairs": len(rows), "ok": ok, "warnings": warnings}))


if __name__ == "__main__":
    main()
