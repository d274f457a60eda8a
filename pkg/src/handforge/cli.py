"""Command-line pipeline: validate inputs, fit template bones, generate
tissue shells, select the wall thickness, and simulate fingertip
trajectories. Every stage reads and writes plain files; exit status is
0 on success, 1 on domain failure, 2 on usage or config errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import deformation, fixtures, kinematics, tissue_gen
from .errors import HandforgeError, SchemaViolation
from .landmarks import (
    LANDMARK_NAMES,
    default_topology,
    load_landmarks,
    load_topology,
)
from .mesh_io import analyze_mesh, parse_mesh, write_mesh
from .template_match import (
    BoneTemplateSet,
    apply_transform,
    estimate_all_transforms,
    place_ligament_holes,
)
from .landmarks import bone_frame

MESH_FORMATS = ("stl_binary", "stl_ascii", "obj")


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise click.UsageError(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"malformed config {p}: {exc}")
    if not isinstance(cfg, dict):
        raise click.UsageError(f"config {p} must be a JSON object")
    return cfg


def _config_path(cfg: dict, key: str) -> Path:
    if key not in cfg:
        raise click.UsageError(f"config is missing {key!r}")
    p = Path(cfg[key])
    if not p.exists():
        raise click.UsageError(f"{key} path not found: {p}")
    return p


def _read_mesh(path: Path):
    try:
        return parse_mesh(path.read_bytes())
    except HandforgeError as exc:
        raise click.ClickException(f"{path}: {exc}")


def _read_landmarks(path: Path, source: str):
    try:
        return load_landmarks(json.loads(path.read_text()), source=source)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"malformed landmark file {path}: {exc}")
    except SchemaViolation as exc:
        raise click.ClickException(f"{path}: {exc}")


def _load_template_set(template_dir: Path, topology) -> BoneTemplateSet:
    lms = _read_landmarks(template_dir / "landmarks.json", "template")
    meshes = {}
    for bone_id in topology.bone_ids:
        candidates = [template_dir / f"{bone_id}{ext}" for ext in (".stl", ".obj")]
        found = next((c for c in candidates if c.is_file()), None)
        if found is None:
            raise click.UsageError(f"template mesh for {bone_id} not found in {template_dir}")
        meshes[bone_id] = _read_mesh(found)
    return BoneTemplateSet(meshes=meshes, landmarks=lms)


def _load_topology(cfg: dict, template_dir: Path):
    topo_file = template_dir / "topology.json"
    if topo_file.is_file():
        try:
            return load_topology(json.loads(topo_file.read_text()))
        except (json.JSONDecodeError, SchemaViolation) as exc:
            raise click.ClickException(f"{topo_file}: {exc}")
    return default_topology()


@click.group()
def main():
    """Multi-layer printable hand models from a scan and 25 landmarks."""


@main.command()
@click.option("--config", "config_path", required=True, type=str, help="Pipeline config JSON.")
def validate(config_path):
    """Check all configured inputs; warnings do not fail the run."""
    cfg = _load_config(config_path)
    failures = 0
    scan = _read_mesh(_config_path(cfg, "scan"))
    report = analyze_mesh(scan)
    click.echo(
        f"scan: {len(scan.vertices)} vertices, {len(scan.faces)} faces, "
        f"watertight={report.watertight}"
    )
    if not report.watertight:
        click.echo(
            f"warning: scan is not watertight ({report.boundary_edge_count} boundary edges); "
            "volume figures will be unreliable"
        )
    _read_landmarks(_config_path(cfg, "landmarks"), "target")
    click.echo("landmarks: 25 entries, schema OK")
    template_dir = _config_path(cfg, "template_dir")
    topology = _load_topology(cfg, template_dir)
    templates = _load_template_set(template_dir, topology)
    click.echo(f"template: {len(templates.meshes)} bone meshes, landmarks OK")
    if "tube" in cfg:
        try:
            tissue_gen.TubeSpec(**cfg["tube"])
        except (TypeError, ValueError) as exc:
            click.echo(f"error: invalid tube spec: {exc}")
            failures += 1
    if failures:
        sys.exit(1)
    click.echo("validation OK")


@main.command("fit-bones")
@click.option("--config", "config_path", required=True, type=str)
@click.option("--out", "out_dir", type=str, default=None, help="Override output directory.")
@click.option("--format", "fmt", type=click.Choice(MESH_FORMATS), default="stl_binary")
def fit_bones(config_path, out_dir, fmt):
    """Fit every template bone to the target landmarks; write per-bone
    meshes, the transform log, and ligament hole metadata."""
    cfg = _load_config(config_path)
    out = Path(out_dir or cfg.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    template_dir = _config_path(cfg, "template_dir")
    topology = _load_topology(cfg, template_dir)
    templates = _load_template_set(template_dir, topology)
    target = _read_landmarks(_config_path(cfg, "landmarks"), "target")
    ext = {"stl_binary": ".stl", "stl_ascii": ".stl", "obj": ".obj"}[fmt]
    try:
        transforms = estimate_all_transforms(templates, topology, target)
        log = []
        holes = {}
        for bone_id, t in transforms.items():
            fitted = apply_transform(templates.meshes[bone_id], t)
            (out / f"{bone_id}{ext}").write_bytes(write_mesh(fitted, fmt))
            log.append({
                "bone_id": bone_id,
                "theta": t.theta,
                "lambda": t.lam,
                "translation": [float(x) for x in t.translation],
            })
            frame = bone_frame(target, topology, bone_id)
            holes[bone_id] = [p.to_document() for p in place_ligament_holes(fitted, frame)]
    except HandforgeError as exc:
        raise click.ClickException(str(exc))
    (out / "transforms.json").write_text(json.dumps(log, indent=2) + "\n")
    (out / "holes.json").write_text(json.dumps(holes, indent=2) + "\n")
    click.echo(f"fitted {len(log)} bones -> {out}")


@main.command("gen-tissue")
@click.option("--config", "config_path", required=True, type=str)
@click.option("--bone-id", required=True, type=str)
@click.option("--sigma", type=float, default=None, help="Tube wall offset, mm.")
@click.option("--out", "out_dir", type=str, default=None)
def gen_tissue(config_path, bone_id, sigma, out_dir):
    """Build the hollow tissue shell around one fitted bone."""
    cfg = _load_config(config_path)
    tube_cfg = dict(cfg.get("tube", {}))
    if sigma is not None:
        tube_cfg["sigma"] = sigma
    if "sigma" not in tube_cfg:
        raise click.UsageError("no sigma given (flag --sigma or config tube.sigma)")
    try:
        spec = tissue_gen.TubeSpec(**{**tube_cfg, "region": bone_id})
    except (TypeError, ValueError) as exc:
        raise click.UsageError(f"invalid tube spec: {exc}")
    out = Path(out_dir or cfg.get("out_dir", "."))
    bone_path = out / f"{bone_id}.stl"
    if not bone_path.is_file():
        raise click.UsageError(f"fitted bone not found: {bone_path} (run fit-bones first)")
    bone = _read_mesh(bone_path)
    scan = _read_mesh(_config_path(cfg, "scan"))
    try:
        segment = tissue_gen.extract_segment(scan, bone)
        shell = tissue_gen.build_concentric_tube(segment, bone, spec)
        solid = tissue_gen.solid_gap_volume(segment, bone)
        files = tissue_gen.export_shell(shell, solid)
    except HandforgeError as exc:
        raise click.ClickException(f"{bone_id}: {exc}")
    (out / f"{bone_id}_shell.stl").write_bytes(files["shell.stl"])
    (out / f"{bone_id}_shell_report.json").write_bytes(files["report.json"])
    report = json.loads(files["report.json"])
    click.echo(
        f"{bone_id}: shell {report['material_volume_ml']:.3f} ml "
        f"(solid would be {report['solid_volume_ml']:.3f} ml)"
    )


@main.command("select-thickness")
@click.option("--curves", "curves_path", required=True, type=str, help="strain,force,label CSV.")
@click.option("--human-label", default="human", show_default=True)
@click.option("--out", "out_path", type=str, default=None, help="Write the report JSON here.")
def select_thickness(curves_path, human_label, out_path):
    """Pick the tube wall whose deformation curve is closest to the reference."""
    p = Path(curves_path)
    if not p.is_file():
        raise click.UsageError(f"curves file not found: {p}")
    try:
        curves = deformation.load_curves(p.read_text())
        by_label = {c.label: c for c in curves}
        if human_label not in by_label:
            raise click.UsageError(f"no curve labeled {human_label!r} in {p}")
        candidates = [
            deformation.ThicknessCandidate(float(label.split("=", 1)[1]), curve)
            for label, curve in by_label.items()
            if label.startswith("sigma=")
        ]
        if not candidates:
            raise click.ClickException("no 'sigma=<value>' candidate curves found")
        sigma_star, distances = deformation.select_thickness(candidates, by_label[human_label])
    except HandforgeError as exc:
        raise click.ClickException(str(exc))
    for s in sorted(distances):
        click.echo(f"sigma={s}: rms={distances[s]:.6g} N")
    click.echo(f"selected sigma: {sigma_star}")
    if out_path:
        Path(out_path).write_text(json.dumps(
            {"sigma_star": sigma_star, "distances": {str(k): v for k, v in distances.items()}},
            indent=2) + "\n")


@main.command()
@click.option("--config", "config_path", type=str, default=None,
              help="Optional config with a 'designs' section; defaults to shipped presets.")
@click.option("--designs", "design_ids", type=str, default=None,
              help="Comma-separated design ids (default: all).")
@click.option("--displacement-max", type=float, default=None)
@click.option("--steps", type=int, default=None)
@click.option("--out", "out_dir", type=str, default=".")
def simulate(config_path, design_ids, displacement_max, steps, out_dir):
    """Sweep fingertip trajectories and rank the designs by flexion depth."""
    presets, meta = kinematics.load_presets()
    if config_path:
        cfg = _load_config(config_path)
        if "designs" in cfg:
            doc = cfg["designs"]
            defaults = doc.get("defaults", {"lengths": (45, 25, 20), "limits": kinematics.DEFAULT_LIMITS})
            presets = {
                name: kinematics.config_from_document(name, entry, defaults)
                for name, entry in doc.get("designs", doc).items()
                if isinstance(entry, dict) and "b" in entry
            }
    if design_ids:
        wanted = [d.strip() for d in design_ids.split(",")]
        unknown = [d for d in wanted if d not in presets]
        if unknown:
            raise click.UsageError(f"unknown designs: {unknown}")
        presets = {d: presets[d] for d in wanted}
    dmax = meta["displacement_max"] if displacement_max is None else displacement_max
    nsteps = meta["steps"] if steps is None else steps
    if nsteps < 2:
        raise click.UsageError("steps must be >= 2")
    if dmax < 0:
        raise click.UsageError("displacement-max must be >= 0")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        for name, cfg in presets.items():
            traj = kinematics.sweep_trajectory(cfg, dmax, nsteps)
            rows = ["displacement,y,z"]
            rows += [
                f"{d!r},{p[0]!r},{p[1]!r}"
                for d, p in zip(traj.displacements, traj.points)
            ]
            (out / f"trajectory_{name}.csv").write_text("\n".join(rows) + "\n")
        report = kinematics.compare_designs(list(presets.values()), dmax, nsteps)
    except HandforgeError as exc:
        raise click.ClickException(str(exc))
    (out / "comparison.json").write_text(json.dumps(report, indent=2) + "\n")
    for name in report["ranking"]:
        m = report["designs"][name]
        click.echo(f"{name}: min_y={m['min_y']:.2f} final=({m['final_y']:.2f}, {m['final_z']:.2f})")


@main.command()
def info():
    """Print the landmark schema, bone topology and shipped presets."""
    click.echo(f"landmark schema ({len(LANDMARK_NAMES)} names):")
    for name in LANDMARK_NAMES:
        click.echo(f"  {name}")
    topo = default_topology()
    click.echo(f"bone topology ({len(topo.bones)} bones):")
    for bone_id, org, ref in topo.bones:
        click.echo(f"  {bone_id}: {org} -> {ref}")
    presets, meta = kinematics.load_presets()
    click.echo(f"design presets (baseline: {meta['baseline']}):")
    for name, cfg in presets.items():
        bs = [s.b for s in cfg.stages]
        click.echo(f"  {name}: b={bs} springs={list(cfg.springs)}")


if __name__ == "__main__":
    main()
