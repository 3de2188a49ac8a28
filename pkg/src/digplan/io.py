"""Manifest and plan files (versioned JSON) and CSV writers.

Manifest (``digplan.manifest/1``)::

    {
      "schema": "digplan.manifest/1",
      "units": "m",                    # m | cm | mm | in
      "floor": 0.0,
      "parts": [
        {"id": 0, "name": "case", "mesh": "case.obj",
         "pose": {"translation": [0, 0, 0], "rotation": [1, 0, 0, 0]}}
      ],
      "liaisons": [[0, 1]],            # optional explicit contact pairs
      "config": {"shells": 24}         # optional planner overrides
    }

Mesh paths are relative to the manifest.  Rotations are unit quaternions
``[w, x, y, z]``.  Numbers are written with six significant digits so
outputs diff cleanly; the only exception is the node frames of a plan
file, kept exact so a stored plan re-verifies against its geometry.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .assembly import Assembly, Part
from .mesh import Pose, load_mesh, write_obj
from .planner import DisassemblyTree, TreeNode

MANIFEST_SCHEMA = "digplan.manifest/1"
TREE_SCHEMA = "digplan.tree/1"
UNITS = {"m": 1.0, "cm": 0.01, "mm": 0.001, "in": 0.0254}
CONFIG_KEYS = {"shells", "samples", "accept", "contact_tol", "seed", "k_dirs", "clusters", "method"}


class ManifestError(ValueError):
    """Malformed or unresolvable manifest or plan file."""


def sig6(x: float) -> float:
    """Round to six significant digits (and drop negative zero)."""
    return float(f"{float(x):.6g}") + 0.0


def fmt(x: float) -> str:
    return f"{float(x) + 0.0:.6g}"


# ---------------------------------------------------------------------------
# manifests


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ManifestError(f"{where}: missing '{key}'")
    return d[key]


def read_manifest(path) -> tuple[Assembly, dict]:
    """Load a manifest into an :class:`Assembly` plus its config overrides."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ManifestError(f"manifest not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(data, dict) or data.get("schema") != MANIFEST_SCHEMA:
        raise ManifestError(f"{path}: expected schema {MANIFEST_SCHEMA!r}")
    units = data.get("units", "m")
    if units not in UNITS:
        raise ManifestError(f"{path}: unknown units {units!r}")
    scale = UNITS[units]
    parts_in = _require(data, "parts", str(path))
    if not isinstance(parts_in, list) or not parts_in:
        raise ManifestError(f"{path}: 'parts' must be a nonempty list")
    parts = []
    seen = set()
    for k, p in enumerate(parts_in):
        where = f"{path}: parts[{k}]"
        if not isinstance(p, dict):
            raise ManifestError(f"{where}: expected an object")
        pid = _require(p, "id", where)
        if not isinstance(pid, int) or isinstance(pid, bool):
            raise ManifestError(f"{where}: id must be an integer")
        if pid in seen:
            raise ManifestError(f"{where}: duplicate id {pid}")
        seen.add(pid)
        mesh_path = path.parent / str(_require(p, "mesh", where))
        if not mesh_path.is_file():
            raise ManifestError(f"{where}: mesh file not found: {mesh_path}")
        pose = _read_pose(p.get("pose", {}), scale, where)
        parts.append(Part(pid, str(p.get("name", pid)), load_mesh(mesh_path, scale), pose))
    pairs = data.get("liaisons")
    if pairs is not None:
        try:
            pairs = [(int(a), int(b)) for a, b in pairs]
        except (TypeError, ValueError) as e:
            raise ManifestError(f"{path}: liaisons must be id pairs") from e
        bad = [pr for pr in pairs if pr[0] not in seen or pr[1] not in seen or pr[0] == pr[1]]
        if bad:
            raise ManifestError(f"{path}: bad liaison pairs {bad}")
    config = data.get("config", {}) or {}
    unknown = set(config) - CONFIG_KEYS
    if unknown:
        raise ManifestError(f"{path}: unknown config keys {sorted(unknown)}")
    if "contact_tol" in config:
        config = dict(config, contact_tol=float(config["contact_tol"]) * scale)
    try:
        floor = float(data.get("floor", 0.0)) * scale
    except (TypeError, ValueError) as e:
        raise ManifestError(f"{path}: floor must be a number") from e
    asm = Assembly(parts, floor=floor, contact_tol=config.get("contact_tol"), liaison_pairs=pairs)
    return asm, config


def _read_pose(p: dict, scale: float, where: str) -> Pose:
    try:
        t = [float(x) * scale for x in p.get("translation", (0, 0, 0))]
        q = [float(x) for x in p.get("rotation", (1, 0, 0, 0))]
        if len(t) != 3 or len(q) != 4:
            raise ValueError("wrong length")
        return Pose.from_rotation(q, t) if abs(np.linalg.norm(q) - 1.0) < 1e-6 else Pose(tuple(t), tuple(q))
    except (TypeError, ValueError) as e:
        raise ManifestError(f"{where}: invalid pose ({e})") from e


def write_manifest(assembly: Assembly, directory, name: str = "manifest.json", config: dict | None = None) -> Path:
    """Write every part as OBJ next to a manifest describing ``assembly``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    parts = []
    for pid, p in assembly.parts.items():
        fname = f"part{pid:03d}_{p.name}.obj"
        write_obj(p.mesh, directory / fname)
        parts.append(
            {
                "id": pid,
                "name": p.name,
                "mesh": fname,
                "pose": {
                    "translation": [sig6(x) for x in p.pose.translation],
                    "rotation": [float(x) for x in p.pose.rotation],
                },
            }
        )
    data = {"schema": MANIFEST_SCHEMA, "units": "m", "floor": sig6(assembly.floor), "parts": parts}
    if assembly.liaison_pairs is not None:
        data["liaisons"] = [list(p) for p in sorted(assembly.liaison_pairs)]
    if config:
        data["config"] = config
    out = directory / name
    out.write_text(json.dumps(data, indent=2) + "\n")
    return out


# ---------------------------------------------------------------------------
# plan trees


def tree_to_dict(tree: DisassemblyTree, method: str | None = None) -> dict:
    nodes = []
    for nid in sorted(tree.nodes):
        n = tree.nodes[nid]
        nodes.append(
            {
                "id": n.id,
                "parts": list(n.parts),
                "children": list(n.children),
                "parent": n.parent,
                "role": n.role,
                "direction": None if n.direction is None else [sig6(x) for x in n.direction],
                # frames keep full precision so stored plans re-verify exactly
                "frame": {
                    "translation": [float(x) + 0.0 for x in n.frame.translation],
                    "rotation": [float(x) + 0.0 for x in n.frame.rotation],
                },
                "reoriented": n.reoriented,
            }
        )
    out = {
        "schema": TREE_SCHEMA,
        "method": method,
        "root": tree.root,
        "names": {str(k): v for k, v in sorted(tree.names.items())},
        "nodes": nodes,
    }
    return out


def dumps_tree(tree: DisassemblyTree, method: str | None = None) -> str:
    return json.dumps(tree_to_dict(tree, method), indent=2, sort_keys=True) + "\n"


def tree_from_dict(data: dict) -> tuple[DisassemblyTree, str | None]:
    if not isinstance(data, dict) or data.get("schema") != TREE_SCHEMA:
        raise ManifestError(f"expected schema {TREE_SCHEMA!r}")
    try:
        nodes = []
        for d in data["nodes"]:
            fr = d.get("frame") or {}
            q = fr.get("rotation", [1, 0, 0, 0])
            frame = Pose(tuple(fr.get("translation", [0, 0, 0])), tuple(q))
            nodes.append(
                TreeNode(
                    int(d["id"]),
                    tuple(int(p) for p in d["parts"]),
                    [int(c) for c in d["children"]],
                    None if d["parent"] is None else int(d["parent"]),
                    str(d.get("role", "root")),
                    None if d.get("direction") is None else tuple(float(x) for x in d["direction"]),
                    frame,
                    bool(d.get("reoriented", False)),
                )
            )
        names = {int(k): str(v) for k, v in (data.get("names") or {}).items()}
        tree = DisassemblyTree(nodes, names)
        tree.validate()
    except ManifestError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ManifestError(f"malformed tree file: {e}") from e
    return tree, data.get("method")


def read_tree(path) -> tuple[DisassemblyTree, str | None]:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ManifestError(f"tree file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: invalid JSON ({e})") from e
    return tree_from_dict(data)


def write_tree(tree: DisassemblyTree, path, method: str | None = None) -> None:
    Path(path).write_text(dumps_tree(tree, method))


# ---------------------------------------------------------------------------
# CSV


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) if isinstance(x, float) else x for x in r])
