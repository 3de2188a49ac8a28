"""Parts and assemblies: posed meshes resting on a floor plane (z up)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .mesh import Pose, Solid, TriMesh


@dataclass(frozen=True, eq=False)
class Part:
    id: int
    name: str
    mesh: TriMesh
    pose: Pose = field(default_factory=Pose)


class Assembly:
    """A set of posed parts, the floor height and the shared tolerances.

    ``contact_tol`` defaults to 1e-4 of the bounding-box diagonal and
    ``margin`` (the interpenetration allowance used by collision tests) to
    1e-7 of it.  Sub-assemblies created with :meth:`subset` inherit both,
    so tolerances stay fixed through a whole planning run.

    ``frame`` accumulates every rigid motion applied with
    :meth:`transformed`, mapping the original product frame to this one.
    """

    def __init__(
        self,
        parts: Iterable[Part],
        floor: float = 0.0,
        contact_tol: float | None = None,
        margin: float | None = None,
        frame: Pose | None = None,
        liaison_pairs: Iterable[tuple[int, int]] | None = None,
    ):
        parts = sorted(parts, key=lambda p: p.id)
        ids = [p.id for p in parts]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate part ids")
        if not parts:
            raise ValueError("an assembly needs at least one part")
        self.parts: dict[int, Part] = {p.id: p for p in parts}
        self.floor = float(floor)
        self.frame = frame or Pose()
        self._solids: dict[int, Solid] = {}
        pts = np.vstack([p.pose.apply(p.mesh.vertices) for p in parts])
        diag = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
        diag = diag if diag > 0 else 1.0
        self.contact_tol = float(contact_tol) if contact_tol is not None else 1e-4 * diag
        self.margin = float(margin) if margin is not None else 1e-7 * diag
        self.liaison_pairs = None if liaison_pairs is None else frozenset(
            tuple(sorted(p)) for p in liaison_pairs
        )
        self._liaisons = None

    # -- basic access -------------------------------------------------------

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __contains__(self, pid) -> bool:
        return pid in self.parts

    def __repr__(self) -> str:
        return f"Assembly(ids={list(self.ids)}, floor={self.floor:g})"

    def solid(self, pid: int) -> Solid:
        s = self._solids.get(pid)
        if s is None:
            p = self.parts[pid]
            s = self._solids[pid] = Solid(p.mesh, p.pose, self.margin)
        return s

    def solids(self, ids=None) -> list[Solid]:
        return [self.solid(i) for i in (self.ids if ids is None else sorted(ids))]

    @property
    def bbox(self) -> np.ndarray:
        boxes = np.array([self.solid(i).aabb for i in self.ids])
        return np.stack([boxes[:, 0].min(axis=0), boxes[:, 1].max(axis=0)])

    @property
    def vertices(self) -> np.ndarray:
        """Every posed vertex of every part."""
        return np.vstack([self.solid(i).vertices for i in self.ids])

    def bbox_of(self, ids) -> np.ndarray:
        boxes = np.array([self.solid(i).aabb for i in ids])
        return np.stack([boxes[:, 0].min(axis=0), boxes[:, 1].max(axis=0)])

    def volume(self, pid: int) -> float:
        return self.parts[pid].mesh.volume

    def min_z(self, ids=None) -> float:
        return float(min(self.solid(i).aabb[0, 2] for i in (ids or self.ids)))

    # -- derived assemblies -------------------------------------------------

    def _derive(self, parts, frame) -> "Assembly":
        out = Assembly(
            parts,
            floor=self.floor,
            contact_tol=self.contact_tol,
            margin=self.margin,
            frame=frame,
            liaison_pairs=self.liaison_pairs,
        )
        return out

    def subset(self, ids) -> "Assembly":
        """The parts ``ids`` in their current poses (caches are shared)."""
        ids = sorted(ids)
        missing = [i for i in ids if i not in self.parts]
        if missing:
            raise KeyError(f"unknown part ids {missing}")
        out = self._derive([self.parts[i] for i in ids], self.frame)
        out._solids = {i: self._solids[i] for i in ids if i in self._solids}
        if self._liaisons is not None:
            out._liaisons = self._liaisons.subgraph(ids)
        return out

    def transformed(self, pose: Pose) -> "Assembly":
        """Apply the rigid motion ``pose`` to every part."""
        parts = [Part(p.id, p.name, p.mesh, pose.compose(p.pose)) for p in self.parts.values()]
        out = self._derive(parts, pose.compose(self.frame))
        if self._liaisons is not None:
            out._liaisons = self._liaisons.rotated(pose)
        return out

    def translated(self, offset) -> "Assembly":
        return self.transformed(Pose(tuple(np.asarray(offset, dtype=float))))

    def seated(self) -> "Assembly":
        """Translate vertically so the lowest point rests on the floor."""
        dz = self.floor - self.min_z()
        if dz == 0.0:
            return self
        return self.translated((0.0, 0.0, dz))

    # -- contacts -------------------------------------------------------------

    @property
    def liaisons(self):
        if self._liaisons is None:
            from .contact import detect_liaisons

            self._liaisons = detect_liaisons(self, self.contact_tol)
        return self._liaisons

    def touches_floor(self, pid: int) -> bool:
        return self.solid(pid).aabb[0, 2] <= self.floor + self.contact_tol
