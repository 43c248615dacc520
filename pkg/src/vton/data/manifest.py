"""Dataset manifests: pairing, deterministic splits, (de)serialization.

Pairing convention: an id is present when both ``<id>.png`` and ``<id>.json``
exist in the root directory. Optional ``<id>_mask.png`` and ``<id>_target.png``
sidecars are picked up when present (written by the synthetic generator).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class SampleRef:
    id: str
    image: str
    annotation: str
    mask: str | None = None
    target: str | None = None


@dataclass
class DatasetManifest:
    root: str
    samples: list[SampleRef]
    split: dict[str, str]  # id -> "train" | "val"
    seed: int
    skipped: list[str] = field(default_factory=list)

    def ids(self, subset: str | None = None) -> list[str]:
        if subset is None:
            return [s.id for s in self.samples]
        return [s.id for s in self.samples if self.split[s.id] == subset]

    def sample(self, sample_id: str) -> SampleRef:
        for s in self.samples:
            if s.id == sample_id:
                return s
        raise KeyError(sample_id)

    def resolve(self, rel: str) -> Path:
        return Path(self.root) / rel


def _assign_split(ids: list[str], split_fraction: float, seed: int) -> dict[str, str]:
    ordered = sorted(ids)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ordered))
    n_train = int(round(split_fraction * len(ordered)))
    train = {ordered[i] for i in perm[:n_train]}
    return {i: ("train" if i in train else "val") for i in ordered}


def make_manifest(root, split_fraction: float = 0.8, seed: int = 0) -> DatasetManifest:
    """Scan a directory for image/annotation pairs and split deterministically.

    Images without a matching annotation are recorded in the skipped list,
    not treated as fatal.
    """
    rootp = Path(root)
    images = sorted(p.stem for p in rootp.glob("*.png") if not p.stem.endswith(("_mask", "_target")))
    samples, skipped = [], []
    for sid in images:
        if not (rootp / f"{sid}.json").exists():
            skipped.append(f"{sid}.png")
            continue
        mask = f"{sid}_mask.png" if (rootp / f"{sid}_mask.png").exists() else None
        target = f"{sid}_target.png" if (rootp / f"{sid}_target.png").exists() else None
        samples.append(SampleRef(id=sid, image=f"{sid}.png", annotation=f"{sid}.json", mask=mask, target=target))
    split = _assign_split([s.id for s in samples], split_fraction, seed)
    return DatasetManifest(root=str(rootp), samples=samples, split=split, seed=seed, skipped=skipped)


def save_manifest(manifest: DatasetManifest, path=None) -> Path:
    out = Path(path) if path is not None else Path(manifest.root) / MANIFEST_NAME
    doc = {
        "seed": manifest.seed,
        "samples": [
            {"id": s.id, "image": s.image, "annotation": s.annotation, "mask": s.mask, "target": s.target}
            for s in manifest.samples
        ],
        "split": manifest.split,
        "skipped": manifest.skipped,
    }
    out.write_text(json.dumps(doc, indent=2, sort_keys=True))
    return out


def load_manifest(path) -> DatasetManifest:
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST_NAME
    doc = json.loads(p.read_text())
    samples = [SampleRef(**raw) for raw in doc["samples"]]
    return DatasetManifest(
        root=str(p.parent),
        samples=samples,
        split=doc["split"],
        seed=doc["seed"],
        skipped=doc.get("skipped", []),
    )
