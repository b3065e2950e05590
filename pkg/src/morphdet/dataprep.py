"""Dataset manifests, identity splits, cross-subset pairing and dual labels.

Every sample carries two identity labels. Bona fide images and selfmorphs
duplicate the original identity; cross morphs inherit one identity from
each source. The detection target collapses this to a binary label where
1 means bona fide (selfmorphs included) and 0 means morph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataIntegrityError, DomainError

AUTH_BONA_FIDE = "bona_fide"
AUTH_SELFMORPH = "selfmorph"
AUTH_MORPH = "morph"
AUTHENTICITIES = (AUTH_BONA_FIDE, AUTH_SELFMORPH, AUTH_MORPH)

# Score/label polarity: high detection score and target 1 mean bona fide.
# Selfmorphs count as bona fide for the detection target.
BONA_FIDE_TARGET = 1
MORPH_TARGET = 0


@dataclass(frozen=True)
class Sample:
    """One image with dual identity labels and an authenticity class."""

    image_path: str
    lm5_path: str
    lm68_path: str
    first_label: str
    second_label: str
    authenticity: str
    provenance: str = ""
    y_first: int | None = field(default=None, compare=False)
    y_second: int | None = field(default=None, compare=False)
    target: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.authenticity not in AUTHENTICITIES:
            raise DomainError(f"unknown authenticity {self.authenticity!r}")
        if self.authenticity == AUTH_MORPH and self.first_label == self.second_label:
            raise DomainError("a morph must blend two distinct identities")
        if self.authenticity != AUTH_MORPH and self.first_label != self.second_label:
            raise DomainError(f"{self.authenticity} samples carry one identity twice")

    def to_dict(self) -> dict:
        return {
            "path": self.image_path,
            "lm5_path": self.lm5_path,
            "lm68_path": self.lm68_path,
            "first_label": self.first_label,
            "second_label": self.second_label,
            "authenticity": self.authenticity,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Sample":
        return cls(
            image_path=d["path"],
            lm5_path=d["lm5_path"],
            lm68_path=d["lm68_path"],
            first_label=d["first_label"],
            second_label=d["second_label"],
            authenticity=d["authenticity"],
            provenance=d.get("provenance", ""),
        )


@dataclass
class Manifest:
    """An ordered set of samples plus the dense identity->index mapping.

    ``root`` is where relative sample paths resolve; it is derived from the
    manifest file location and never serialized.
    """

    entries: list[Sample]
    root: Path | None = field(default=None, compare=False)

    @property
    def identities(self) -> list[str]:
        labels = {s.first_label for s in self.entries} | {s.second_label for s in self.entries}
        return sorted(labels)

    @property
    def identity_index(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.identities)}

    @property
    def num_classes(self) -> int:
        return len(self.identities)

    def resolve(self, relpath: str) -> Path:
        if self.root is None:
            return Path(relpath)
        return self.root / relpath

    def by_authenticity(self, authenticity: str) -> list[Sample]:
        return [s for s in self.entries if s.authenticity == authenticity]

    def serialize(self) -> str:
        doc = {
            "identities": self.identities,
            "entries": [s.to_dict() for s in self.entries],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def parse(cls, text: str, root: Path | None = None) -> "Manifest":
        doc = json.loads(text)
        manifest = cls(entries=[Sample.from_dict(d) for d in doc["entries"]], root=root)
        if doc.get("identities") != manifest.identities:
            raise DataIntegrityError("identity list does not match manifest entries")
        return manifest

    def save(self, path: Path | str) -> None:
        Path(path).write_text(self.serialize())

    @classmethod
    def load(cls, path: Path | str) -> "Manifest":
        path = Path(path)
        return cls.parse(path.read_text(), root=path.parent)


@dataclass(frozen=True)
class MorphPair:
    """One planned morph: identities from each subset plus the seeds that
    pick which image of each identity gets used."""

    first_id: str
    second_id: str
    seed_a: int
    seed_b: int


@dataclass(frozen=True)
class PairingPlan:
    """Disjoint identity split and the planned cross-subset morph pairs."""

    subset_first: tuple[str, ...]
    subset_second: tuple[str, ...]
    pairs: tuple[MorphPair, ...] = ()

    def __post_init__(self):
        overlap = set(self.subset_first) & set(self.subset_second)
        if overlap:
            raise DomainError(f"subsets must be disjoint, shared: {sorted(overlap)[:5]}")
        for p in self.pairs:
            if p.first_id not in self.subset_first or p.second_id not in self.subset_second:
                raise DomainError(f"pair ({p.first_id}, {p.second_id}) does not cross the subsets")

    def to_json(self) -> str:
        doc = {
            "subset_first": list(self.subset_first),
            "subset_second": list(self.subset_second),
            "pairs": [
                {"first_id": p.first_id, "second_id": p.second_id, "seed_a": p.seed_a, "seed_b": p.seed_b}
                for p in self.pairs
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PairingPlan":
        doc = json.loads(text)
        return cls(
            subset_first=tuple(doc["subset_first"]),
            subset_second=tuple(doc["subset_second"]),
            pairs=tuple(MorphPair(**p) for p in doc["pairs"]),
        )

    def save(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: Path | str) -> "PairingPlan":
        return cls.from_json(Path(path).read_text())


def split_identities(manifest: Manifest, seed: int) -> PairingPlan:
    """Balanced pseudo-random split of the manifest identities into the two
    network subsets. Sizes differ by at most one; deterministic per seed."""
    identities = manifest.identities
    if len(identities) < 2:
        raise DomainError(f"need at least 2 identities to split, got {len(identities)}")
    order = list(identities)
    np.random.default_rng(seed).shuffle(order)
    half = (len(order) + 1) // 2
    return PairingPlan(
        subset_first=tuple(sorted(order[:half])),
        subset_second=tuple(sorted(order[half:])),
    )


def make_pairs(plan: PairingPlan, pairs_per_identity: int, seed: int) -> PairingPlan:
    """Draw cross-subset morph pairs: every first-subset identity gets
    ``pairs_per_identity`` partners, avoiding back-to-back repeats of the
    same partner when more than one is available."""
    if not plan.subset_first or not plan.subset_second:
        raise DomainError("both subsets must be non-empty")
    rng = np.random.default_rng(seed)
    partners = list(plan.subset_second)
    pairs = []
    for first_id in plan.subset_first:
        last = None
        for _ in range(pairs_per_identity):
            choice = partners[int(rng.integers(len(partners)))]
            if choice == last and len(partners) > 1:
                others = [p for p in partners if p != last]
                choice = others[int(rng.integers(len(others)))]
            pairs.append(
                MorphPair(
                    first_id=first_id,
                    second_id=choice,
                    seed_a=int(rng.integers(2**31)),
                    seed_b=int(rng.integers(2**31)),
                )
            )
            last = choice
    return PairingPlan(plan.subset_first, plan.subset_second, tuple(pairs))


def assign_training_labels(manifest: Manifest) -> Manifest:
    """Attach dense class indices for both networks and the binary
    detection target (1 for bona fide and selfmorph, 0 for morph)."""
    index = manifest.identity_index
    entries = []
    for s in manifest.entries:
        if s.first_label not in index or s.second_label not in index:
            raise DataIntegrityError(
                f"sample {s.image_path} references an identity missing from the index"
            )
        target = MORPH_TARGET if s.authenticity == AUTH_MORPH else BONA_FIDE_TARGET
        entries.append(
            replace(s, y_first=index[s.first_label], y_second=index[s.second_label], target=target)
        )
    return Manifest(entries=entries, root=manifest.root)
