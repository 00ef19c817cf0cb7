import itertools
import logging
import math
import os
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from config import SERVICE_VERSION
from errors import (
    AlreadySplit, ConfigInvalid, KTooLarge, MissingRoot, NoLabeledImages, NotSplit,
    RatioInvalid, UnreadableImage,
)
from metrics import images_ingested_total, images_unreadable_total
from models.dataset import (
    SKIP, DEFAULT_LABEL_RULE, FoldAssignment, ImageRecord, Label, Manifest, Split, SplitRatios,
)
from repositories.image_store import is_image_file, read_size

logger = logging.getLogger(__name__)

# tie order for largest-remainder allocation
SPLIT_ORDER = (Split.TRAIN, Split.TEST, Split.VAL)
LABEL_ORDER = (Label.COVID, Label.NON_COVID)


def parse_label_rule(spec: str) -> Dict[str, str]:
    """Parse `dir=LABEL,dir=LABEL` into a label rule."""
    rule: Dict[str, str] = {}
    for item in filter(None, (part.strip() for part in spec.split(","))):
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise ConfigInvalid(f"bad label rule entry {item!r}; expected dir=LABEL")
        rule[name.strip()] = value.strip().upper()
    return rule


def _resolve_label(directory: str, label_rule: Dict[str, str]) -> Optional[Label]:
    folded = {name.casefold(): value for name, value in label_rule.items()}
    value = label_rule.get(directory, folded.get(directory.casefold()))
    if value is None:
        logger.warning(f"Directory {directory!r} has no label rule; skipping")
        return None
    if value == SKIP:
        return None
    try:
        return Label(value)
    except ValueError:
        raise ConfigInvalid(f"label rule maps {directory!r} to unknown label {value!r}")


def ingest_dataset(root: str, label_rule: Optional[Dict[str, str]] = None, seed: int = 0) -> Manifest:
    """Build a manifest from `root/<class dir>/**/<image>`, ordered by path."""
    if not root or not os.path.isdir(root):
        raise MissingRoot(f"dataset root {root!r} does not exist")
    label_rule = label_rule or DEFAULT_LABEL_RULE

    candidates: List[Tuple[str, Label]] = []
    for entry in sorted(os.listdir(root)):
        directory = os.path.join(root, entry)
        if not os.path.isdir(directory):
            continue
        label = _resolve_label(entry, label_rule)
        if label is None:
            continue
        for dirpath, dirnames, filenames in os.walk(directory):
            dirnames.sort()
            for filename in filenames:
                if is_image_file(filename):
                    candidates.append((os.path.join(dirpath, filename), label))

    records: List[ImageRecord] = []
    warnings: List[str] = []
    for path, label in sorted(candidates, key=lambda c: os.path.relpath(c[0], root).replace(os.sep, "/")):
        record_id = os.path.relpath(path, root).replace(os.sep, "/")
        try:
            width, height = read_size(path)
        except UnreadableImage as e:
            logger.warning(f"[{record_id}] Unreadable image: {e.message}")
            images_unreadable_total.inc()
            warnings.append(f"{UnreadableImage.code}: {record_id}")
            continue
        records.append(ImageRecord(id=record_id, path=path, label=label, width=width, height=height))
        images_ingested_total.labels(label=label.value).inc()

    if not records:
        raise NoLabeledImages(f"no labelled images found under {root}")

    manifest = Manifest(
        records=tuple(records), source_root=root, seed=seed,
        warnings=tuple(warnings), tool_version=SERVICE_VERSION,
    )
    counts = {label.value: n for label, n in manifest.class_counts.items()}
    logger.info(f"Ingested {len(records)} images from {root}: {counts}, {len(warnings)} unreadable")
    return manifest


def largest_remainder(n: int, fractions: Sequence[float]) -> List[int]:
    """Integer allocation of n by fractions; leftover units go to the largest remainders,
    ties resolved by position."""
    quotas = [round(n * f, 9) for f in fractions]
    counts = [math.floor(q) for q in quotas]
    leftover = n - sum(counts)
    by_remainder = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in by_remainder[:leftover]:
        counts[i] += 1
    return counts


def _class_allocations(n: int, fractions: Sequence[float]) -> List[List[int]]:
    """Every floor/ceil allocation of n, most-preferred first."""
    quotas = [round(n * f, 9) for f in fractions]
    floors = [math.floor(q) for q in quotas]
    deficit = n - sum(floors)
    fractional = [i for i, q in enumerate(quotas) if q > floors[i]]
    ranked = []
    for chosen in itertools.combinations(fractional, deficit):
        counts = list(floors)
        for i in chosen:
            counts[i] += 1
        score = sum(quotas[i] - floors[i] for i in chosen)
        ranked.append((-round(score, 9), chosen, counts))
    ranked.sort(key=lambda item: (item[0], item[1]))
    return [counts for _, _, counts in ranked] or [floors]


def _stratified_counts(class_sizes: List[int], fractions: Sequence[float]) -> List[List[int]]:
    """Per-class split counts that are each within one record of the ideal and add up
    to the largest-remainder totals over all records."""
    targets = largest_remainder(sum(class_sizes), fractions)
    options = [_class_allocations(n, fractions) for n in class_sizes]
    for choice in itertools.product(*options):
        totals = [sum(column) for column in zip(*choice)]
        if totals == targets:
            return [list(c) for c in choice]
    logger.warning(f"No per-class allocation meets split totals {targets}; using per-class rounding")
    return [o[0] for o in options]


def _as_ratios(ratios: Union[SplitRatios, Sequence[float]]) -> SplitRatios:
    if isinstance(ratios, SplitRatios):
        return ratios
    try:
        train, test, val = ratios
        return SplitRatios(train=train, test=test, val=val)
    except (TypeError, ValueError, ValidationError) as e:
        raise RatioInvalid(f"invalid split ratios {ratios!r}: {e}") from e


def assign_splits(manifest: Manifest, ratios: Union[SplitRatios, Sequence[float]], seed: int) -> Manifest:
    """Seeded, label-stratified TRAIN/TEST/VAL assignment; returns a new manifest."""
    if any(r.split != Split.UNASSIGNED for r in manifest.records):
        raise AlreadySplit("manifest already has split assignments")
    ratios = _as_ratios(ratios)
    fractions = ratios.as_tuple()

    by_label = {label: [r for r in manifest.records if r.label == label] for label in LABEL_ORDER}
    allocation = _stratified_counts([len(by_label[label]) for label in LABEL_ORDER], fractions)

    assigned: Dict[str, Split] = {}
    for index, label in enumerate(LABEL_ORDER):
        members = by_label[label]
        order = np.random.default_rng([seed, index]).permutation(len(members))
        cursor = 0
        for split, count in zip(SPLIT_ORDER, allocation[index]):
            for position in order[cursor:cursor + count]:
                assigned[members[position].id] = split
            cursor += count

    records = [r.model_copy(update={"split": assigned[r.id]}) for r in manifest.records]
    result = manifest.replace_records(records, seed=seed, ratios=ratios)
    sizes = {split.value: len(result.split_records(split)) for split in SPLIT_ORDER}
    logger.info(f"Assigned splits with seed {seed}: {sizes}")
    return result


def kfold_partition(manifest: Manifest, k: int, seed: int) -> FoldAssignment:
    """Stratified k-fold partition of the original (non-augmented) TRAIN records."""
    if not manifest.is_split:
        raise NotSplit("manifest must be split before k-fold partitioning")
    if k < 2:
        raise ConfigInvalid(f"k must be at least 2, got {k}")
    train = manifest.split_records(Split.TRAIN, include_augmented=False)
    if len(train) < k:
        raise KTooLarge(f"k={k} exceeds the {len(train)} TRAIN records")

    # one running position across labels keeps both overall and per-label fold sizes within 1
    ordered: List[str] = []
    for index, label in enumerate(LABEL_ORDER):
        ids = sorted(r.id for r in train if r.label == label)
        order = np.random.default_rng([seed, index]).permutation(len(ids))
        ordered.extend(ids[i] for i in order)
    assignment = FoldAssignment(k=k, fold_of={rid: pos % k for pos, rid in enumerate(ordered)})
    logger.info(f"Partitioned {len(ordered)} TRAIN records into {k} folds: {assignment.fold_sizes()}")
    return assignment


def fold_of_record(record: ImageRecord, assignment: FoldAssignment) -> Optional[int]:
    """Augmented copies follow their parent's fold."""
    return assignment.fold_of.get(record.parent_id or record.id)


def apply_folds(manifest: Manifest, assignment: FoldAssignment) -> Manifest:
    records = [
        r.model_copy(update={"fold": fold_of_record(r, assignment) if r.split == Split.TRAIN else None})
        for r in manifest.records
    ]
    return manifest.replace_records(records, k=assignment.k)


def assignment_from_manifest(manifest: Manifest) -> Optional[FoldAssignment]:
    """Recover the fold assignment stored in a manifest's records, if any."""
    if not manifest.k:
        return None
    fold_of = {
        r.id: r.fold for r in manifest.split_records(Split.TRAIN, include_augmented=False)
        if r.fold is not None
    }
    return FoldAssignment(k=manifest.k, fold_of=fold_of) if fold_of else None


def fold_records(manifest: Manifest, assignment: FoldAssignment, fold: int) -> Tuple[List[ImageRecord], List[ImageRecord]]:
    """Training and held-out records for one cross-validation fold.

    Held-out records are original images of the fold; training records are every other
    TRAIN record, including augmented copies whose parent is outside the fold.
    """
    train, held_out = [], []
    for record in manifest.split_records(Split.TRAIN):
        record_fold = fold_of_record(record, assignment)
        if record_fold is None:
            continue
        if record_fold != fold:
            train.append(record)
        elif not record.is_augmented:
            held_out.append(record)
    return train, held_out
