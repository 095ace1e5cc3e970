"""Detector-output evaluation: IoU, AP@0.5, average recall, attack success rates.

Boxes use xywh pixel coordinates.  Matching is greedy in descending score
order (ties keep input order): each detection takes the not-yet-matched
ground-truth box of the same image and category with the highest IoU, when
that IoU reaches the threshold.  Multi-class AP/AR are averaged per category
over the whole dataset, then across the categories present in the ground
truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Hashable, Sequence


class SchemaError(ValueError):
    """An input file violates the documented JSON schema; names the record."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left corner plus extents, in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ValueError(f"bbox field {name} must be a number, got {v!r}")
        if self.w < 0 or self.h < 0:
            raise ValueError(f"bbox extents must be nonnegative, got w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Detection:
    """One detector output box with its confidence score."""

    image_id: Hashable
    bbox: BBox
    score: float
    category: Hashable

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


@dataclass(frozen=True)
class GroundTruthBox:
    """One annotated box; ``is_patch`` marks adversarial-patch placements."""

    image_id: Hashable
    bbox: BBox
    category: Hashable
    is_patch: bool = False


@dataclass
class EvalReport:
    """Metrics of one evaluation run; fields not computed stay None."""

    ap50: float | None = None
    ar: float | None = None
    asr: float | None = None
    per_image: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"ap50": self.ap50, "ar": self.ar, "asr": self.asr, "per_image": self.per_image}


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0.0 when the union is empty."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    inter = max(ix, 0.0) * max(iy, 0.0)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def _score_order(detections: Sequence[Detection]) -> list[int]:
    """Indices sorted by descending score; equal scores keep input order."""
    return sorted(range(len(detections)), key=lambda i: -detections[i].score)


def _greedy_match(
    ordered: Sequence[Detection], truths: Sequence[GroundTruthBox], iou_threshold: float
) -> list[bool]:
    """True/False per ordered detection: did it claim an unmatched GT box?

    Detections and truths must already share one category.  IoU ties pick
    the earliest ground-truth box in input order.
    """
    open_truths: dict[Hashable, list[int]] = {}
    for j, g in enumerate(truths):
        open_truths.setdefault(g.image_id, []).append(j)
    hits: list[bool] = []
    for det in ordered:
        candidates = open_truths.get(det.image_id, [])
        best_j = -1
        best_iou = 0.0
        for j in candidates:
            overlap = iou(det.bbox, truths[j].bbox)
            if overlap > best_iou:
                best_iou = overlap
                best_j = j
        if best_j >= 0 and best_iou >= iou_threshold:
            candidates.remove(best_j)
            hits.append(True)
        else:
            hits.append(False)
    return hits


def _ap_one_category(
    detections: Sequence[Detection], truths: Sequence[GroundTruthBox], iou_threshold: float
) -> float:
    ordered = [detections[i] for i in _score_order(detections)]
    hits = _greedy_match(ordered, truths, iou_threshold)
    recalls: list[float] = []
    precisions: list[float] = []
    tp = 0
    for rank, hit in enumerate(hits, start=1):
        tp += int(hit)
        recalls.append(tp / len(truths))
        precisions.append(tp / rank)
    # 101-point interpolation: mean over the recall grid of the best
    # precision among operating points reaching that recall.
    total = 0.0
    for i in range(101):
        r = i / 100.0
        best = 0.0
        for rec, prec in zip(recalls, precisions):
            if rec >= r and prec > best:
                best = prec
        total += best
    return total / 101.0


def _categories(truths: Sequence[GroundTruthBox]) -> list[Hashable]:
    return sorted({g.category for g in truths}, key=repr)


def ap50(
    detections: Sequence[Detection],
    ground_truth: Sequence[GroundTruthBox],
    iou_threshold: float = 0.5,
) -> float:
    """Average precision at one IoU threshold (default 0.5), 101-point interpolated.

    Computed per category over the whole dataset and averaged across the
    categories present in the ground truth; detections for absent categories
    are ignored.  With no ground truth at all the score is 1.0 for an empty
    detection list and 0.0 otherwise.
    """
    if not ground_truth:
        return 1.0 if not detections else 0.0
    per_category = []
    for cat in _categories(ground_truth):
        dets = [d for d in detections if d.category == cat]
        truths = [g for g in ground_truth if g.category == cat]
        per_category.append(_ap_one_category(dets, truths, iou_threshold))
    return sum(per_category) / len(per_category)


def _default_ar_thresholds() -> list[float]:
    return [(50 + 5 * k) / 100 for k in range(10)]


def average_recall(
    detections: Sequence[Detection],
    ground_truth: Sequence[GroundTruthBox],
    iou_thresholds: Sequence[float] | None = None,
    max_dets: int = 100,
) -> float:
    """Recall averaged over IoU thresholds 0.50:0.05:0.95 and categories.

    At each threshold the greedy matcher runs on at most ``max_dets``
    highest-score detections per image and category; recall is the matched
    fraction of ground-truth boxes.  The empty-ground-truth convention
    follows :func:`ap50`.
    """
    if not ground_truth:
        return 1.0 if not detections else 0.0
    thresholds = list(iou_thresholds) if iou_thresholds is not None else _default_ar_thresholds()
    if not thresholds:
        raise ValueError("at least one IoU threshold is required")
    per_category = []
    for cat in _categories(ground_truth):
        truths = [g for g in ground_truth if g.category == cat]
        by_image: dict[Hashable, list[Detection]] = {}
        for d in detections:
            if d.category == cat:
                by_image.setdefault(d.image_id, []).append(d)
        capped: list[Detection] = []
        for image_dets in by_image.values():
            ranked = [image_dets[i] for i in _score_order(image_dets)]
            capped.extend(ranked[:max_dets])
        ordered = [capped[i] for i in _score_order(capped)]
        recall_sum = 0.0
        for thr in thresholds:
            hits = _greedy_match(ordered, truths, thr)
            recall_sum += sum(hits) / len(truths)
        per_category.append(recall_sum / len(thresholds))
    return sum(per_category) / len(per_category)


def asr_hiding(
    detections: Sequence[Detection],
    targets: Sequence[GroundTruthBox],
    score_threshold: float = 0.9,
    iou_threshold: float = 0.5,
) -> float:
    """Fraction of target objects the detector lost (hiding-attack success).

    A target survives the attack only if some detection of its image and
    category has score strictly above ``score_threshold`` and IoU strictly
    above ``iou_threshold`` with it; otherwise the attack succeeded on that
    target.  Both thresholds are exclusive.
    """
    if not targets:
        raise ValueError("asr_hiding requires at least one target object")
    hidden = 0
    for t in targets:
        found = any(
            d.image_id == t.image_id
            and d.category == t.category
            and d.score > score_threshold
            and iou(d.bbox, t.bbox) > iou_threshold
            for d in detections
        )
        hidden += int(not found)
    return hidden / len(targets)


def asr_creating(
    detections: Sequence[Detection],
    patches: Sequence[GroundTruthBox],
    targeted_class: Hashable | None = None,
    score_threshold: float = 0.3,
    iou_threshold: float = 0.1,
) -> float:
    """Fraction of patch placements that conjured a spurious detection.

    A placement succeeds if some detection in its image has score strictly
    above ``score_threshold`` and IoU of at least ``iou_threshold`` with the
    patch box (score exclusive, IoU inclusive).  Untargeted mode accepts any
    category; with ``targeted_class`` set, only that category counts.
    """
    if not patches:
        raise ValueError("asr_creating requires at least one patch placement")
    created = 0
    for p in patches:
        found = any(
            d.image_id == p.image_id
            and d.score > score_threshold
            and iou(d.bbox, p.bbox) >= iou_threshold
            and (targeted_class is None or d.category == targeted_class)
            for d in detections
        )
        created += int(found)
    return created / len(patches)


def _read_json(path) -> Any:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{p}: not valid JSON: {exc}") from exc


def _parse_bbox(raw: Any, where: str) -> BBox:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 4
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw)
    ):
        raise SchemaError(f"{where}: bbox must be four numbers [x, y, w, h], got {raw!r}")
    if raw[2] < 0 or raw[3] < 0:
        raise SchemaError(f"{where}: bbox has negative extent: {raw!r}")
    return BBox(float(raw[0]), float(raw[1]), float(raw[2]), float(raw[3]))


def _require(record: dict, key: str, where: str) -> Any:
    if key not in record:
        raise SchemaError(f"{where}: missing required field {key!r}")
    return record[key]


def load_coco_annotations(path) -> list[GroundTruthBox]:
    """Load COCO-style ground truth: ``annotations[]`` with xywh boxes.

    Each annotation needs ``image_id``, ``bbox`` and ``category_id``; an
    optional boolean ``is_patch`` marks adversarial patch placements.
    Unknown fields are ignored.  Violations raise :class:`SchemaError`
    naming the offending record.
    """
    data = _read_json(path)
    if not isinstance(data, dict) or not isinstance(data.get("annotations"), list):
        raise SchemaError(f"{path}: expected a JSON object with an 'annotations' array")
    out: list[GroundTruthBox] = []
    for i, ann in enumerate(data["annotations"]):
        where = f"{path}: annotations[{i}]"
        if not isinstance(ann, dict):
            raise SchemaError(f"{where}: expected an object, got {type(ann).__name__}")
        bbox = _parse_bbox(_require(ann, "bbox", where), where)
        is_patch = ann.get("is_patch", False)
        if not isinstance(is_patch, bool):
            raise SchemaError(f"{where}: is_patch must be a boolean, got {is_patch!r}")
        out.append(
            GroundTruthBox(
                image_id=_require(ann, "image_id", where),
                bbox=bbox,
                category=_require(ann, "category_id", where),
                is_patch=is_patch,
            )
        )
    return out


def load_detections(path) -> list[Detection]:
    """Load detector outputs: a JSON array of boxes with scores.

    Each record needs ``image_id``, ``bbox`` (xywh), ``score`` in [0, 1] and
    ``category_id``.  Violations raise :class:`SchemaError` naming the
    offending record.
    """
    data = _read_json(path)
    if not isinstance(data, list):
        raise SchemaError(f"{path}: expected a JSON array of detection records")
    out: list[Detection] = []
    for i, det in enumerate(data):
        where = f"{path}: detections[{i}]"
        if not isinstance(det, dict):
            raise SchemaError(f"{where}: expected an object, got {type(det).__name__}")
        bbox = _parse_bbox(_require(det, "bbox", where), where)
        score = _require(det, "score", where)
        if not isinstance(score, (int, float)) or isinstance(score, bool) or not 0 <= score <= 1:
            raise SchemaError(f"{where}: score must be a number in [0, 1], got {score!r}")
        out.append(
            Detection(
                image_id=_require(det, "image_id", where),
                bbox=bbox,
                score=float(score),
                category=_require(det, "category_id", where),
            )
        )
    return out
