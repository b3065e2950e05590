"""Face alignment geometry.

Landmark containers, least-squares similarity fitting onto scaled 5-point
target templates, bilinear image warping, and face-occupancy estimation
from the 68-point contour.

The alignment templates form a family indexed by a scale factor: the base
5-point template (112x112 output) is contracted about the image center by
1/s, so larger scale factors leave more background context around the face
and a smaller face-occupancy ratio.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import ContractError, DegenerateInputError, DomainError
from .util import fmt_float

# 5-point target positions for a 112x112 aligned crop, in (x, y) pixel
# coordinates: left eye, right eye, nose tip, left/right mouth corner.
BASE_TEMPLATE_112 = np.array(
    [
        [38.2, 41.7],
        [73.5, 41.5],
        [56.0, 61.7],
        [41.5, 82.4],
        [70.7, 82.2],
    ],
    dtype=np.float64,
)

DEFAULT_OUTPUT_SIZE = (112, 112)  # (height, width)
DEFAULT_FILL = 128

# Canonical alignment sweep: (id, scale factor, nominal face-occupancy ratio).
CANONICAL_TABLE = (
    ("a", 1.65, 0.15),
    ("b", 1.40, 0.21),
    ("c", 1.10, 0.34),
    ("d", 1.00, 0.42),
    ("e", 0.90, 0.51),
    ("f", 0.85, 0.56),
    ("g", 0.80, 0.62),
    ("h", 0.75, 0.70),
    ("i", 0.70, 0.77),
    ("j", 0.65, 0.86),
    ("k", 0.60, 0.94),
)


def _as_points(points, n: int | None = None) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ContractError(f"expected (N, 2) point array, got shape {pts.shape}")
    if n is not None and pts.shape[0] != n:
        raise ContractError(f"expected {n} points, got {pts.shape[0]}")
    if not np.all(np.isfinite(pts)):
        raise DomainError("landmark coordinates must be finite")
    return pts


@dataclass(frozen=True)
class Landmarks5:
    """Five facial landmarks in pixel coordinates, upright orientation."""

    left_eye: tuple[float, float]
    right_eye: tuple[float, float]
    nose: tuple[float, float]
    mouth_left: tuple[float, float]
    mouth_right: tuple[float, float]

    def __post_init__(self):
        pts = self.to_array()
        if not np.all(np.isfinite(pts)):
            raise DomainError("landmark coordinates must be finite")
        if not self.left_eye[0] < self.right_eye[0]:
            raise DomainError("left eye must be left of right eye")
        if not self.mouth_left[0] < self.mouth_right[0]:
            raise DomainError("left mouth corner must be left of right corner")

    @classmethod
    def from_array(cls, pts) -> "Landmarks5":
        pts = _as_points(pts, 5)
        return cls(*(tuple(float(v) for v in p) for p in pts))

    def to_array(self) -> np.ndarray:
        return np.array(
            [self.left_eye, self.right_eye, self.nose, self.mouth_left, self.mouth_right],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class Landmarks68:
    """The standard 68-point annotation (jaw 0-16, brows 17-26, nose 27-35,
    eyes 36-47, mouth 48-67), stored as an immutable (68, 2) array."""

    points: np.ndarray

    def __post_init__(self):
        pts = _as_points(self.points, 68)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __eq__(self, other):
        return isinstance(other, Landmarks68) and np.array_equal(self.points, other.points)

    def to_array(self) -> np.ndarray:
        return np.array(self.points, dtype=np.float64)

    def eye_centers(self) -> tuple[np.ndarray, np.ndarray]:
        pts = self.points
        return pts[36:42].mean(axis=0), pts[42:48].mean(axis=0)

    def to_lm5(self) -> Landmarks5:
        """Reduce to the 5-point set: eye-ring centers, nose tip (30),
        mouth corners (48, 54)."""
        left, right = self.eye_centers()
        pts = self.points
        return Landmarks5(
            tuple(left), tuple(right), tuple(pts[30]), tuple(pts[48]), tuple(pts[54])
        )


@dataclass(frozen=True)
class SimilarityTransform:
    """p' = scale * R(rotation) @ p + translation, scale > 0."""

    scale: float
    rotation: float
    translation: tuple[float, float]

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise DomainError(f"scale must be positive and finite, got {self.scale}")
        if not math.isfinite(self.rotation):
            raise DomainError("rotation must be finite")
        if not all(math.isfinite(t) for t in self.translation):
            raise DomainError("translation must be finite")

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls(1.0, 0.0, (0.0, 0.0))

    def matrix(self) -> np.ndarray:
        """2x3 affine matrix mapping column vectors (x, y, 1)."""
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return np.array(
            [
                [self.scale * c, -self.scale * s, self.translation[0]],
                [self.scale * s, self.scale * c, self.translation[1]],
            ]
        )

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        m = self.matrix()
        out = pts @ m[:, :2].T + m[:, 2]
        return out[0] if single else out

    def inverse(self) -> "SimilarityTransform":
        c, s = math.cos(-self.rotation), math.sin(-self.rotation)
        tx, ty = self.translation
        inv_s = 1.0 / self.scale
        return SimilarityTransform(
            inv_s,
            -self.rotation,
            (-inv_s * (c * tx - s * ty), -inv_s * (s * tx + c * ty)),
        )

    def residual(self, src, dst) -> float:
        """Sum of squared distances between mapped src and dst."""
        return float(np.sum((self.apply(src) - np.asarray(dst, dtype=np.float64)) ** 2))


@dataclass(frozen=True)
class AlignmentSetting:
    """One alignment condition: a scale factor, the derived 5-point target
    template, and the nominal face-occupancy ratio it induces."""

    id: str
    scale_factor: float
    target5: Landmarks5
    output_size: tuple[int, int] = DEFAULT_OUTPUT_SIZE
    nominal_ratio: float = 0.0

    def __post_init__(self):
        if self.scale_factor <= 0:
            raise DomainError("scale factor must be positive")
        h, w = self.output_size
        pts = self.target5.to_array()
        if np.any(pts[:, 0] < 0) or np.any(pts[:, 0] >= w) or np.any(pts[:, 1] < 0) or np.any(pts[:, 1] >= h):
            raise DomainError("target template must lie inside the output frame")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "scale_factor": self.scale_factor,
            "target5": [[float(x), float(y)] for x, y in self.target5.to_array()],
            "output_size": list(self.output_size),
            "nominal_ratio": self.nominal_ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AlignmentSetting":
        return cls(
            id=d["id"],
            scale_factor=float(d["scale_factor"]),
            target5=Landmarks5.from_array(np.array(d["target5"], dtype=np.float64)),
            output_size=tuple(d["output_size"]),
            nominal_ratio=float(d["nominal_ratio"]),
        )


def scale_template(s: float, output_size: tuple[int, int] = DEFAULT_OUTPUT_SIZE) -> Landmarks5:
    """Target 5-point template for scale factor ``s``.

    The 112x112 base template is rescaled to the output size, then every
    point is contracted about the image center by 1/s: larger s pulls the
    landmarks together so the face fills less of the frame.
    """
    if not (math.isfinite(s) and s > 0):
        raise DomainError(f"scale factor must be positive, got {s}")
    h, w = output_size
    base = BASE_TEMPLATE_112 * np.array([w / 112.0, h / 112.0])
    center = np.array([w / 2.0, h / 2.0])
    return Landmarks5.from_array(center + (base - center) / s)


def canonical_settings(output_size: tuple[int, int] = DEFAULT_OUTPUT_SIZE) -> list[AlignmentSetting]:
    """The eleven canonical alignment conditions a-k."""
    return [
        AlignmentSetting(
            id=sid,
            scale_factor=s,
            target5=scale_template(s, output_size),
            output_size=output_size,
            nominal_ratio=ratio,
        )
        for sid, s, ratio in CANONICAL_TABLE
    ]


def setting_by_id(setting_id: str, output_size: tuple[int, int] = DEFAULT_OUTPUT_SIZE) -> AlignmentSetting:
    for s in canonical_settings(output_size):
        if s.id == setting_id:
            return s
    raise DomainError(f"unknown alignment setting {setting_id!r} (expected one of a-k)")


def settings_to_json(settings: list[AlignmentSetting]) -> str:
    return json.dumps([s.to_dict() for s in settings], indent=2) + "\n"


def settings_from_json(text: str) -> list[AlignmentSetting]:
    return [AlignmentSetting.from_dict(d) for d in json.loads(text)]


def fit_similarity(src: Landmarks5, dst: Landmarks5) -> SimilarityTransform:
    """Least-squares similarity (uniform scale, rotation, translation)
    minimizing the summed squared distance between mapped src landmarks
    and dst landmarks.

    Closed form: after centroid removal the optimal rotation comes from the
    polar part of the 2x2 cross-covariance and the scale from its trace
    ratio; reflections are never returned.
    """
    sp = src.to_array()
    dp = dst.to_array()
    sm, dm = sp.mean(axis=0), dp.mean(axis=0)
    sc, dc = sp - sm, dp - dm
    var_s = float(np.sum(sc**2))
    if var_s < 1e-12:
        raise DegenerateInputError("source landmarks have no spread")
    a = float(np.sum(sc * dc))
    b = float(np.sum(sc[:, 0] * dc[:, 1] - sc[:, 1] * dc[:, 0]))
    norm = math.hypot(a, b)
    if norm < 1e-12 * var_s:
        raise DegenerateInputError("destination landmarks have no usable spread")
    rotation = math.atan2(b, a)
    scale = norm / var_s
    c, s = math.cos(rotation), math.sin(rotation)
    t = dm - scale * np.array([c * sm[0] - s * sm[1], s * sm[0] + c * sm[1]])
    return SimilarityTransform(scale, rotation, (float(t[0]), float(t[1])))


def _bilinear_sample(image: np.ndarray, xs: np.ndarray, ys: np.ndarray, fill: float) -> np.ndarray:
    """Sample image at float coordinates; out-of-frame samples get ``fill``."""
    h, w = image.shape[:2]
    img = image.astype(np.float64)
    inside = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    x = np.clip(xs, 0, w - 1)
    y = np.clip(ys, 0, h - 1)
    x0 = np.clip(np.floor(x).astype(np.int64), 0, w - 2) if w > 1 else np.zeros_like(x, dtype=np.int64)
    y0 = np.clip(np.floor(y).astype(np.int64), 0, h - 2) if h > 1 else np.zeros_like(y, dtype=np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = x - x0
    wy = y - y0
    if img.ndim == 3:
        wx = wx[..., None]
        wy = wy[..., None]
        inside_b = inside[..., None]
    else:
        inside_b = inside
    top = img[y0, x0] * (1 - wx) + img[y0, x1] * wx
    bot = img[y1, x0] * (1 - wx) + img[y1, x1] * wx
    out = top * (1 - wy) + bot * wy
    return np.where(inside_b, out, fill)


def warp_image(image: np.ndarray, transform: SimilarityTransform,
               output_size: tuple[int, int], fill: float = DEFAULT_FILL) -> np.ndarray:
    """Resample ``image`` under a src->dst similarity onto an output grid."""
    h, w = output_size
    inv = transform.inverse()
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    m = inv.matrix()
    sx = m[0, 0] * xs + m[0, 1] * ys + m[0, 2]
    sy = m[1, 0] * xs + m[1, 1] * ys + m[1, 2]
    out = _bilinear_sample(image, sx, sy, fill)
    if np.issubdtype(image.dtype, np.integer):
        out = np.clip(np.rint(out), 0, 255).astype(image.dtype)
    return out


def warp_to_setting(image: np.ndarray, lm5: Landmarks5, setting: AlignmentSetting,
                    fill: float = DEFAULT_FILL) -> tuple[np.ndarray, SimilarityTransform]:
    """Align ``image`` so its 5 landmarks land on the setting's template.

    Returns the aligned crop (setting.output_size) and the fitted transform
    for mapping further landmarks into the aligned frame.
    """
    if image.size == 0:
        raise DomainError("empty image")
    transform = fit_similarity(lm5, setting.target5)
    return warp_image(image, transform, setting.output_size, fill), transform


def shoelace_area(polygon: np.ndarray) -> float:
    """Absolute area of a simple polygon given as (N, 2) vertices."""
    p = np.asarray(polygon, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))) / 2.0


def clip_polygon_to_rect(polygon: np.ndarray, width: float, height: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon to [0,w] x [0,h]."""
    def clip(pts, inside, intersect):
        out = []
        n = len(pts)
        for i in range(n):
            cur, nxt = pts[i], pts[(i + 1) % n]
            cin, nin = inside(cur), inside(nxt)
            if cin:
                out.append(cur)
                if not nin:
                    out.append(intersect(cur, nxt))
            elif nin:
                out.append(intersect(cur, nxt))
        return out

    def x_cross(p, q, x):
        t = (x - p[0]) / (q[0] - p[0])
        return (x, p[1] + t * (q[1] - p[1]))

    def y_cross(p, q, y):
        t = (y - p[1]) / (q[1] - p[1])
        return (p[0] + t * (q[0] - p[0]), y)

    pts = [tuple(p) for p in np.asarray(polygon, dtype=np.float64)]
    for inside, intersect in (
        (lambda p: p[0] >= 0, lambda p, q: x_cross(p, q, 0.0)),
        (lambda p: p[0] <= width, lambda p, q: x_cross(p, q, width)),
        (lambda p: p[1] >= 0, lambda p, q: y_cross(p, q, 0.0)),
        (lambda p: p[1] <= height, lambda p, q: y_cross(p, q, height)),
    ):
        if not pts:
            break
        pts = clip(pts, inside, intersect)
    return np.array(pts, dtype=np.float64).reshape(-1, 2)


def convex_hull_polygon(points: np.ndarray) -> np.ndarray | None:
    """Hull vertices in counterclockwise order, or None if degenerate."""
    pts = np.asarray(points, dtype=np.float64)
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return None
    return pts[hull.vertices]


def occupancy_ratio(lm68: Landmarks68, image_size: tuple[int, int]) -> float:
    """Convex-hull area of the 68 contour points, clipped to the frame,
    over the frame area. Degenerate hulls count as 0."""
    h, w = image_size
    hull = convex_hull_polygon(lm68.to_array())
    if hull is None:
        return 0.0
    clipped = clip_polygon_to_rect(hull, float(w), float(h))
    if len(clipped) < 3:
        return 0.0
    return shoelace_area(clipped) / (float(h) * float(w))


# ---------------------------------------------------------------------------
# Landmark CSV files: rows of (image_path, point_index, x, y). A block of 5
# rows per image is a 5-point set, 68 rows a contour set.

def write_landmarks_csv(path: Path | str, image_path: str, points: np.ndarray) -> None:
    pts = _as_points(points)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["image_path", "point_index", "x", "y"])
        for i, (x, y) in enumerate(pts):
            writer.writerow([image_path, i, fmt_float(x), fmt_float(y)])


def read_landmarks_csv(path: Path | str) -> dict[str, np.ndarray]:
    """All landmark blocks in the file, keyed by image path."""
    blocks: dict[str, list] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            blocks.setdefault(row["image_path"], []).append(
                (int(row["point_index"]), float(row["x"]), float(row["y"]))
            )
    out = {}
    for key, rows in blocks.items():
        rows.sort()
        out[key] = np.array([(x, y) for _, x, y in rows], dtype=np.float64)
    return out


def load_lm5(path: Path | str) -> Landmarks5:
    blocks = read_landmarks_csv(path)
    if len(blocks) != 1:
        raise ContractError(f"expected a single-image landmark file, got {len(blocks)} blocks")
    (pts,) = blocks.values()
    return Landmarks5.from_array(pts)


def load_lm68(path: Path | str) -> Landmarks68:
    blocks = read_landmarks_csv(path)
    if len(blocks) != 1:
        raise ContractError(f"expected a single-image landmark file, got {len(blocks)} blocks")
    (pts,) = blocks.values()
    return Landmarks68(pts)
