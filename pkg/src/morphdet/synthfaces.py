"""Procedural toy-face generator with analytically known landmarks.

Faces are simple geometric compositions (ellipse head, eyes with irises,
brow bars, nose wedge, lip curves) rendered on a 256x256 canvas. Because
every feature is drawn from closed-form shapes, the 5- and 68-point
landmark sets are emitted exactly, with no detector in the loop. Identity
is a vector of shape parameters on a 2 px lattice; per-image variation
only jitters position (<= 1.5 px), illumination (+-10%) and background
tone, never the identity geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import geometry
from .dataprep import AUTH_BONA_FIDE, Manifest, Sample
from .errors import DomainError
from .util import save_png

CANVAS = 256
MARGIN = 8
JITTER = 1.5  # max |offset| per axis; any two renders differ by <= 3 px

GEOMETRIC_FIELDS = (
    "face_rx", "face_ry", "eye_dx", "eye_h", "eye_r",
    "nose_len", "nose_w", "mouth_w", "mouth_y", "mouth_curve", "brow_th",
)


@dataclass(frozen=True)
class IdentityParams:
    """Shape and tone parameters that define one toy identity."""

    face_rx: float
    face_ry: float
    eye_dx: float       # half eye spacing
    eye_h: float        # eye height above face center
    eye_r: float        # iris radius
    nose_len: float
    nose_w: float
    mouth_w: float
    mouth_y: float      # mouth drop below face center
    mouth_curve: float  # positive bends the mouth upward
    brow_th: float
    skin: tuple[float, float, float]
    iris: tuple[float, float, float]
    lip: tuple[float, float, float]
    background: tuple[float, float, float]

    def __post_init__(self):
        for name in GEOMETRIC_FIELDS:
            if name == "mouth_curve":
                continue
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        cy = CANVAS / 2.0
        if cy + self.face_ry > CANVAS - MARGIN or cy - self.face_ry < MARGIN:
            raise DomainError("face ellipse must keep an 8 px vertical margin")
        if cy + self.face_rx > CANVAS - MARGIN or cy - self.face_rx < MARGIN:
            raise DomainError("face ellipse must keep an 8 px horizontal margin")

    def geometry_vector(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in GEOMETRIC_FIELDS], dtype=np.float64)


@dataclass(frozen=True)
class RenderedFace:
    image: np.ndarray  # (256, 256, 3) uint8
    lm5: geometry.Landmarks5
    lm68: geometry.Landmarks68
    identity_id: str
    variation_seed: int


def _lattice(rng: np.random.Generator, lo: int, count: int, step: int = 2) -> float:
    return float(lo + step * int(rng.integers(count)))


def make_identity(identity_seed: int) -> IdentityParams:
    """Deterministic identity parameters for a seed.

    Geometric parameters live on a 2 px lattice so that distinct identities
    differ by at least one full lattice step in some dimension.
    """
    rng = np.random.default_rng(identity_seed)
    skin_base = rng.uniform(150, 215)
    skin = (skin_base, skin_base * rng.uniform(0.82, 0.92), skin_base * rng.uniform(0.66, 0.80))
    iris = tuple(rng.uniform(40, 130, size=3))
    bg = float(rng.uniform(34, 78))
    background = (bg, bg * rng.uniform(0.95, 1.1), bg * rng.uniform(1.0, 1.25))
    params = IdentityParams(
        face_rx=_lattice(rng, 64, 7),
        face_ry=_lattice(rng, 94, 7),
        eye_dx=_lattice(rng, 26, 4),
        eye_h=_lattice(rng, 30, 6),
        eye_r=_lattice(rng, 6, 3),
        nose_len=_lattice(rng, 30, 4),
        nose_w=_lattice(rng, 12, 5),
        mouth_w=_lattice(rng, 44, 6),
        mouth_y=_lattice(rng, 28, 6),
        mouth_curve=_lattice(rng, -6, 9),
        brow_th=_lattice(rng, 4, 5),
        skin=skin,
        iris=iris,
        lip=(skin[0] * 0.75, skin[1] * 0.42, skin[2] * 0.45),
        background=background,
    )
    return params


def _paint(img: np.ndarray, mask: np.ndarray, color) -> None:
    img += mask[..., None] * (np.asarray(color, dtype=np.float64) - img)


def _ellipse_cov(xx, yy, cx, cy, rx, ry) -> np.ndarray:
    # anti-aliased coverage: distance-to-boundary approximated in pixels
    f = np.sqrt(((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2)
    return np.clip((1.0 - f) * min(rx, ry) + 0.5, 0.0, 1.0)


def _bar_cov(xx, yy, cx, cy, half_w, half_h) -> np.ndarray:
    ax = np.clip(half_w - np.abs(xx - cx) + 0.5, 0.0, 1.0)
    ay = np.clip(half_h - np.abs(yy - cy) + 0.5, 0.0, 1.0)
    return ax * ay


def _bezier_y(t: np.ndarray, y0: float, yc: float, y1: float) -> np.ndarray:
    return (1 - t) ** 2 * y0 + 2 * t * (1 - t) * yc + t**2 * y1


def _mouth_curves(cx: float, my: float, half_w: float, lift: float, lip_h: float):
    """Upper/lower outline y(x) of the lip region; x(t) is linear in t."""
    def upper(xs):
        t = np.clip((xs - cx + half_w) / (2 * half_w), 0.0, 1.0)
        return _bezier_y(t, my, my - lift - lip_h, my)

    def lower(xs):
        t = np.clip((xs - cx + half_w) / (2 * half_w), 0.0, 1.0)
        return _bezier_y(t, my, my - lift + lip_h, my)

    return upper, lower


def render(params: IdentityParams, variation_seed: int, identity_id: str = "") -> RenderedFace:
    """Rasterize one face and emit its exact landmark sets."""
    rng = np.random.default_rng(variation_seed)
    jx, jy = rng.uniform(-JITTER, JITTER, size=2)
    gain = rng.uniform(0.9, 1.1)
    bg_shift = rng.uniform(-8, 8)

    cx, cy = CANVAS / 2.0 + jx, CANVAS / 2.0 + jy
    ex_l, ex_r = cx - params.eye_dx, cx + params.eye_dx
    ey = cy - params.eye_h
    img = np.empty((CANVAS, CANVAS, 3), dtype=np.float64)
    img[:] = np.clip(np.asarray(params.background) + bg_shift, 0, 255)
    yy, xx = np.mgrid[0:CANVAS, 0:CANVAS].astype(np.float64)

    # head
    _paint(img, _ellipse_cov(xx, yy, cx, cy, params.face_rx, params.face_ry), params.skin)

    # brows
    brow_y = ey - params.eye_r - 11.0
    brow_hw = params.eye_r * 1.6 + 4.0
    brow_color = (params.iris[0] * 0.5, params.iris[1] * 0.5, params.iris[2] * 0.5)
    for ex in (ex_l, ex_r):
        _paint(img, _bar_cov(xx, yy, ex, brow_y, brow_hw, params.brow_th / 2.0), brow_color)

    # eyes: sclera, iris, pupil drawn about the analytic eye centers
    sclera_w, sclera_h = params.eye_r * 1.6, params.eye_r * 1.05
    for ex in (ex_l, ex_r):
        _paint(img, _ellipse_cov(xx, yy, ex, ey, sclera_w, sclera_h), (245, 245, 245))
        _paint(img, _ellipse_cov(xx, yy, ex, ey, params.eye_r * 0.8, params.eye_r * 0.8), params.iris)
        _paint(img, _ellipse_cov(xx, yy, ex, ey, params.eye_r * 0.35, params.eye_r * 0.35), (25, 20, 20))

    # nose wedge: apex under the eye line widening to the tip
    nose_top = ey + 6.0
    nose_tip = ey + params.nose_len
    span = nose_tip - nose_top
    frac = np.clip((yy - nose_top) / span, 0.0, 1.0)
    half_w = 1.0 + frac * (params.nose_w / 2.0 - 1.0)
    in_rows = np.clip(yy - nose_top + 0.5, 0, 1) * np.clip(nose_tip + 2.0 - yy + 0.5, 0, 1)
    nose_cov = np.clip(half_w - np.abs(xx - cx) + 0.5, 0.0, 1.0) * in_rows
    nose_color = (params.skin[0] * 0.82, params.skin[1] * 0.78, params.skin[2] * 0.78)
    _paint(img, nose_cov, nose_color)

    # mouth between two quadratic outlines
    my = cy + params.mouth_y
    half_mw = params.mouth_w / 2.0
    lip_h = 7.0
    upper, lower = _mouth_curves(cx, my, half_mw, params.mouth_curve, lip_h)
    col_x = np.arange(CANVAS, dtype=np.float64)
    y_u, y_l = upper(col_x), lower(col_x)
    in_cols = np.clip(half_mw - np.abs(col_x - cx) + 0.5, 0.0, 1.0)
    mouth_cov = (
        np.clip(yy - y_u[None, :] + 0.5, 0.0, 1.0)
        * np.clip(y_l[None, :] - yy + 0.5, 0.0, 1.0)
        * in_cols[None, :]
    )
    _paint(img, mouth_cov, params.lip)

    out = np.clip(np.rint(img * gain), 0, 255).astype(np.uint8)
    lm68 = _landmarks68(params, cx, cy)
    return RenderedFace(
        image=out,
        lm5=lm68.to_lm5(),
        lm68=lm68,
        identity_id=identity_id,
        variation_seed=int(variation_seed),
    )


def _landmarks68(p: IdentityParams, cx: float, cy: float) -> geometry.Landmarks68:
    pts = np.zeros((68, 2), dtype=np.float64)
    ex_l, ex_r = cx - p.eye_dx, cx + p.eye_dx
    ey = cy - p.eye_h

    # jaw 0-16 along the head ellipse from left ear over the chin to right ear
    phi = np.deg2rad(190.0 - 12.5 * np.arange(17))
    pts[0:17, 0] = cx + p.face_rx * np.cos(phi)
    pts[0:17, 1] = cy + p.face_ry * np.sin(phi)

    # brows 17-26 along each brow bar center line
    brow_y = ey - p.eye_r - 11.0
    brow_hw = p.eye_r * 1.6 + 4.0
    for k, ex in enumerate((ex_l, ex_r)):
        xs = np.linspace(ex - brow_hw, ex + brow_hw, 5)
        pts[17 + 5 * k : 22 + 5 * k, 0] = xs
        pts[17 + 5 * k : 22 + 5 * k, 1] = brow_y

    # nose 27-35: bridge then nostril baseline
    nose_top, nose_tip = ey + 6.0, ey + p.nose_len
    pts[27:31, 0] = cx
    pts[27:31, 1] = np.linspace(nose_top, nose_tip, 4)
    pts[31:36, 0] = np.linspace(cx - p.nose_w / 2.0, cx + p.nose_w / 2.0, 5)
    pts[31:36, 1] = nose_tip + 2.0

    # eye rings 36-47, symmetric about the iris centers
    ring_w, ring_h = p.eye_r * 1.6, p.eye_r * 1.05
    for k, ex in enumerate((ex_l, ex_r)):
        base = 36 + 6 * k
        pts[base + 0] = (ex - ring_w, ey)
        pts[base + 1] = (ex - 0.45 * ring_w, ey - ring_h)
        pts[base + 2] = (ex + 0.45 * ring_w, ey - ring_h)
        pts[base + 3] = (ex + ring_w, ey)
        pts[base + 4] = (ex + 0.45 * ring_w, ey + ring_h)
        pts[base + 5] = (ex - 0.45 * ring_w, ey + ring_h)

    # mouth 48-67: outer ring on the drawn lip outlines, inner ring shrunk
    my = cy + p.mouth_y
    half_mw = p.mouth_w / 2.0
    upper, lower = _mouth_curves(cx, my, half_mw, p.mouth_curve, 7.0)
    xs_u = np.linspace(cx - half_mw, cx + half_mw, 7)
    pts[48:55, 0] = xs_u
    pts[48:55, 1] = upper(xs_u)
    xs_l = np.linspace(cx + half_mw, cx - half_mw, 7)[1:-1]
    pts[55:60, 0] = xs_l
    pts[55:60, 1] = lower(xs_l)
    iu, il = _mouth_curves(cx, my, half_mw - 4.0, p.mouth_curve * 0.7, 3.0)
    xs_iu = np.linspace(cx - half_mw + 4.0, cx + half_mw - 4.0, 4)
    pts[60:64, 0] = xs_iu
    pts[60:64, 1] = iu(xs_iu)
    xs_il = np.linspace(cx + half_mw - 4.0, cx - half_mw + 4.0, 6)[1:-1]
    pts[64:68, 0] = xs_il
    pts[64:68, 1] = il(xs_il)

    return geometry.Landmarks68(pts)


def identity_seed_for(root_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([root_seed, index]).generate_state(1)[0])


def variation_seed_for(root_seed: int, index: int, image_index: int) -> int:
    return int(np.random.SeedSequence([root_seed, index, image_index]).generate_state(1)[0])


def make_dataset(
    n_identities: int,
    images_per_identity: int,
    root_seed: int,
    out_dir: Path | str,
    start_identity: int = 0,
) -> Manifest:
    """Render a bona fide dataset to ``out_dir`` and return its manifest.

    Layout: id_<identity>/img_<k>.png with sibling .lm5.csv/.lm68.csv
    landmark files; manifest.json at the root. Fully determined by
    (n_identities, images_per_identity, root_seed, start_identity).
    """
    if n_identities < 2:
        raise DomainError("need at least 2 identities")
    if images_per_identity < 1:
        raise DomainError("need at least 1 image per identity")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(start_identity, start_identity + n_identities):
        label = f"id_{i:04d}"
        params = make_identity(identity_seed_for(root_seed, i))
        id_dir = out / label
        id_dir.mkdir(exist_ok=True)
        for k in range(images_per_identity):
            face = render(params, variation_seed_for(root_seed, i, k), identity_id=label)
            rel = f"{label}/img_{k:03d}.png"
            save_png(id_dir / f"img_{k:03d}.png", face.image)
            geometry.write_landmarks_csv(out / f"{rel}.lm5.csv", rel, face.lm5.to_array())
            geometry.write_landmarks_csv(out / f"{rel}.lm68.csv", rel, face.lm68.to_array())
            entries.append(
                Sample(
                    image_path=rel,
                    lm5_path=f"{rel}.lm5.csv",
                    lm68_path=f"{rel}.lm68.csv",
                    first_label=label,
                    second_label=label,
                    authenticity=AUTH_BONA_FIDE,
                    provenance=f"synth:seed={root_seed}",
                )
            )
    manifest = Manifest(entries=entries, root=out)
    manifest.save(out / "manifest.json")
    return manifest
