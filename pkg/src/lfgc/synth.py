"""Synthetic light fields with exact ground-truth disparity and labels.

Scenes are stacks of constant-disparity layers painted back to front. Layer
geometry is given in the coordinates of the anchor (centre) view; a view at
angular offset ``(dr, dc)`` from the anchor sees every layer shifted by
``(-dr * d, -dc * d)`` pixels, snapped to the nearest integer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import DataError
from .model import DisparityMap, LabelMap, LightFieldGrid, ViewIndex, grid_views

TEXTURES = ("flat", "gradient", "noise")
SHAPES = ("rect", "ellipse")


def round_half_up(x):
    """Nearest-integer snapping used for every disparity shift."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


@dataclass
class Texture:
    kind: str = "flat"
    slope: Tuple[float, float] = (0.0, 0.0)  # gradient, intensity per pixel (dy, dx)
    amplitude: float = 0.0  # noise std-dev
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in TEXTURES:
            raise DataError(f"unknown texture kind {self.kind!r}")


@dataclass
class Layer:
    shape: str
    box: Tuple[int, int, int, int]  # top, left, height, width in anchor-view pixels
    disparity: float
    intensity: float
    texture: Texture = field(default_factory=Texture)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise DataError(f"unknown layer shape {self.shape!r}")
        if not math.isfinite(self.disparity):
            raise DataError("layer disparity must be finite")
        if self.box[2] < 1 or self.box[3] < 1:
            raise DataError(f"layer box {self.box} is empty")

    def mask(self, ly: np.ndarray, lx: np.ndarray) -> np.ndarray:
        top, left, h, w = self.box
        if self.shape == "rect":
            return (ly >= top) & (ly < top + h) & (lx >= left) & (lx < left + w)
        cy, cx = top + (h - 1) / 2.0, left + (w - 1) / 2.0
        ry, rx = h / 2.0, w / 2.0
        return ((ly - cy) / ry) ** 2 + ((lx - cx) / rx) ** 2 <= 1.0


@dataclass
class SceneSpec:
    grid: Tuple[int, int]
    view: Tuple[int, int]
    layers: List[Layer] = field(default_factory=list)
    background_disparity: float = 0.0
    background_intensity: float = 128.0
    background_texture: Texture = field(default_factory=Texture)
    seed: int = 0

    @property
    def anchor(self) -> ViewIndex:
        return ViewIndex((self.grid[0] + 1) // 2, (self.grid[1] + 1) // 2)

    def shift(self, idx: ViewIndex, disparity: float) -> Tuple[int, int]:
        a = self.anchor
        dr, dc = idx.row - a.row, idx.col - a.col
        return int(round_half_up(-dr * disparity)), int(round_half_up(-dc * disparity))

    def validate(self) -> List[str]:
        """Return every bound violation (empty when the spec is renderable)."""
        problems = []
        n_rows, n_cols = self.grid
        h, w = self.view
        if n_rows < 1 or n_cols < 1 or h < 1 or w < 1:
            problems.append(f"grid {self.grid} / view {self.view} must be positive")
            return problems
        if not math.isfinite(self.background_disparity):
            problems.append("background disparity must be finite")
        corners = [ViewIndex(r, c) for r in (1, n_rows) for c in (1, n_cols)]
        for k, layer in enumerate(self.layers, start=1):
            top, left, lh, lw = layer.box
            for idx in corners:
                sy, sx = self.shift(idx, layer.disparity)
                if top + sy < 0 or left + sx < 0 or top + lh + sy > h or left + lw + sx > w:
                    problems.append(
                        f"layer {k} leaves the frame at view {idx} "
                        f"(box {layer.box} shifted by {(sy, sx)} in {h}x{w})")
                    break
        return problems

    # -- JSON -----------------------------------------------------------------

    @classmethod
    def from_json(cls, obj: dict) -> "SceneSpec":
        def tex(o):
            o = dict(o or {})
            return Texture(o.get("kind", "flat"), tuple(o.get("slope", (0.0, 0.0))),
                           float(o.get("amplitude", 0.0)), o.get("seed"))

        try:
            bg = obj.get("background", {})
            layers = [
                Layer(l.get("shape", "rect"), tuple(int(v) for v in l["box"]), float(l["disparity"]),
                      float(l.get("intensity", 200)), tex(l.get("texture")))
                for l in obj.get("layers", [])
            ]
            return cls(
                grid=tuple(int(v) for v in obj["grid"]),
                view=tuple(int(v) for v in obj["view"]),
                layers=layers,
                background_disparity=float(bg.get("disparity", 0.0)),
                background_intensity=float(bg.get("intensity", 128.0)),
                background_texture=tex(bg.get("texture")),
                seed=int(obj.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"invalid scene spec: {exc}") from exc

    def to_json(self) -> dict:
        def tex(t: Texture):
            return {"kind": t.kind, "slope": list(t.slope), "amplitude": t.amplitude, "seed": t.seed}

        return {
            "grid": list(self.grid),
            "view": list(self.view),
            "seed": self.seed,
            "background": {"disparity": self.background_disparity,
                           "intensity": self.background_intensity,
                           "texture": tex(self.background_texture)},
            "layers": [{"shape": l.shape, "box": list(l.box), "disparity": l.disparity,
                        "intensity": l.intensity, "texture": tex(l.texture)} for l in self.layers],
        }

    @classmethod
    def load(cls, path) -> "SceneSpec":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_json(obj)


def _texture_field(tex: Texture, base: float, ly, lx, pad: int, canvas: Tuple[int, int], seed: int):
    if tex.kind == "flat":
        return np.full(ly.shape, base, dtype=np.float64)
    if tex.kind == "gradient":
        return base + tex.slope[0] * ly + tex.slope[1] * lx
    rng = np.random.default_rng(tex.seed if tex.seed is not None else seed)
    noise = rng.normal(0.0, tex.amplitude, size=(canvas[0] + 2 * pad, canvas[1] + 2 * pad))
    iy = np.clip(ly + pad, 0, noise.shape[0] - 1)
    ix = np.clip(lx + pad, 0, noise.shape[1] - 1)
    return base + noise[iy, ix]


def render_lf(spec: SceneSpec):
    """Render ``spec`` to ``(LightFieldGrid, {view: DisparityMap}, {view: LabelMap})``.

    Label 0 is the background and layer ``k`` (1-based, back to front) gets
    label ``k``; the label at a pixel is the front-most layer covering it.
    """
    problems = spec.validate()
    if problems:
        raise DataError("; ".join(problems))
    n_rows, n_cols = spec.grid
    h, w = spec.view
    all_d = [spec.background_disparity] + [l.disparity for l in spec.layers]
    pad = int(math.ceil(max(abs(d) for d in all_d) * max(n_rows, n_cols))) + 1
    yy, xx = np.mgrid[0:h, 0:w]
    n_labels = len(spec.layers) + 1

    views = np.empty((n_rows, n_cols, h, w), dtype=np.uint8)
    disps: Dict[ViewIndex, DisparityMap] = {}
    labels: Dict[ViewIndex, LabelMap] = {}
    for idx in grid_views(n_rows, n_cols):
        sy, sx = spec.shift(idx, spec.background_disparity)
        img = _texture_field(spec.background_texture, spec.background_intensity,
                             yy - sy, xx - sx, pad, (h, w), spec.seed)
        lab = np.zeros((h, w), dtype=np.int32)
        dmap = np.full((h, w), spec.background_disparity, dtype=np.float64)
        for k, layer in enumerate(spec.layers, start=1):
            sy, sx = spec.shift(idx, layer.disparity)
            ly, lx = yy - sy, xx - sx
            m = layer.mask(ly, lx)
            tex = _texture_field(layer.texture, layer.intensity, ly, lx, pad, (h, w), spec.seed + k)
            img[m] = tex[m]
            lab[m] = k
            dmap[m] = layer.disparity
        views[idx.row - 1, idx.col - 1] = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
        disps[idx] = DisparityMap(dmap)
        labels[idx] = LabelMap(lab, n_labels)
    return LightFieldGrid(views), disps, labels


def apply_vignette(view: np.ndarray, strength: float) -> np.ndarray:
    """Radial-quadratic gain falloff ``1 - strength * (r / r_max)**2``."""
    if not math.isfinite(strength):
        raise DataError("vignette strength must be finite")
    view = np.asarray(view)
    h, w = view.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w]
    r2 = (yy - cy) ** 2 + (xx - cx) ** 2
    r2max = cy ** 2 + cx ** 2
    gain = 1.0 - strength * (r2 / r2max if r2max > 0 else np.zeros_like(r2, dtype=float))
    out = view.astype(np.float64) * gain
    if view.dtype == np.uint8:
        return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    return np.clip(out, 0.0, None)


def gamma_correct(view: np.ndarray, gamma: float) -> np.ndarray:
    """``round(255 * (v / 255) ** (1 / gamma))`` on 8-bit data."""
    if not gamma > 0:
        raise DataError(f"gamma must be > 0, got {gamma}")
    v = np.asarray(view, dtype=np.float64)
    out = 255.0 * (v / 255.0) ** (1.0 / gamma)
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def perturb_disparity(dmap: DisparityMap, noise_sigma: float, seed: int) -> DisparityMap:
    """Add seeded i.i.d. Gaussian noise (deterministic for a fixed seed)."""
    if noise_sigma < 0:
        raise DataError("noise sigma must be >= 0")
    if noise_sigma == 0:
        return DisparityMap(dmap.values)
    rng = np.random.default_rng(seed)
    return DisparityMap(dmap.values + rng.normal(0.0, noise_sigma, size=dmap.shape))


def degrade(lf: LightFieldGrid, vignette: float = 0.0, gamma: Optional[float] = None) -> LightFieldGrid:
    """Vignette every view, then optionally gamma-correct it."""
    out = lf.views.copy()
    for r in range(lf.n_rows):
        for c in range(lf.n_cols):
            v = out[r, c]
            if vignette:
                v = apply_vignette(v, vignette)
            if gamma is not None:
                v = gamma_correct(v, gamma)
            out[r, c] = v
    return LightFieldGrid(out)


# -- canned scenes -------------------------------------------------------------------

def _boxes_overlap(a, b, margin):
    return not (a[0] + a[2] + margin <= b[0] or b[0] + b[2] + margin <= a[0]
                or a[1] + a[3] + margin <= b[1] or b[1] + b[3] + margin <= a[1])


def random_scene(grid: Tuple[int, int], view: Tuple[int, int], n_layers: int, disparities,
                 seed: int = 0, overlap: bool = False, texture: str = "gradient",
                 size_range: Tuple[int, int] = (6, 16), background_disparity: float = 0.0) -> SceneSpec:
    """Random rectangle/ellipse stack that satisfies the frame bounds.

    ``disparities`` is a sequence of candidate layer disparities. With
    ``overlap=False`` no two layers ever overlap in any view, so only the
    background is occluded. With ``overlap=True`` layers are sorted so that a
    larger ``|d|`` is painted in front.
    """
    rng = np.random.default_rng(seed)
    n_rows, n_cols = grid
    h, w = view
    reach = int(math.ceil(max(abs(float(d)) for d in list(disparities) + [0.0])
                          * max(n_rows, n_cols) / 2.0)) + 1
    layers: List[Layer] = []
    boxes = []
    attempts = 0
    while len(layers) < n_layers and attempts < 5000:
        attempts += 1
        lh = int(rng.integers(size_range[0], size_range[1] + 1))
        lw = int(rng.integers(size_range[0], size_range[1] + 1))
        if lh + 2 * reach >= h or lw + 2 * reach >= w:
            continue
        top = int(rng.integers(reach, h - lh - reach + 1))
        left = int(rng.integers(reach, w - lw - reach + 1))
        box = (top, left, lh, lw)
        if not overlap and any(_boxes_overlap(box, b, 2 * reach + 1) for b in boxes):
            continue
        d = float(rng.choice(np.asarray(disparities, dtype=float)))
        shape = "rect" if rng.random() < 0.6 else "ellipse"
        inten = float(rng.integers(20, 236))
        if texture == "gradient":
            tex = Texture("gradient", (float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2))))
        elif texture == "noise":
            tex = Texture("noise", amplitude=8.0, seed=int(rng.integers(1 << 30)))
        else:
            tex = Texture("flat")
        layers.append(Layer(shape, box, d, inten, tex))
        boxes.append(box)
    if overlap:
        layers.sort(key=lambda l: abs(l.disparity))
    bg_tex = Texture("gradient", (0.5, 0.8)) if texture != "flat" else Texture("flat")
    spec = SceneSpec(grid=grid, view=view, layers=layers, background_disparity=background_disparity,
                     background_intensity=90.0, background_texture=bg_tex, seed=seed)
    problems = spec.validate()
    if problems:
        raise DataError("; ".join(problems))
    return spec
