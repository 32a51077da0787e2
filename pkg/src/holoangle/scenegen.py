"""Synthetic RGB + 8-bit depth capture of two-object scenes on a circular track.

A primary-ray raycaster over four analytic primitives (sphere, cube, cone,
torus). Depth is planar (distance along the camera forward axis) and is
quantized linearly: ``near_m`` maps to byte 255, ``far_m`` to byte 0, and
background pixels are 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import fileio
from .errors import ConfigurationError, DataValidationError, DatasetIOError
from .viewgeom import DEFAULT_RADIUS_M, CameraPose, camera_pose, cos_sin_deg

SHAPES = ("torus", "cube", "cone", "sphere")
DEFAULT_RESOLUTION = (640, 360)  # (W, H)
DEFAULT_SEPARATION_M = 0.083
DEPTH_MARGIN_M = 0.02

# Horizontal half field of view has tan = 0.5: a 5 cm object spans a quarter
# of the image width at the 20 cm track radius.
TAN_HALF_FOV = 0.5
AMBIENT = 0.3


@dataclass(frozen=True)
class DepthMapping:
    near_m: float = 0.11
    far_m: float = 0.287

    def __post_init__(self):
        if not 0 < self.near_m < self.far_m:
            raise ConfigurationError(
                f"depth mapping needs 0 < near < far, got near={self.near_m} far={self.far_m}")


def depth_quantize(distance_m, mapping: DepthMapping = DepthMapping()):
    """Map planar distance to a depth byte, 255 at ``near_m`` down to 0 at ``far_m``.

    Out-of-slab distances clamp; ``inf`` (no hit) gives 0. Works on scalars
    and arrays; rounding is half-up.
    """
    d = np.asarray(distance_m, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        frac = (mapping.far_m - d) / (mapping.far_m - mapping.near_m)
    frac = np.clip(np.nan_to_num(frac, nan=0.0, neginf=0.0), 0.0, 1.0)
    out = np.floor(255.0 * frac + 0.5).astype(np.uint8)
    if out.ndim == 0:
        return int(out)
    return out


def _rot_z(deg):
    c, s = cos_sin_deg(deg)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_x(deg):
    c, s = cos_sin_deg(deg)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


@dataclass(frozen=True)
class Primitive:
    """One solid. ``size`` per kind: sphere (radius,), cube (edge,),
    torus (major, minor), cone (base radius, height). Local axis is +z;
    orientation is yaw about world z applied after tilt about x."""

    kind: str
    center: tuple[float, float, float]
    size: tuple[float, ...]
    color: tuple[int, int, int]
    yaw_deg: float = 0.0
    tilt_deg: float = 0.0

    def __post_init__(self):
        if self.kind not in SHAPES:
            raise ConfigurationError(f"unknown primitive kind {self.kind!r}")
        need = {"sphere": 1, "cube": 1, "torus": 2, "cone": 2}[self.kind]
        if len(self.size) != need:
            raise ConfigurationError(f"{self.kind} takes {need} size parameter(s), got {self.size}")

    @property
    def degenerate(self) -> bool:
        if any(not s > 0 for s in self.size):
            return True
        return self.kind == "torus" and self.size[1] >= self.size[0]

    @property
    def rotation(self) -> np.ndarray:
        """World-from-local rotation."""
        return _rot_z(self.yaw_deg) @ _rot_x(self.tilt_deg)

    def surface_samples(self, count: int = 64) -> np.ndarray:
        """World-space points on the surface, dense enough for extent checks."""
        u = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        if self.kind == "sphere":
            v = np.linspace(0.0, np.pi, count)
            uu, vv = np.meshgrid(u, v)
            r = self.size[0]
            pts = np.stack([r * np.sin(vv) * np.cos(uu), r * np.sin(vv) * np.sin(uu), r * np.cos(vv)], -1)
        elif self.kind == "cube":
            h = self.size[0] / 2
            pts = np.array([[sx, sy, sz] for sx in (-h, h) for sy in (-h, h) for sz in (-h, h)])
        elif self.kind == "torus":
            big, small = self.size
            uu, vv = np.meshgrid(u, u)
            ring = big + small * np.cos(vv)
            pts = np.stack([ring * np.cos(uu), ring * np.sin(uu), small * np.sin(vv)], -1)
        else:
            radius, height = self.size
            base = np.stack([radius * np.cos(u), radius * np.sin(u), np.full_like(u, -height / 2)], -1)
            pts = np.vstack([base, [[0.0, 0.0, height / 2]]])
        pts = pts.reshape(-1, 3) @ self.rotation.T
        return pts + np.asarray(self.center)


DEFAULT_SIZES = {
    "sphere": (0.025,),
    "cube": (0.04,),
    "torus": (0.025, 0.01),
    "cone": (0.025, 0.05),
}
DEFAULT_COLORS = ((230, 96, 64), (72, 144, 232))
# (yaw, tilt) per shape. With the 45 degree pair axis the cube faces the axis
# and the torus ring stands across it, which keeps both inside the depth slab
# margin from every track angle.
DEFAULT_POSES = {
    "sphere": (0.0, 0.0),
    "cube": (45.0, 0.0),
    "torus": (135.0, 90.0),
    "cone": (0.0, 0.0),
}


@dataclass(frozen=True)
class SceneSpec:
    """Scene description. Build the standard two-object scenes with :func:`pair_scene`."""

    shape_kind: str
    objects: tuple[Primitive, ...]
    background: tuple[int, int, int] = (0, 0, 0)
    object_separation_m: float = DEFAULT_SEPARATION_M
    enabled: tuple[bool, ...] | None = None

    def __post_init__(self):
        if self.enabled is not None and len(self.enabled) != len(self.objects):
            raise ConfigurationError("enabled flags must match the object count")

    def active(self) -> list[tuple[int, Primitive]]:
        flags = self.enabled or (True,) * len(self.objects)
        return [(i, p) for i, (p, on) in enumerate(zip(self.objects, flags)) if on]

    def check_margin(self, mapping: DepthMapping = DepthMapping(),
                     radius_m: float = DEFAULT_RADIUS_M, margin_m: float = DEPTH_MARGIN_M) -> None:
        """Raise unless every object stays ``margin_m`` inside the depth slab from every track angle."""
        for i, prim in self.active():
            reach = float(np.max(np.hypot(*prim.surface_samples(256)[:, :2].T)))
            closest, farthest = radius_m - reach, radius_m + reach
            if closest < mapping.near_m + margin_m - 1e-12 or farthest > mapping.far_m - margin_m + 1e-12:
                raise ConfigurationError(
                    f"object {i} ({prim.kind}) spans planar depth [{closest:.4f}, {farthest:.4f}] m, "
                    f"outside slab [{mapping.near_m}, {mapping.far_m}] m with {margin_m} m margin")


def pair_scene(shape_kind: str, separation_m: float = DEFAULT_SEPARATION_M,
               pair_axis_deg: float = 45.0, colors=DEFAULT_COLORS,
               background=(0, 0, 0), size=None) -> SceneSpec:
    """Two identical primitives at +/- separation/2 along a horizontal axis.

    Object 0 sits on the camera side at track angle 0 and is drawn in
    ``colors[0]``. The axis is tilted off the x axis so both objects are
    visible (partly overlapping at some angles) from the 0 degree view.
    """
    if shape_kind not in SHAPES:
        raise ConfigurationError(f"shape must be one of {SHAPES}, got {shape_kind!r}")
    size = tuple(size) if size is not None else DEFAULT_SIZES[shape_kind]
    c, s = cos_sin_deg(pair_axis_deg)
    half = separation_m / 2
    yaw, tilt = DEFAULT_POSES[shape_kind]
    objects = tuple(
        Primitive(shape_kind, (sign * half * c, sign * half * s, 0.0), size, tuple(colors[i]),
                  yaw_deg=yaw, tilt_deg=tilt)
        for i, sign in enumerate((1.0, -1.0)))
    return SceneSpec(shape_kind=shape_kind, objects=objects, background=tuple(background),
                     object_separation_m=separation_m)


@dataclass
class Frame:
    rgb: np.ndarray      # (H, W, 3) uint8
    depth: np.ndarray    # (H, W) uint8
    pose: CameraPose
    labels: np.ndarray | None = field(default=None, repr=False)  # object index per pixel, -1 = background

    def __post_init__(self):
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise DataValidationError(f"rgb must be HxWx3, got {self.rgb.shape}")
        if self.rgb.shape[:2] != self.depth.shape:
            raise DataValidationError(
                f"rgb {self.rgb.shape[:2]} and depth {self.depth.shape} resolutions differ")

    @property
    def resolution(self) -> tuple[int, int]:
        return self.depth.shape[1], self.depth.shape[0]


# -- ray/primitive intersection, all in the primitive's local frame --------

def _first_root(a, b, c):
    """Smallest positive root of a t^2 + 2 b t + c = 0 (inf when none)."""
    disc = b * b - a * c
    t = np.full(a.shape, np.inf)
    ok = (disc >= 0) & (a != 0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    safe_a = np.where(ok, a, 1.0)
    t0 = (-b - sq) / safe_a
    t1 = (-b + sq) / safe_a
    lo, hi = np.minimum(t0, t1), np.maximum(t0, t1)
    t = np.where(ok & (lo > 1e-9), lo, np.where(ok & (hi > 1e-9), hi, np.inf))
    return t, lo, hi, ok


def _dot(u, v):
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + u[..., 2] * v[..., 2]


def _hit_sphere(o, d, size):
    r = size[0]
    t, *_ = _first_root(_dot(d, d), _dot(o, d), _dot(o, o) - r * r)
    p = o + np.where(np.isfinite(t), t, 0.0)[..., None] * d
    return t, p


def _hit_cube(o, d, size):
    h = size[0] / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (-h - o) * inv
        t2 = (h - o) * inv
    tmin = np.nanmax(np.minimum(t1, t2), axis=-1)
    tmax = np.nanmin(np.maximum(t1, t2), axis=-1)
    hit = (tmin <= tmax) & (tmax > 1e-9)
    t = np.where(hit, np.where(tmin > 1e-9, tmin, tmax), np.inf)
    tt = np.where(np.isfinite(t), t, 0.0)
    p = o + tt[..., None] * d
    # face normal: coordinate sitting on the boundary
    axis = np.argmax(np.abs(p) / h, axis=-1)
    n = np.zeros_like(p)
    np.put_along_axis(n, axis[..., None], np.sign(np.take_along_axis(p, axis[..., None], -1)), -1)
    return t, n


def _hit_cone(o, d, size):
    radius, height = size
    k2 = (radius / height) ** 2
    q0 = height / 2 - o[..., 2]
    a = d[..., 0] ** 2 + d[..., 1] ** 2 - k2 * d[..., 2] ** 2
    b = o[..., 0] * d[..., 0] + o[..., 1] * d[..., 1] + k2 * q0 * d[..., 2]
    c = o[..., 0] ** 2 + o[..., 1] ** 2 - k2 * q0 * q0
    _, lo, hi, ok = _first_root(a, b, c)
    best = np.full(a.shape, np.inf)
    for root in (hi, lo):
        z = o[..., 2] + root * d[..., 2]
        valid = ok & (root > 1e-9) & (z >= -height / 2) & (z <= height / 2)
        best = np.where(valid & (root < best), root, best)
    with np.errstate(divide="ignore", invalid="ignore"):
        tb = (-height / 2 - o[..., 2]) / d[..., 2]
    pb = o + np.where(np.isfinite(tb), tb, 0.0)[..., None] * d
    base_ok = np.isfinite(tb) & (tb > 1e-9) & (pb[..., 0] ** 2 + pb[..., 1] ** 2 <= radius * radius)
    on_base = base_ok & (tb < best)
    t = np.where(on_base, tb, best)
    p = o + np.where(np.isfinite(t), t, 0.0)[..., None] * d
    n = np.stack([p[..., 0], p[..., 1], k2 * (height / 2 - p[..., 2])], -1)
    n = np.where(on_base[..., None], np.array([0.0, 0.0, -1.0]), n)
    return t, n


def _torus_f(p, big, small):
    rho2 = p[..., 0] * p[..., 0] + p[..., 1] * p[..., 1]
    s = rho2 + p[..., 2] * p[..., 2] + (big * big - small * small)
    return s * s - 4.0 * big * big * rho2


def _hit_torus(o, d, size, samples=96, bisections=48):
    big, small = size
    bound = big + small
    _, lo, hi, ok = _first_root(_dot(d, d), _dot(o, d), _dot(o, o) - bound * bound)
    t = np.full(lo.shape, np.inf)
    idx = np.nonzero(ok & (hi > 0))
    if idx[0].size:
        oo, dd = o[idx], d[idx]
        t0 = np.maximum(lo[idx], 0.0)
        t1 = hi[idx]
        steps = np.linspace(0.0, 1.0, samples)
        ts = t0[:, None] + (t1 - t0)[:, None] * steps[None, :]
        f = _torus_f(oo[:, None, :] + ts[..., None] * dd[:, None, :], big, small)
        inside = f <= 0
        has = inside.any(axis=1)
        first = np.argmax(inside, axis=1)
        rows = np.nonzero(has & (first > 0))[0]
        a = ts[rows, first[rows] - 1]
        b = ts[rows, first[rows]]
        orow, drow = oo[rows], dd[rows]
        for _ in range(bisections):
            m = 0.5 * (a + b)
            fm = _torus_f(orow + m[:, None] * drow, big, small)
            a = np.where(fm > 0, m, a)
            b = np.where(fm > 0, b, m)
        hits = np.full(oo.shape[0], np.inf)
        hits[rows] = b
        t[idx] = hits
    p = o + np.where(np.isfinite(t), t, 0.0)[..., None] * d
    rho2 = p[..., 0] * p[..., 0] + p[..., 1] * p[..., 1]
    s = rho2 + p[..., 2] * p[..., 2] + (big * big - small * small)
    g = 4.0 * s - 8.0 * big * big
    n = np.stack([p[..., 0] * g, p[..., 1] * g, 4.0 * s * p[..., 2]], -1)
    return t, n


_HIT = {"sphere": _hit_sphere, "cube": _hit_cube, "cone": _hit_cone, "torus": _hit_torus}


def camera_rays(pose: CameraPose, resolution=DEFAULT_RESOLUTION):
    """Ray origin and (H, W, 3) directions with unit component along ``pose.forward``."""
    width, height = resolution
    xs = ((np.arange(width) + 0.5) * (2.0 / width) - 1.0) * TAN_HALF_FOV
    ys = (1.0 - (np.arange(height) + 0.5) * (2.0 / height)) * TAN_HALF_FOV * (height / width)
    f, r, u = pose.forward, pose.right, pose.up
    dirs = (f[None, None, :] + xs[None, :, None] * r[None, None, :]) + ys[:, None, None] * u[None, None, :]
    return pose.position, dirs


def render_view(scene: SceneSpec, pose: CameraPose, resolution=DEFAULT_RESOLUTION,
                mapping: DepthMapping = DepthMapping()) -> Frame:
    """Raycast one RGB + depth frame. Deterministic: same inputs give identical bytes."""
    width, height = resolution
    if width < 1 or height < 1:
        raise ConfigurationError(f"bad resolution {resolution}")
    origin, dirs = camera_rays(pose, resolution)
    depth_t = np.full((height, width), np.inf)
    shade = np.zeros((height, width))
    labels = np.full((height, width), -1, dtype=np.int16)
    for i, prim in scene.active():
        if prim.degenerate:
            raise ConfigurationError(f"object {i} ({prim.kind}) has degenerate size {prim.size}")
        rot = prim.rotation
        o_local = (origin - np.asarray(prim.center)) @ rot
        d_local = dirs @ rot
        t, n = _HIT[prim.kind](np.broadcast_to(o_local, d_local.shape), d_local, prim.size)
        closer = t < depth_t
        with np.errstate(invalid="ignore", divide="ignore"):
            cosang = np.abs(_dot(n, d_local)) / np.sqrt(_dot(n, n) * _dot(d_local, d_local))
        cosang = np.nan_to_num(cosang, nan=1.0)
        depth_t = np.where(closer, t, depth_t)
        shade = np.where(closer, cosang, shade)
        labels = np.where(closer, i, labels)
    rgb = np.empty((height, width, 3), dtype=np.uint8)
    rgb[:] = np.asarray(scene.background, dtype=np.uint8)
    for i, prim in scene.active():
        mask = labels == i
        lit = np.asarray(prim.color, dtype=np.float64)[None, :] * (AMBIENT + (1 - AMBIENT) * shade[mask])[:, None]
        rgb[mask] = np.floor(lit + 0.5).astype(np.uint8)
    depth = depth_quantize(depth_t, mapping)
    return Frame(rgb=rgb, depth=depth, pose=pose, labels=labels)


# -- dataset layout -------------------------------------------------------

def _is_power_of_two(k: int) -> bool:
    return k >= 1 and (k & (k - 1)) == 0


def view_angles(view_count: int) -> list[float]:
    if isinstance(view_count, bool) or int(view_count) != view_count or not _is_power_of_two(int(view_count)):
        raise ConfigurationError(f"view count must be a power of two, got {view_count}")
    if view_count > 1024:
        raise ConfigurationError(f"view count is capped at 1024, got {view_count}")
    step = 360.0 / view_count
    return [k * step for k in range(int(view_count))]


def scene_to_json(scene: SceneSpec) -> dict:
    return json.loads(json.dumps(asdict(scene)))


def scene_from_json(payload: dict) -> SceneSpec:
    objects = tuple(Primitive(kind=o["kind"], center=tuple(o["center"]), size=tuple(o["size"]),
                              color=tuple(o["color"]), yaw_deg=o.get("yaw_deg", 0.0),
                              tilt_deg=o.get("tilt_deg", 0.0)) for o in payload["objects"])
    enabled = payload.get("enabled")
    return SceneSpec(shape_kind=payload["shape_kind"], objects=objects,
                     background=tuple(payload.get("background", (0, 0, 0))),
                     object_separation_m=payload.get("object_separation_m", DEFAULT_SEPARATION_M),
                     enabled=tuple(enabled) if enabled is not None else None)


def view_dir_name(index: int) -> str:
    return f"view_{index:04d}"


def write_frame(view_dir, frame: Frame, mapping: DepthMapping, index: int | None = None) -> None:
    view_dir = Path(view_dir)
    try:
        view_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetIOError(f"cannot create {view_dir}: {exc}") from exc
    fileio.write_png(view_dir / "rgb.png", frame.rgb)
    fileio.write_pgm(view_dir / "depth.pgm", frame.depth)
    meta = {
        "angle_deg": frame.pose.angle_deg,
        "radius_m": frame.pose.radius_m,
        "resolution": list(frame.resolution),
        "depth_mapping": {"near_m": mapping.near_m, "far_m": mapping.far_m},
    }
    if index is not None:
        meta["index"] = index
    fileio.write_json(view_dir / "meta.json", meta)


def read_frame(view_dir) -> Frame:
    view_dir = Path(view_dir)
    meta = fileio.read_json(view_dir / "meta.json")
    rgb = fileio.read_png(view_dir / "rgb.png")
    depth = fileio.read_pgm(view_dir / "depth.pgm")
    pose = camera_pose(meta["angle_deg"], meta["radius_m"])
    frame = Frame(rgb=rgb, depth=depth, pose=pose)
    if list(frame.resolution) != list(meta["resolution"]):
        raise DataValidationError(f"{view_dir}: image size {frame.resolution} disagrees with meta.json")
    return frame


def generate_dataset(scene: SceneSpec, view_count: int, out_dir, resolution=DEFAULT_RESOLUTION,
                     mapping: DepthMapping = DepthMapping(), radius_m: float = DEFAULT_RADIUS_M,
                     check_margin: bool = True) -> dict:
    """Render ``view_count`` evenly spaced views into ``<out_dir>/<shape>/`` and return the manifest."""
    angles = view_angles(view_count)
    if check_margin:
        scene.check_margin(mapping, radius_m)
    root = Path(out_dir) / scene.shape_kind
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetIOError(f"cannot create {root}: {exc}") from exc
    views = []
    for k, angle in enumerate(angles):
        frame = render_view(scene, camera_pose(angle, radius_m), resolution, mapping)
        write_frame(root / view_dir_name(k), frame, mapping, index=k)
        views.append({"index": k, "angle_deg": angle, "dir": view_dir_name(k)})
    manifest = {
        "shape": scene.shape_kind,
        "view_count": int(view_count),
        "step_deg": 360.0 / view_count,
        "radius_m": radius_m,
        "resolution": list(resolution),
        "depth_mapping": {"near_m": mapping.near_m, "far_m": mapping.far_m},
        "scene": scene_to_json(scene),
        "views": views,
    }
    fileio.write_json(root / "manifest.json", manifest)
    return manifest


class Dataset:
    """Read-side view of one ``<root>/<shape>/`` directory."""

    def __init__(self, shape_dir):
        self.root = Path(shape_dir)
        manifest_path = self.root / "manifest.json"
        if not manifest_path.is_file():
            raise DatasetIOError(f"no dataset manifest at {manifest_path}")
        self.manifest = fileio.read_json(manifest_path)
        self.view_count = int(self.manifest["view_count"])
        self.mapping = DepthMapping(**self.manifest["depth_mapping"])
        self.scene = scene_from_json(self.manifest["scene"])
        self._by_index = {v["index"]: v for v in self.manifest["views"]}
        if len(self._by_index) != self.view_count:
            raise DataValidationError(f"{manifest_path}: lists {len(self._by_index)} views, "
                                      f"expected {self.view_count}")

    @classmethod
    def open(cls, data_root, shape: str) -> "Dataset":
        return cls(Path(data_root) / shape)

    def index_of(self, angle_deg: float) -> int:
        k = angle_deg * self.view_count / 360.0
        if k != math.floor(k):
            raise DataValidationError(f"angle {angle_deg} is not on this dataset's {self.view_count}-view grid")
        return int(k) % self.view_count

    def angle_of(self, index: int) -> float:
        return float(self._by_index[index]["angle_deg"])

    def view_dir(self, angle_deg: float) -> Path:
        return self.root / self._by_index[self.index_of(angle_deg)]["dir"]

    def frame(self, angle_deg: float) -> Frame:
        return read_frame(self.view_dir(angle_deg))


def with_enabled(scene: SceneSpec, enabled) -> SceneSpec:
    return replace(scene, enabled=tuple(enabled))
