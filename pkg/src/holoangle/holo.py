"""Layer-based hologram synthesis, angular-spectrum propagation and Lee encoding.

A frame's depth bytes are split into ``layer_count`` slabs; every slab is a
planar source carrying the RGB amplitude, propagated to the hologram plane
with the band-limited angular spectrum method and summed. Lee's encoding
writes the complex hologram H = a + ib as four non-negative planes on the
phases 0, pi/2, pi and 3pi/2.
"""

from __future__ import annotations

import functools
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import fileio
from .errors import ConfigurationError, DataValidationError, DatasetIOError, NumericError
from .scenegen import DepthMapping, Frame

CHANNELS = ("r", "g", "b")
PHASE_MODES = ("zero", "random")
FOURK_RESOLUTION = (3840, 2160)


@dataclass(frozen=True)
class OpticsConfig:
    """Hologram-plane geometry and illumination.

    Depth byte 255 maps to ``z_near_m`` and byte 0 to ``z_far_m``. The
    defaults are the capture depth-slab endpoints scaled by 0.1, which keeps
    the Fresnel numbers manageable at an 8 um pitch.
    """

    wavelengths_m: tuple[float, float, float] = (638e-9, 520e-9, 450e-9)
    pixel_pitch_m: float = 8e-6
    z_near_m: float = 0.011
    z_far_m: float = 0.0287
    layer_count: int = 32
    phase_mode: str = "random"
    seed: int = 42

    def __post_init__(self):
        if len(self.wavelengths_m) != 3 or any(not w > 0 for w in self.wavelengths_m):
            raise ConfigurationError(f"need three positive wavelengths, got {self.wavelengths_m}")
        if not self.pixel_pitch_m > 0:
            raise ConfigurationError(f"pixel pitch must be positive, got {self.pixel_pitch_m}")
        if not 0 < self.z_near_m < self.z_far_m:
            raise ConfigurationError(f"need 0 < z_near < z_far, got {self.z_near_m}, {self.z_far_m}")
        if int(self.layer_count) != self.layer_count or self.layer_count < 2:
            raise ConfigurationError(f"layer_count must be an integer >= 2, got {self.layer_count}")
        if self.phase_mode not in PHASE_MODES:
            raise ConfigurationError(f"phase_mode must be one of {PHASE_MODES}, got {self.phase_mode!r}")

    @classmethod
    def from_depth_mapping(cls, mapping: DepthMapping, scale: float = 0.1, **kwargs) -> "OpticsConfig":
        return cls(z_near_m=mapping.near_m * scale, z_far_m=mapping.far_m * scale, **kwargs)

    @classmethod
    def fourk_preset(cls, **kwargs) -> "OpticsConfig":
        kwargs.setdefault("pixel_pitch_m", 3.6e-6)
        return cls(**kwargs)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, payload: dict) -> "OpticsConfig":
        known = {k: payload[k] for k in cls.__dataclass_fields__ if k in payload}
        if "wavelengths_m" in known:
            known["wavelengths_m"] = tuple(known["wavelengths_m"])
        try:
            return cls(**known)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    def layer_distances(self) -> np.ndarray:
        """Distance of each layer, index 0 at ``z_far_m`` up to the last at ``z_near_m``."""
        i = np.arange(self.layer_count)
        return self.z_far_m + (self.z_near_m - self.z_far_m) * i / (self.layer_count - 1)

    def layer_index(self, depth_bytes) -> np.ndarray:
        return (np.asarray(depth_bytes, dtype=np.int64) * self.layer_count) // 256

    def layer_spacing(self) -> float:
        return (self.z_far_m - self.z_near_m) / (self.layer_count - 1)

    def distance_for_byte(self, depth_byte) -> float:
        return float(self.layer_distances()[self.layer_index(depth_byte)])


@dataclass
class ComplexField:
    values: np.ndarray
    wavelength_m: float
    pitch_m: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 2:
            raise DataValidationError(f"field must be 2-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise NumericError("complex field contains NaN or Inf")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


# -- propagation -----------------------------------------------------------

@functools.lru_cache(maxsize=32)
def _axial_frequency(shape: tuple[int, int], wavelength: float, pitch: float):
    ny, nx = shape
    fx = sfft.fftfreq(nx, d=pitch)
    fy = sfft.fftfreq(ny, d=pitch)
    arg = 1.0 / wavelength**2 - fx[None, :] ** 2 - fy[:, None] ** 2
    propagating = arg > 0
    kz = np.sqrt(np.where(propagating, arg, 0.0))
    kz.flags.writeable = False
    propagating.flags.writeable = False
    return fx, fy, kz, propagating


def transfer_function(shape, wavelength_m: float, pitch_m: float, distance_m: float) -> np.ndarray:
    """Band-limited angular-spectrum transfer function in FFT order.

    exp(i 2 pi z sqrt(1/lambda^2 - fx^2 - fy^2)) on propagating frequencies,
    zero on evanescent ones, and zero beyond the aliasing-free band limit
    1 / (lambda sqrt((z / (N pitch))^2 + 1)) along each axis.
    """
    ny, nx = shape
    fx, fy, kz, propagating = _axial_frequency((ny, nx), float(wavelength_m), float(pitch_m))
    h = np.exp(1j * (2 * np.pi * distance_m) * kz)
    keep = propagating
    if distance_m != 0:
        z = abs(distance_m)
        fx_lim = 1.0 / (wavelength_m * np.sqrt((z / (nx * pitch_m)) ** 2 + 1.0))
        fy_lim = 1.0 / (wavelength_m * np.sqrt((z / (ny * pitch_m)) ** 2 + 1.0))
        keep = keep & (np.abs(fx)[None, :] <= fx_lim) & (np.abs(fy)[:, None] <= fy_lim)
    return np.where(keep, h, 0.0)


def propagate(fld: ComplexField, distance_m: float) -> ComplexField:
    """Propagate a field by a signed distance (negative = back-propagation)."""
    spectrum = sfft.fft2(fld.values)
    spectrum *= transfer_function(fld.values.shape, fld.wavelength_m, fld.pitch_m, distance_m)
    return ComplexField(sfft.ifft2(spectrum), fld.wavelength_m, fld.pitch_m)


def propagate_layers(sources, distances, wavelength_m: float, pitch_m: float) -> np.ndarray:
    """Sum of each source propagated by its own distance, with one inverse FFT."""
    acc = None
    for src, z in zip(sources, distances):
        spec = sfft.fft2(src)
        spec *= transfer_function(src.shape, wavelength_m, pitch_m, z)
        acc = spec if acc is None else acc + spec
    if acc is None:
        raise DataValidationError("no layers to propagate")
    return sfft.ifft2(acc)


# -- synthesis -------------------------------------------------------------

def initial_phase(shape, optics: OpticsConfig) -> np.ndarray:
    """Unit phasor per pixel: all ones in ``zero`` mode, seeded uniform [0, 2 pi) otherwise."""
    if optics.phase_mode == "zero":
        return np.ones(shape, dtype=np.complex128)
    rng = np.random.default_rng(optics.seed)
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=shape))


def synthesize(frame: Frame, optics: OpticsConfig = OpticsConfig()) -> tuple[ComplexField, ...]:
    """Complex hologram per colour channel (R, G, B) from an RGB + depth frame."""
    rgb, depth = frame.rgb, frame.depth
    if rgb.shape[:2] != depth.shape:
        raise DataValidationError(f"rgb {rgb.shape[:2]} and depth {depth.shape} differ in size")
    layers = optics.layer_index(depth)
    distances = optics.layer_distances()
    phasor = initial_phase(depth.shape, optics)
    amplitude = rgb.astype(np.float64) / 255.0
    lit = amplitude.max(axis=2) > 0
    used = np.unique(layers[lit])
    out = []
    for c in range(3):
        wl = optics.wavelengths_m[c]
        src = amplitude[..., c] * phasor
        if not used.size:
            out.append(ComplexField(np.zeros(depth.shape, np.complex128), wl, optics.pixel_pitch_m))
            continue
        sources = (np.where(layers == k, src, 0.0) for k in used)
        values = propagate_layers(sources, distances[used], wl, optics.pixel_pitch_m)
        out.append(ComplexField(values, wl, optics.pixel_pitch_m))
    return tuple(out)


def upscale_nearest(frame: Frame, resolution=FOURK_RESOLUTION) -> Frame:
    """Nearest-neighbour resize of both RGB and depth to ``resolution`` (W, H)."""
    width, height = resolution
    h0, w0 = frame.depth.shape
    rows = (np.arange(height) * h0) // height
    cols = (np.arange(width) * w0) // width
    return Frame(rgb=frame.rgb[rows][:, cols], depth=frame.depth[rows][:, cols], pose=frame.pose)


# -- Lee encoding ----------------------------------------------------------

@dataclass
class LeePlanes:
    """Four non-negative planes L1..L4 (stacked on axis 0) for one channel."""

    planes: np.ndarray
    wavelength_m: float
    pitch_m: float

    def __post_init__(self):
        self.planes = np.asarray(self.planes, dtype=np.float64)
        if self.planes.ndim != 3 or self.planes.shape[0] != 4:
            raise DataValidationError(f"Lee planes must have shape (4, H, W), got {self.planes.shape}")


@dataclass
class LeeHologram:
    channels: list[LeePlanes]
    optics: OpticsConfig = field(default_factory=OpticsConfig)

    def brightness(self) -> np.ndarray:
        """All planes of all channels stacked, shape (3, 4, H, W)."""
        return np.stack([ch.planes for ch in self.channels])


def lee_encode(fld: ComplexField) -> LeePlanes:
    """Canonical split of H = a + ib into (max(a,0), max(b,0), max(-a,0), max(-b,0))."""
    a, b = fld.values.real, fld.values.imag
    planes = np.stack([np.maximum(a, 0.0), np.maximum(b, 0.0), np.maximum(-a, 0.0), np.maximum(-b, 0.0)])
    return LeePlanes(planes + 0.0, fld.wavelength_m, fld.pitch_m)  # + 0.0 folds -0.0 into 0.0


def lee_decode(planes: LeePlanes) -> ComplexField:
    """H = L1 + i L2 - L3 - i L4."""
    p = planes.planes
    if np.any(p < 0):
        raise DataValidationError("Lee planes must be non-negative")
    return ComplexField((p[0] - p[2]) + 1j * (p[1] - p[3]), planes.wavelength_m, planes.pitch_m)


def encode_hologram(fields, optics: OpticsConfig) -> LeeHologram:
    return LeeHologram([lee_encode(f) for f in fields], optics)


def quantize_planes(planes: LeePlanes) -> tuple[np.ndarray, float]:
    """8-bit planes plus the scale that maps byte 255 back to the channel maximum."""
    scale = float(planes.planes.max())
    if scale == 0:
        return np.zeros(planes.planes.shape, np.uint8), 0.0
    q = np.floor(planes.planes / scale * 255.0 + 0.5)
    return q.astype(np.uint8), scale


def dequantize_planes(q: np.ndarray, scale: float, wavelength_m: float, pitch_m: float) -> LeePlanes:
    return LeePlanes(q.astype(np.float64) * (scale / 255.0), wavelength_m, pitch_m)


# -- file formats ----------------------------------------------------------

_HSWF_MAGIC = b"HSWF"
_HSWF_HEADER = struct.Struct("<4sii dd")


def write_field(path, fld: ComplexField) -> None:
    """Binary field file: magic, width, height (int32), wavelength, pitch (float64),
    then row-major interleaved (re, im) float32, all little-endian."""
    header = _HSWF_HEADER.pack(_HSWF_MAGIC, fld.width, fld.height, fld.wavelength_m, fld.pitch_m)
    body = np.empty((fld.height, fld.width, 2), dtype="<f4")
    body[..., 0] = fld.values.real
    body[..., 1] = fld.values.imag
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(body.tobytes())
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc


def read_field(path) -> ComplexField:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc
    if len(raw) < _HSWF_HEADER.size:
        raise DataValidationError(f"{path}: truncated field header")
    magic, width, height, wavelength, pitch = _HSWF_HEADER.unpack_from(raw)
    if magic != _HSWF_MAGIC:
        raise DataValidationError(f"{path}: bad magic {magic!r}")
    expected = _HSWF_HEADER.size + width * height * 8
    if len(raw) != expected:
        raise DataValidationError(f"{path}: expected {expected} bytes, found {len(raw)}")
    body = np.frombuffer(raw, dtype="<f4", offset=_HSWF_HEADER.size).reshape(height, width, 2)
    return ComplexField(body[..., 0].astype(np.float64) + 1j * body[..., 1].astype(np.float64),
                        wavelength, pitch)


def write_lee(out_dir, holo: LeeHologram) -> dict:
    """Write ``lee_<c>_L<m>.pgm`` planes and ``lee_meta.json``; returns the metadata."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetIOError(f"cannot create {out_dir}: {exc}") from exc
    scales = {}
    for name, ch in zip(CHANNELS, holo.channels):
        q, scale = quantize_planes(ch)
        scales[name] = scale
        for m in range(4):
            fileio.write_pgm(out_dir / f"lee_{name}_L{m + 1}.pgm", q[m])
    meta = {"scales": scales, "optics": holo.optics.to_json(),
            "shape": list(holo.channels[0].planes.shape[1:])}
    fileio.write_json(out_dir / "lee_meta.json", meta)
    return meta


def read_lee(in_dir) -> LeeHologram:
    in_dir = Path(in_dir)
    meta = fileio.read_json(in_dir / "lee_meta.json")
    optics = OpticsConfig.from_json(meta["optics"])
    channels = []
    for name, wl in zip(CHANNELS, optics.wavelengths_m):
        q = np.stack([fileio.read_pgm(in_dir / f"lee_{name}_L{m + 1}.pgm") for m in range(4)])
        channels.append(dequantize_planes(q, meta["scales"][name], wl, optics.pixel_pitch_m))
    return LeeHologram(channels, optics)
