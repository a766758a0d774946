"""External formats: .cube documents, the versioned model file, P6/PNG images.

The cube writer quantizes to 6 fractional digits, so one write-read cycle is
a fixed point.  The model file stores every numeric as a hexadecimal float
and round-trips bit-exactly.  Images are 8-bit RGB; samples map to [0, 1] by
division by 255 and back by round(v * 255) after clamping.
"""

from __future__ import annotations

import io
import json
import os
import re

import numpy as np
from PIL import Image

from .lowrank import CpFactors, LorLutModel
from .luts import flatten_entries, lut_grid_size, unflatten_entries, validate_lut

MODEL_FORMAT_LINE = "lorlut-model v1"

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


# -- cube documents ----------------------------------------------------------


def write_cube(lut: np.ndarray, title: str = "lorlut") -> str:
    """Serialize a LUT as a .cube document, red index fastest, 6 decimals."""
    lut = validate_lut(lut)
    g = lut_grid_size(lut)
    entries = np.clip(flatten_entries(lut), 0.0, 1.0)
    lines = [
        f'TITLE "{title}"',
        f"LUT_3D_SIZE {g}",
        "DOMAIN_MIN 0 0 0",
        "DOMAIN_MAX 1 1 1",
    ]
    lines.extend(f"{r:.6f} {g_:.6f} {b:.6f}" for r, g_, b in entries)
    return "\n".join(lines) + "\n"


def read_cube(text: str) -> np.ndarray:
    """Parse a .cube document into a LUT, rescaling a non-default domain."""
    size: int | None = None
    dom_min = np.zeros(3)
    dom_max = np.ones(3)
    rows: list[list[float]] = []

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        upper = line.upper()
        if upper.startswith("TITLE"):
            continue
        if upper.startswith("LUT_1D_SIZE"):
            raise ValueError("1D LUTs are not supported")
        if upper.startswith("LUT_3D_SIZE"):
            size = _parse_int(line.split(maxsplit=1)[1], "LUT_3D_SIZE")
            continue
        if upper.startswith("DOMAIN_MIN"):
            dom_min = _parse_triple(line.split(maxsplit=1)[1], "DOMAIN_MIN")
            continue
        if upper.startswith("DOMAIN_MAX"):
            dom_max = _parse_triple(line.split(maxsplit=1)[1], "DOMAIN_MAX")
            continue
        if re.match(r"^[A-Za-z_]", line):
            # Unknown keyword lines are tolerated, data lines start numeric.
            continue
        rows.append(list(_parse_triple(line, "data line")))

    if size is None:
        raise ValueError("missing LUT_3D_SIZE header")
    if size < 2:
        raise ValueError(f"LUT_3D_SIZE must be >= 2, got {size}")
    if len(rows) != size**3:
        raise ValueError(f"wrong line count: expected {size**3} data lines, got {len(rows)}")

    entries = np.asarray(rows, dtype=np.float64)
    span = dom_max - dom_min
    if np.any(span <= 0.0):
        raise ValueError("degenerate domain")
    if np.any(dom_min != 0.0) or np.any(dom_max != 1.0):
        entries = (entries - dom_min) / span
    return unflatten_entries(entries, size)


def _parse_int(token: str, what: str) -> int:
    try:
        return int(token.strip())
    except ValueError as exc:
        raise ValueError(f"non-numeric {what}: {token!r}") from exc


def _parse_triple(text: str, what: str) -> np.ndarray:
    parts = text.split()
    if len(parts) != 3:
        raise ValueError(f"expected 3 values in {what}, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ValueError(f"non-numeric {what}: {text!r}") from exc


# -- model files -------------------------------------------------------------


def _hex_row(values: np.ndarray) -> str:
    return " ".join(float(v).hex() for v in values)


def _parse_hex_row(text: str, count: int, what: str) -> np.ndarray:
    parts = text.split()
    if len(parts) != count:
        raise ValueError(f"inconsistent shapes: expected {count} values in {what}")
    try:
        return np.array([float.fromhex(p) for p in parts])
    except ValueError as exc:
        raise ValueError(f"bad numeric in {what}: {text!r}") from exc


def write_model(model: LorLutModel, meta: dict | None = None) -> str:
    """Serialize a model losslessly; K=0 stores the base as a marker only."""
    lines = [
        MODEL_FORMAT_LINE,
        f"grid {model.grid_size}",
        f"bases {model.num_bases}",
        f"rank {model.rank}",
    ]
    if model.num_bases == 0:
        lines.append("base identity")
    else:
        lines.append("alphas " + _hex_row(model.alphas))
        for k, basis in enumerate(model.bases):
            lines.append(f"base {k}")
            lines.extend(_hex_row(row) for row in flatten_entries(basis))
    f = model.factors
    for r in range(model.rank):
        lines.append(f"component {r}")
        lines.append("u " + _hex_row(f.us[r]))
        lines.append("v " + _hex_row(f.vs[r]))
        lines.append("w " + _hex_row(f.ws[r]))
        lines.append("c " + _hex_row(f.cs[r]))
    if meta is not None:
        lines.append("meta " + json.dumps(meta, sort_keys=True))
    return "\n".join(lines) + "\n"


def read_model(text: str) -> tuple[LorLutModel, dict | None]:
    """Parse a model file; returns the model and any metadata block."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != MODEL_FORMAT_LINE:
        raise ValueError(f"version mismatch: expected leading {MODEL_FORMAT_LINE!r} line")
    pos = 1

    def expect_scalar(keyword: str) -> int:
        nonlocal pos
        if pos >= len(lines):
            raise ValueError(f"missing {keyword} line")
        parts = lines[pos].split()
        if len(parts) != 2 or parts[0] != keyword:
            raise ValueError(f"expected {keyword} line, got {lines[pos]!r}")
        pos += 1
        return _parse_int(parts[1], keyword)

    grid = expect_scalar("grid")
    num_bases = expect_scalar("bases")
    rank = expect_scalar("rank")
    if grid < 2 or num_bases < 0 or rank < 0:
        raise ValueError("inconsistent shapes: bad grid/bases/rank")

    alphas = np.zeros(0)
    bases: list[np.ndarray] = []
    if num_bases == 0:
        if pos >= len(lines) or lines[pos].strip() != "base identity":
            raise ValueError("expected 'base identity' marker for a K=0 model")
        pos += 1
    else:
        if pos >= len(lines) or not lines[pos].startswith("alphas "):
            raise ValueError("missing alphas line")
        alphas = _parse_hex_row(lines[pos][len("alphas ") :], num_bases, "alphas")
        pos += 1
        for k in range(num_bases):
            if pos >= len(lines) or lines[pos].strip() != f"base {k}":
                raise ValueError(f"inconsistent shapes: missing base {k}")
            pos += 1
            count = grid**3
            if pos + count > len(lines):
                raise ValueError(f"inconsistent shapes: base {k} truncated")
            entries = np.array(
                [
                    list(_parse_hex_row(lines[pos + n], 3, f"base {k} entry"))
                    for n in range(count)
                ]
            )
            pos += count
            bases.append(unflatten_entries(entries, grid))

    factors = CpFactors.zeros(rank, grid)
    for r in range(rank):
        if pos >= len(lines) or lines[pos].strip() != f"component {r}":
            raise ValueError(f"inconsistent shapes: expected component {r}")
        pos += 1
        rows = {}
        for key, count in (("u", grid), ("v", grid), ("w", grid), ("c", 3)):
            if pos >= len(lines) or not lines[pos].startswith(key + " "):
                raise ValueError(f"inconsistent shapes: component {r} missing {key}")
            rows[key] = _parse_hex_row(lines[pos][2:], count, f"component {r} {key}")
            pos += 1
        factors.us[r] = rows["u"]
        factors.vs[r] = rows["v"]
        factors.ws[r] = rows["w"]
        factors.cs[r] = rows["c"]

    meta = None
    if pos < len(lines) and lines[pos].startswith("meta "):
        meta = json.loads(lines[pos][len("meta ") :])
        pos += 1
    if pos != len(lines):
        raise ValueError(f"unexpected trailing content: {lines[pos]!r}")

    model = LorLutModel(grid_size=grid, factors=factors, bases=bases, alphas=alphas)
    return model, meta


# -- images ------------------------------------------------------------------


def quantize_u8(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and round to 8-bit samples."""
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def read_image(data: bytes) -> np.ndarray:
    """Decode P6 or PNG bytes into an (H, W, 3) float array in [0, 1]."""
    if data[:2] == b"P6":
        return _read_ppm(data)
    if data[: len(_PNG_MAGIC)] == _PNG_MAGIC:
        try:
            with Image.open(io.BytesIO(data)) as im:
                arr = np.asarray(im.convert("RGB"), dtype=np.float64)
        except Exception as exc:
            raise ValueError(f"undecodable PNG payload: {exc}") from exc
        return arr / 255.0
    raise ValueError("unsupported image format (want P6 or PNG)")


def write_image(img: np.ndarray, format: str = "png") -> bytes:
    """Encode an (H, W, 3) float image as 8-bit PNG or P6 bytes."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {img.shape}")
    samples = quantize_u8(img)
    fmt = format.lower()
    if fmt in ("ppm", "p6"):
        h, w = samples.shape[:2]
        return b"P6\n%d %d\n255\n" % (w, h) + samples.tobytes()
    if fmt == "png":
        buf = io.BytesIO()
        Image.fromarray(samples, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()
    raise ValueError(f"unsupported image format: {format!r}")


def _read_ppm(data: bytes) -> np.ndarray:
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated data: missing header token")
        return data[start:pos]

    if next_token() != b"P6":
        raise ValueError("unsupported image format (want P6 or PNG)")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise ValueError(f"bad P6 header: {exc}") from exc
    if width < 1 or height < 1:
        raise ValueError(f"bad P6 dimensions {width}x{height}")
    if maxval != 255:
        raise ValueError(f"unsupported P6 maxval {maxval} (want 255)")
    pos += 1
    payload = data[pos : pos + width * height * 3]
    if len(payload) < width * height * 3:
        raise ValueError("truncated data: short P6 payload")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return arr.astype(np.float64) / 255.0


def load_image(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_image(fh.read())


def save_image(path: str | os.PathLike, img: np.ndarray) -> None:
    fmt = "ppm" if os.fspath(path).lower().endswith((".ppm", ".pnm")) else "png"
    with open(path, "wb") as fh:
        fh.write(write_image(img, format=fmt))
