"""Camera-image ingestion and 2D nonlinear least-squares profile fits.

Images are fit against the axisymmetric Gaussian or first-order ring model
with a damped Gauss-Newton (Levenberg-Marquardt) loop using analytic
Jacobians over the four parameters (I0, w, x0, y0).
"""

from __future__ import annotations

import csv as csv_mod
import io
from dataclasses import dataclass

import numpy as np

from .errors import (
    CorruptFile,
    DegenerateImage,
    ModelMismatch,
    NotConverged,
    UnsupportedFormat,
)
from .fields import ComplexField2D, write_pgm

MAX_ITERATIONS = 200
STEP_TOLERANCE = 1e-6
MIN_SIGNAL_PIXELS = 100


@dataclass(frozen=True)
class IntensityImage:
    """Background-subtracted intensity raster (arbitrary linear units)."""

    values: np.ndarray
    pitch: float  # meters per pixel
    background: float = 0.0

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("image values must be 2D")
        if self.pitch <= 0:
            raise ValueError("pitch must be positive")
        if np.any(vals < 0):
            raise ValueError("image values must be non-negative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def ny(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FitResult:
    model: str
    w: float
    i0: float
    x0: float
    y0: float
    residual: float
    converged: bool


def image_from_field(f: ComplexField2D) -> IntensityImage:
    """Render a field's intensity as an image; requires square pixels."""
    if f.dx != f.dy:
        raise ValueError("image export requires dx == dy")
    return IntensityImage(f.intensity(), f.dx)


def _pixel_axes(image: IntensityImage):
    x = (np.arange(image.nx) - image.nx // 2) * image.pitch
    y = (np.arange(image.ny) - image.ny // 2) * image.pitch
    return np.meshgrid(x, y)


def model_and_jacobian(params, model: str, xx: np.ndarray, yy: np.ndarray):
    """Model intensity and its Jacobian w.r.t. (I0, w, x0, y0)."""
    i0, w, x0, y0 = params
    ux = xx - x0
    uy = yy - y0
    r_sq = ux * ux + uy * uy
    e = np.exp(-2.0 * r_sq / w**2)
    if model == "gaussian":
        f = i0 * e
        d_i0 = e
        d_w = f * 4.0 * r_sq / w**3
        d_x0 = f * 4.0 * ux / w**2
        d_y0 = f * 4.0 * uy / w**2
    elif model == "lg1":
        u = 2.0 * r_sq / w**2
        f = i0 * u * e
        d_i0 = u * e
        # df/du = I0 e^{-u} (1 - u); chain through u(w, x0, y0)
        dfdu = i0 * e * (1.0 - u)
        d_w = dfdu * (-2.0 * u / w)
        d_x0 = dfdu * (-4.0 * ux / w**2)
        d_y0 = dfdu * (-4.0 * uy / w**2)
    else:
        raise ValueError(f"unknown fit model {model!r}")
    return f, np.stack([d_i0, d_w, d_x0, d_y0], axis=-1)


def _initial_guess(image: IntensityImage, model: str):
    vals = image.values
    xx, yy = _pixel_axes(image)
    tot = vals.sum()
    x0 = float((vals * xx).sum() / tot)
    y0 = float((vals * yy).sum() / tot)
    r_sq = (xx - x0) ** 2 + (yy - y0) ** 2
    peak = float(vals.max())
    if model == "gaussian":
        # <r^2> = w^2/2 for the Gaussian profile
        w = float(np.sqrt(2.0 * (vals * r_sq).sum() / tot))
        i0 = peak
    else:
        # ring radius (arg-max of the azimuthal average) sits at w/sqrt(2)
        r = np.sqrt(r_sq)
        dr = image.pitch
        nbins = int(r.max() / dr) + 1
        idx = np.minimum((r / dr).astype(int), nbins - 1)
        sums = np.bincount(idx.ravel(), weights=vals.ravel(), minlength=nbins)
        counts = np.bincount(idx.ravel(), minlength=nbins)
        profile = sums / np.maximum(counts, 1)
        r_peak = (np.argmax(profile) + 0.5) * dr
        w = float(r_peak * np.sqrt(2.0))
        i0 = peak * np.e
    return np.array([i0, w, x0, y0])


def fit_profile(image: IntensityImage, model: str) -> FitResult:
    """Fit the image to the chosen profile model.

    Returns best-effort parameters with ``converged=False`` when the step
    criterion is not met within the iteration budget; raises
    :class:`DegenerateImage` when there is too little signal to start.
    """
    vals = image.values
    peak = float(vals.max())
    if peak <= 0 or int(np.count_nonzero(vals > 0.05 * peak)) < MIN_SIGNAL_PIXELS:
        raise DegenerateImage("fewer than 100 pixels above 5% of peak")

    xx, yy = _pixel_axes(image)
    params = _initial_guess(image, model)
    scale = np.abs(params) + np.array([peak, image.pitch, image.pitch, image.pitch])
    lam = 1e-3
    converged = False
    f, jac = model_and_jacobian(params, model, xx, yy)
    resid = f - vals
    cost = float(np.sum(resid**2))
    for _ in range(MAX_ITERATIONS):
        j = jac.reshape(-1, 4)
        g = j.T @ resid.ravel()
        h = j.T @ j
        step = None
        for _attempt in range(25):
            damped = h + lam * np.diag(np.diag(h))
            try:
                delta = np.linalg.solve(damped, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            if float(np.max(np.abs(delta) / scale)) < STEP_TOLERANCE:
                # the proposed step is already negligible (e.g. an exact
                # model image): nothing left to improve
                converged = True
                break
            trial = params + delta
            if trial[0] <= 0 or trial[1] <= 0:
                lam *= 10.0
                continue
            f_t, jac_t = model_and_jacobian(trial, model, xx, yy)
            resid_t = f_t - vals
            cost_t = float(np.sum(resid_t**2))
            if cost_t < cost:
                step = delta
                params, f, jac, resid, cost = trial, f_t, jac_t, resid_t, cost_t
                lam = max(lam / 10.0, 1e-12)
                break
            lam *= 10.0
        if step is None:
            break
        if float(np.max(np.abs(step) / scale)) < STEP_TOLERANCE:
            converged = True
            break
    residual = float(np.sqrt(cost / vals.size) / peak)
    i0, w, x0, y0 = params
    return FitResult(model, float(w), float(i0), float(x0), float(y0), residual, converged)


def waist_ratio(fit: FitResult, reference: FitResult) -> float:
    """Expansion ratio w / w0 between a fit and its low-density reference."""
    if fit.model != reference.model:
        raise ModelMismatch(f"{fit.model} vs {reference.model}")
    if not (fit.converged and reference.converged):
        raise NotConverged("both fits must be converged")
    return fit.w / reference.w


# ---------------------------------------------------------------------------
# image I/O


def _read_pgm(data: bytes, pitch: float) -> IntensityImage:
    # header tokens: P5 nx ny maxval, '#' comments allowed
    tokens = []
    pos = 2  # past "P5"
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CorruptFile("truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        nx, ny, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise CorruptFile(f"bad PGM header: {exc}") from exc
    if maxval <= 0 or maxval > 65535:
        raise UnsupportedFormat(f"unsupported PGM maxval {maxval}")
    dtype = ">u2" if maxval > 255 else "u1"
    count = nx * ny
    payload = data[pos:]
    expected = count * (2 if maxval > 255 else 1)
    if len(payload) < expected:
        raise CorruptFile("truncated PGM payload")
    raw = np.frombuffer(payload[:expected], dtype=dtype).astype(float).reshape(ny, nx)
    return _subtract_background(raw, pitch)


def _subtract_background(raw: np.ndarray, pitch: float) -> IntensityImage:
    background = float(np.percentile(raw, 5.0))
    vals = np.clip(raw - background, 0.0, None)
    return IntensityImage(vals, pitch, background)


def ingest_image(path, pitch: float) -> IntensityImage:
    """Load a P5 PGM (8/16-bit) or a CSV matrix as an intensity image.

    The background is estimated as the 5th-percentile pixel value and
    subtracted with clamping at zero.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"P5":
        return _read_pgm(data, pitch)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnsupportedFormat(f"{path}: neither P5 PGM nor CSV") from exc
    rows = []
    for record in csv_mod.reader(io.StringIO(text)):
        if not record:
            continue
        try:
            rows.append([float(v) for v in record])
        except ValueError:
            if rows:
                raise CorruptFile(f"{path}: non-numeric row inside CSV matrix")
            continue  # header row
    if not rows:
        raise CorruptFile(f"{path}: no numeric rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise CorruptFile(f"{path}: ragged CSV matrix")
    return _subtract_background(np.array(rows, dtype=float), pitch)


def render_image(source, path) -> None:
    """Write a field or image as a 16-bit P5 PGM scaled to its peak."""
    if isinstance(source, ComplexField2D):
        values = source.intensity()
    elif isinstance(source, IntensityImage):
        values = source.values
    else:
        raise TypeError("render_image expects a ComplexField2D or IntensityImage")
    write_pgm(values, path)
