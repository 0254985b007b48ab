"""Channel matrix file format, bundled demo channels and random generators.

File format (JSON): {"n_r": int, "n_t": int, "re": [[...]], "im": [[...]]}
with "im" optional (defaults to all zeros).  Row-major, n_r rows of n_t
reals each.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .core import ChannelMatrix
from .errors import InputError


def channel_from_dict(payload: dict) -> ChannelMatrix:
    try:
        n_r = int(payload["n_r"])
        n_t = int(payload["n_t"])
        re = np.asarray(payload["re"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad channel payload: {exc}") from exc
    if re.shape != (n_r, n_t):
        raise InputError(
            f"'re' must be {n_r}x{n_t}, got {re.shape}"
        )
    im_raw = payload.get("im")
    if im_raw is None:
        im = np.zeros((n_r, n_t))
    else:
        im = np.asarray(im_raw, dtype=float)
        if im.shape != (n_r, n_t):
            raise InputError(
                f"'im' must be {n_r}x{n_t}, got {im.shape}"
            )
    return ChannelMatrix(re + 1j * im)


def channel_to_dict(h: ChannelMatrix) -> dict:
    return {
        "n_r": h.n_r,
        "n_t": h.n_t,
        "re": h.entries.real.tolist(),
        "im": h.entries.imag.tolist(),
    }


def load_channel(path) -> ChannelMatrix:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read channel file {path}: {exc}") from exc
    return channel_from_dict(payload)


def save_channel(h: ChannelMatrix, path) -> None:
    with open(path, "w") as fh:
        json.dump(channel_to_dict(h), fh, indent=1)


def bundled_channel(name: str) -> ChannelMatrix:
    """Load one of the demo channels shipped with the package
    (mimo_4x3, mimo_2x3, mimo_3x3, mimo_4x4)."""
    fname = f"{name}.json"
    try:
        text = resources.files("mimocap.data").joinpath(fname).read_text()
    except FileNotFoundError as exc:
        raise InputError(f"no bundled channel named {name!r}") from exc
    return channel_from_dict(json.loads(text))


def random_channel(n_r: int, n_t: int, rng: np.random.Generator) -> ChannelMatrix:
    """IID circular complex Gaussian entries with unit variance
    (real/imag parts N(0, 1/2) each); PCG64 generator for reproducibility."""
    scale = np.sqrt(0.5)
    re = rng.normal(0.0, scale, size=(n_r, n_t))
    im = rng.normal(0.0, scale, size=(n_r, n_t))
    return ChannelMatrix(re + 1j * im)


def random_unit_rank_channel(n_r: int, n_t: int,
                             rng: np.random.Generator) -> ChannelMatrix:
    """Rank-one channel g * u v^H with unit-norm random directions."""
    u = rng.normal(size=n_r) + 1j * rng.normal(size=n_r)
    v = rng.normal(size=n_t) + 1j * rng.normal(size=n_t)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    g = float(rng.uniform(0.5, 3.0))
    return ChannelMatrix(g * np.outer(u, v.conj()))
