"""Scenario geometry, path-loss/Rayleigh channel generation and composition.

The network sits in a 2-D plane: primary user, cognitive base station and
secondary user on the x-axis, the reflecting surface elevated at height 10 m,
eavesdroppers spread along a segment between transmitter and receiver.  Each
link draws i.i.d. circularly-symmetric complex Gaussian fading scaled by
``sqrt(G0 * d^-c)``.

The composite channel of receiver ``v`` stacks the cascaded surface paths on
top of the direct path::

    H_v = [ diag(h_Iv^H) @ H_CI ]      ((L+1) x N)
          [       h_Cv^H        ]

so the receive amplitude is ``q^H H_v w`` for a unit-modulus reflect vector
``q`` whose last entry is 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ScenarioGeometry",
    "ChannelParams",
    "RawChannels",
    "CompositeChannels",
    "pathloss_gain",
    "draw_rayleigh",
    "generate_raw_channels",
    "assemble_composite",
    "generate_channels",
    "dump_channels",
    "load_channels",
]


@dataclass(frozen=True)
class ScenarioGeometry:
    """Node positions in meters and array sizes."""

    N: int = 4
    L: int = 16
    K: int = 2
    pu_pos: tuple = (0.0, 0.0)
    cbs_pos: tuple = (50.0, 0.0)
    su_pos: tuple = (100.0, 0.0)
    irs_x: float = 100.0
    irs_height: float = 10.0
    eve_segment: tuple = ((80.0, 0.0), (90.0, 0.0))

    def __post_init__(self):
        if min(self.N, self.L, self.K) < 1:
            raise ValueError("N, L and K must all be at least 1")

    @property
    def irs_pos(self) -> tuple:
        return (self.irs_x, self.irs_height)

    def eve_positions(self) -> np.ndarray:
        """Eavesdropper positions, evenly spaced; a single Eve sits at the midpoint."""
        a = np.asarray(self.eve_segment[0], dtype=float)
        b = np.asarray(self.eve_segment[1], dtype=float)
        if self.K == 1:
            return (0.5 * (a + b))[None, :]
        frac = np.linspace(0.0, 1.0, self.K)
        return a[None, :] + frac[:, None] * (b - a)[None, :]


# Link classes for path-loss exponents: first letter transmitter (C = base
# station, I = surface), second the receiver.
_DEFAULT_EXPONENTS = {
    "CI": 2.2, "IS": 2.2, "IP": 2.2, "IE": 2.2,
    "CS": 3.75, "CP": 3.75, "CE": 3.75,
}


@dataclass(frozen=True)
class ChannelParams:
    """Reference gain, per-link path-loss exponents and noise powers."""

    g0: float = 1e-3
    exponents: dict = field(default_factory=lambda: dict(_DEFAULT_EXPONENTS))
    sigma2_su: float = 1e-13
    sigma2_eve: float = 1e-13

    def __post_init__(self):
        if self.g0 <= 0 or self.sigma2_su <= 0 or self.sigma2_eve <= 0:
            raise ValueError("g0 and noise powers must be positive")
        if any(c <= 0 for c in self.exponents.values()):
            raise ValueError("path-loss exponents must be positive")


@dataclass(frozen=True)
class RawChannels:
    """Per-link fading realisations for one network draw."""

    H_CI: np.ndarray          # surface <- base station, L x N
    h_CS: np.ndarray          # secondary user <- base station, N
    h_CP: np.ndarray          # primary user <- base station, N
    h_CE: tuple               # K vectors of length N
    h_IS: np.ndarray          # secondary user <- surface, L
    h_IP: np.ndarray          # primary user <- surface, L
    h_IE: tuple               # K vectors of length L


@dataclass(frozen=True)
class CompositeChannels:
    """Stacked effective channels, one (L+1) x N matrix per receiver."""

    H_S: np.ndarray
    H_P: np.ndarray
    H_E: tuple

    @property
    def L(self) -> int:
        return self.H_S.shape[0] - 1

    @property
    def N(self) -> int:
        return self.H_S.shape[1]

    @property
    def K(self) -> int:
        return len(self.H_E)


def pathloss_gain(d: float, c: float, g0: float) -> float:
    """Distance-based power gain ``g0 * d^-c`` (amplitudes scale by its root)."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return g0 * d ** (-c)


def draw_rayleigh(rng: np.random.Generator, rows: int, cols: int = 1) -> np.ndarray:
    """I.i.d. CN(0, 1) fading matrix (real/imag parts each with variance 1/2).

    Real and imaginary parts are drawn interleaved per entry, so a longer
    matrix from a fresh generator extends a shorter one row by row.
    """
    block = rng.standard_normal((rows, cols, 2))
    return (block[..., 0] + 1j * block[..., 1]) / np.sqrt(2.0)


def _faded_link(rng, pos_a, pos_b, exponent, g0, rows, cols):
    d = float(np.linalg.norm(np.asarray(pos_a, dtype=float) - np.asarray(pos_b, dtype=float)))
    amp = np.sqrt(pathloss_gain(d, exponent, g0))
    return amp * draw_rayleigh(rng, rows, cols)


def _link_streams(rng: np.random.Generator, n_eves: int):
    """Independent per-link generators spawned from one root.

    Each link class draws from its own stream, so realisations are nested
    across array sizes: growing L extends the surface links without changing
    the rows already drawn, and adding an eavesdropper keeps the existing
    ones.  Parameter sweeps over L or K therefore see paired channels.
    """
    children = rng.spawn(7)
    names = ("CI", "CS", "CP", "CE", "IS", "IP", "IE")
    streams = dict(zip(names, children))
    streams["CE"] = streams["CE"].spawn(n_eves)
    streams["IE"] = streams["IE"].spawn(n_eves)
    return streams


def generate_raw_channels(geometry: ScenarioGeometry, params: ChannelParams,
                          rng: np.random.Generator) -> RawChannels:
    """Draw all link realisations for one scenario.

    Every link class uses a dedicated substream of ``rng`` (fixed order), so
    a seeded generator reproduces the same network and sweeps over L or K
    stay paired.
    """
    ex = params.exponents
    g0 = params.g0
    eves = geometry.eve_positions()
    st = _link_streams(rng, geometry.K)
    H_CI = _faded_link(st["CI"], geometry.irs_pos, geometry.cbs_pos, ex["CI"], g0,
                       geometry.L, geometry.N)
    h_CS = _faded_link(st["CS"], geometry.su_pos, geometry.cbs_pos, ex["CS"], g0,
                       geometry.N, 1)[:, 0]
    h_CP = _faded_link(st["CP"], geometry.pu_pos, geometry.cbs_pos, ex["CP"], g0,
                       geometry.N, 1)[:, 0]
    h_CE = tuple(_faded_link(st["CE"][k], p, geometry.cbs_pos, ex["CE"], g0,
                             geometry.N, 1)[:, 0] for k, p in enumerate(eves))
    h_IS = _faded_link(st["IS"], geometry.su_pos, geometry.irs_pos, ex["IS"], g0,
                       geometry.L, 1)[:, 0]
    h_IP = _faded_link(st["IP"], geometry.pu_pos, geometry.irs_pos, ex["IP"], g0,
                       geometry.L, 1)[:, 0]
    h_IE = tuple(_faded_link(st["IE"][k], p, geometry.irs_pos, ex["IE"], g0,
                             geometry.L, 1)[:, 0] for k, p in enumerate(eves))
    return RawChannels(H_CI=H_CI, h_CS=h_CS, h_CP=h_CP, h_CE=h_CE,
                       h_IS=h_IS, h_IP=h_IP, h_IE=h_IE)


def _stack(h_cascade, H_CI, h_direct) -> np.ndarray:
    top = np.diag(np.conj(h_cascade)) @ H_CI
    return np.vstack([top, np.conj(h_direct)[None, :]])


def assemble_composite(raw: RawChannels) -> CompositeChannels:
    """Stack raw links into the per-receiver composite matrices."""
    L, N = raw.H_CI.shape
    for name, vec, n in (("h_CS", raw.h_CS, N), ("h_CP", raw.h_CP, N),
                         ("h_IS", raw.h_IS, L), ("h_IP", raw.h_IP, L)):
        if len(vec) != n:
            raise ValueError(f"{name} has length {len(vec)}, expected {n}")
    if len(raw.h_CE) != len(raw.h_IE):
        raise ValueError("mismatched eavesdropper channel counts")
    H_S = _stack(raw.h_IS, raw.H_CI, raw.h_CS)
    H_P = _stack(raw.h_IP, raw.H_CI, raw.h_CP)
    H_E = tuple(_stack(hi, raw.H_CI, hc) for hi, hc in zip(raw.h_IE, raw.h_CE))
    return CompositeChannels(H_S=H_S, H_P=H_P, H_E=H_E)


def generate_channels(geometry: ScenarioGeometry, params: ChannelParams,
                      seed: int) -> CompositeChannels:
    """Seeded end-to-end draw of one composite channel realisation."""
    rng = np.random.default_rng(seed)
    return assemble_composite(generate_raw_channels(geometry, params, rng))


# ---------------------------------------------------------------------------
# plain-text channel dump (for replay and cross-implementation comparison)

_DUMP_MAGIC = "seeopt-channels v1"


def _write_matrix(lines, name, mat):
    m = np.asarray(mat, dtype=complex)
    if m.ndim == 1:
        m = m[:, None]
    lines.append(f"{name} {m.shape[0]} {m.shape[1]}")
    for row in m:
        lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))


def dump_channels(raw: RawChannels, path) -> None:
    """Serialise one raw realisation as plain text (header + re,im pairs)."""
    L, N = raw.H_CI.shape
    K = len(raw.h_CE)
    lines = [_DUMP_MAGIC, f"L {L} N {N} K {K}"]
    _write_matrix(lines, "H_CI", raw.H_CI)
    _write_matrix(lines, "h_CS", raw.h_CS)
    _write_matrix(lines, "h_CP", raw.h_CP)
    for k, h in enumerate(raw.h_CE):
        _write_matrix(lines, f"h_CE{k}", h)
    _write_matrix(lines, "h_IS", raw.h_IS)
    _write_matrix(lines, "h_IP", raw.h_IP)
    for k, h in enumerate(raw.h_IE):
        _write_matrix(lines, f"h_IE{k}", h)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_matrix(lines, idx, expect_name):
    header = lines[idx].split()
    if header[0] != expect_name:
        raise ValueError(f"expected section {expect_name!r}, found {header[0]!r}")
    rows, cols = int(header[1]), int(header[2])
    out = np.empty((rows, cols), dtype=complex)
    for r in range(rows):
        parts = lines[idx + 1 + r].split()
        if len(parts) != cols:
            raise ValueError(f"bad row width in section {expect_name!r}")
        for c, token in enumerate(parts):
            re_s, im_s = token.split(",")
            out[r, c] = complex(float(re_s), float(im_s))
    return out, idx + 1 + rows


def load_channels(path) -> RawChannels:
    """Parse a dump written by :func:`dump_channels`."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if lines[0] != _DUMP_MAGIC:
        raise ValueError("not a channel dump file")
    hdr = lines[1].split()
    L, N, K = int(hdr[1]), int(hdr[3]), int(hdr[5])
    idx = 2
    H_CI, idx = _parse_matrix(lines, idx, "H_CI")
    h_CS, idx = _parse_matrix(lines, idx, "h_CS")
    h_CP, idx = _parse_matrix(lines, idx, "h_CP")
    h_CE = []
    for k in range(K):
        m, idx = _parse_matrix(lines, idx, f"h_CE{k}")
        h_CE.append(m[:, 0])
    h_IS, idx = _parse_matrix(lines, idx, "h_IS")
    h_IP, idx = _parse_matrix(lines, idx, "h_IP")
    h_IE = []
    for k in range(K):
        m, idx = _parse_matrix(lines, idx, f"h_IE{k}")
        h_IE.append(m[:, 0])
    if H_CI.shape != (L, N):
        raise ValueError("dump header is inconsistent with matrix dimensions")
    return RawChannels(H_CI=H_CI, h_CS=h_CS[:, 0], h_CP=h_CP[:, 0], h_CE=tuple(h_CE),
                       h_IS=h_IS[:, 0], h_IP=h_IP[:, 0], h_IE=tuple(h_IE))
