"""Packet-level image transmission over the cognitive link with ARQ.

The image model is a raw 8-bit grayscale raster. The four most significant
bitplanes form the high-priority stream and the four least significant ones
the low-priority stream, both in raster order with the pixel's bits from
most to least significant. Image dimensions travel out of band.

Each packet attempt draws a fresh primary-user state, sensing decision and
fading. The receiver asks for a retransmission when the received power
``P_i |h|^2`` is below the threshold. A zero power from the policy (silent
variant) is a silent period: nothing is sent and the slot is skipped.
"""
import struct
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .channel import FadingSpec, channel_output, draw_sensing, sample_fading
from .modem import WORD_BITS, bits_to_word, build_constellation, map_detect

__all__ = [
    "GrayImage",
    "Packet",
    "SessionReport",
    "IdentityCoder",
    "PSNR_SENTINEL",
    "HEADER_BITS",
    "synthetic_image",
    "read_image",
    "write_image",
    "partition_bitplanes",
    "recombine",
    "packetize",
    "depacketize",
    "psnr",
    "transmit_packet",
    "run_session",
]

PSNR_SENTINEL = float("inf")  # identical images
HEADER_BITS = 64  # width and height, 32 bits each
_HEADER = struct.Struct("<II")
_MAX_SILENT = 100000


@dataclass(frozen=True, eq=False)
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        px = np.asarray(self.pixels)
        if px.shape != (self.height, self.width):
            raise ValueError(f"pixel array shape {px.shape} does not match {self.height}x{self.width}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255) or np.any(px != np.round(px)):
                raise ValueError("pixel intensities must be integers in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", px)


def synthetic_image(width=64, height=64):
    """Deterministic test picture: a gradient with a disc and stripes, so all
    bitplanes carry structure."""
    y, x = np.mgrid[0:height, 0:width]
    img = 255.0 * (x + y) / max(width + height - 2, 1)
    disc = (x - 0.6 * width) ** 2 + (y - 0.4 * height) ** 2 < (0.25 * min(width, height)) ** 2
    img = np.where(disc, 230.0 - 0.5 * img, img)
    img = img + 20.0 * np.sin(2.0 * np.pi * x / 7.0) * (y > 0.7 * height)
    return GrayImage(width, height, np.clip(np.round(img), 0, 255).astype(np.uint8))


def read_image(path):
    """Read the little-endian (width, height) header and the raw pixels."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for the image header")
    width, height = _HEADER.unpack_from(raw)
    body = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size)
    if body.size != width * height:
        raise ValueError(f"expected {width * height} pixels, found {body.size}")
    return GrayImage(width, height, body.reshape(height, width).copy())


def write_image(img, path):
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(img.width, img.height))
        fh.write(img.pixels.tobytes())


def _header_bits(width, height):
    return np.unpackbits(np.frombuffer(_HEADER.pack(width, height), dtype=np.uint8))


def partition_bitplanes(img):
    """Split into (hp, lp) bit streams.

    ``hp`` starts with the 64 header bits, followed by bits 7..4 of every
    pixel; ``lp`` holds bits 3..0.
    """
    bits = np.unpackbits(img.pixels.reshape(-1, 1), axis=1)
    hp = np.concatenate([_header_bits(img.width, img.height), bits[:, :4].ravel()])
    return hp, bits[:, 4:].ravel().copy()


def recombine(hp, lp):
    """Inverse of :func:`partition_bitplanes`."""
    hp = np.asarray(hp, dtype=np.uint8)
    lp = np.asarray(lp, dtype=np.uint8)
    width, height = _HEADER.unpack(np.packbits(hp[:HEADER_BITS]).tobytes())
    n = width * height
    if hp.size - HEADER_BITS != 4 * n or lp.size != 4 * n:
        raise ValueError("stream lengths do not match the header dimensions")
    bits = np.concatenate([hp[HEADER_BITS:].reshape(n, 4), lp.reshape(n, 4)], axis=1)
    return GrayImage(width, height, np.packbits(bits, axis=1).reshape(height, width))


@dataclass(frozen=True, eq=False)
class Packet:
    index: int
    hp_bits: np.ndarray
    lp_bits: np.ndarray


def packetize(hp, lp, n_packets):
    """Split both streams into ``n_packets`` packets of ``ceil(len/N)`` bits
    each; the last packet is zero-padded."""
    if n_packets < 1:
        raise ValueError("n_packets must be at least 1")
    hp = np.asarray(hp, dtype=np.uint8)
    lp = np.asarray(lp, dtype=np.uint8)
    k_hp = -(-hp.size // n_packets)
    k_lp = -(-lp.size // n_packets)
    hp_pad = np.zeros(k_hp * n_packets, dtype=np.uint8)
    lp_pad = np.zeros(k_lp * n_packets, dtype=np.uint8)
    hp_pad[:hp.size] = hp
    lp_pad[:lp.size] = lp
    return [
        Packet(k, hp_pad[k * k_hp:(k + 1) * k_hp].copy(), lp_pad[k * k_lp:(k + 1) * k_lp].copy())
        for k in range(n_packets)
    ]


def depacketize(packets, n_hp, n_lp):
    packets = sorted(packets, key=lambda p: p.index)
    hp = np.concatenate([p.hp_bits for p in packets])[:n_hp]
    lp = np.concatenate([p.lp_bits for p in packets])[:n_lp]
    return hp, lp


def psnr(reference, received):
    """10 log10(255^2 / MSE); :data:`PSNR_SENTINEL` for identical images."""
    a = reference.pixels.astype(float)
    b = received.pixels.astype(float)
    mse = np.mean((a - b) ** 2)
    return PSNR_SENTINEL if mse == 0 else float(10.0 * np.log10(255.0 ** 2 / mse))


class IdentityCoder:
    """Channel-coder interface; the default passes bits through unchanged."""

    def encode(self, bits):
        return bits

    def decode(self, bits, n_bits):
        return bits[:n_bits]


@dataclass(frozen=True)
class SessionReport:
    psnr: float
    n_re: int
    n_silent: int
    avg_power: float
    energy: float
    ber_hp_emp: float
    ber_lp_emp: float
    n_packets: int
    image: Optional[GrayImage] = field(default=None, repr=False, compare=False)


def _symbol_words(hp, lp, mapping):
    """4-bit words per symbol: HP pair on (b1, b2), LP pair on (b3, b4), or
    with ``mapping="qam"`` the interleaved concatenation in order."""
    if mapping == "hqam":
        n_sym = max(-(-hp.size // 2), -(-lp.size // 2), 1)
        bits = np.zeros((n_sym, 4), dtype=np.uint8)
        hpp = np.zeros(2 * n_sym, dtype=np.uint8)
        lpp = np.zeros(2 * n_sym, dtype=np.uint8)
        hpp[:hp.size] = hp
        lpp[:lp.size] = lp
        bits[:, :2] = hpp.reshape(n_sym, 2)
        bits[:, 2:] = lpp.reshape(n_sym, 2)
        return bits_to_word(bits.astype(np.int64))
    flat = np.concatenate([hp, lp])
    perm = _interleaver(flat.size)
    n_sym = max(-(-flat.size // 4), 1)
    padded = np.zeros(4 * n_sym, dtype=np.uint8)
    padded[:flat.size] = flat[perm]
    return bits_to_word(padded.reshape(n_sym, 4).astype(np.int64))


def _symbol_bits(words, n_hp, n_lp, mapping):
    bits = WORD_BITS[words]
    if mapping == "hqam":
        return bits[:, :2].ravel()[:n_hp].copy(), bits[:, 2:].ravel()[:n_lp].copy()
    n = n_hp + n_lp
    flat = np.empty(n, dtype=np.int8)
    flat[_interleaver(n)] = bits.ravel()[:n]
    return flat[:n_hp].astype(np.uint8), flat[n_hp:].astype(np.uint8)


def _interleaver(n):
    # fixed pseudo-random permutation, identical at both ends
    return np.random.default_rng(0x5EED + n).permutation(n)


def _draw_g2(policy, env, rng):
    if policy.mode != "instantaneous-imperfect-CSI" or env.sigma_e2 <= 0:
        return float(np.abs(sample_fading(env.g_spec, rng)) ** 2)
    spec = FadingSpec(env.g_spec.m, env.g_spec.omega - env.sigma_e2)
    return float(np.abs(sample_fading(spec, rng)) ** 2)


def transmit_packet(packet, policy, s, env, thr, n_upper, rng, mapping="hqam", coder=None):
    """Send one packet with ARQ.

    Returns ``(received_packet, n_retransmissions, n_silent, energy,
    symbol_slots)`` where ``energy`` sums ``P_i x symbols`` over every
    attempt that was actually transmitted. With ``n_upper`` set, the packet
    is delivered after that many retransmissions whatever its received
    power.
    """
    if thr < 0:
        raise ValueError("threshold must be non-negative")
    if mapping not in ("hqam", "qam"):
        raise ValueError(f"unknown mapping {mapping!r}")
    coder = coder or IdentityCoder()
    hp_tx = coder.encode(packet.hp_bits)
    lp_tx = coder.encode(packet.lp_bits)
    words = _symbol_words(hp_tx, lp_tx, mapping)
    n_sym = words.size
    alphas = (policy.alpha0, policy.alpha1) if mapping == "hqam" else (1.0, 1.0)
    n_re = n_silent = 0
    energy = 0.0
    while True:
        state, decision = draw_sensing(s, rng)
        h = complex(sample_fading(env.h_spec, rng))
        h2 = abs(h) ** 2
        g2 = _draw_g2(policy, env, rng) if policy.p_const is None else 0.0
        p0, p1 = policy.powers(np.array([h2]), np.array([g2]))
        p = float((p0, p1)[decision][0])
        if p <= 0.0:
            n_silent += 1
            if n_silent > _MAX_SILENT:
                raise RuntimeError("too many consecutive silent periods")
            continue
        energy += p * n_sym
        if p * h2 < thr and (n_upper is None or n_re < n_upper):
            n_re += 1
            continue
        break
    c = build_constellation(alphas[decision], p)
    y = channel_output(env, c.points[words], h, state, rng)
    detected = map_detect(y, np.full(n_sym, h), decision, c, s, env)
    hp_rx, lp_rx = _symbol_bits(detected, hp_tx.size, lp_tx.size, mapping)
    received = Packet(packet.index, coder.decode(hp_rx, packet.hp_bits.size),
                      coder.decode(lp_rx, packet.lp_bits.size))
    return received, n_re, n_silent, energy, n_sym * (n_re + 1 + n_silent)


def run_session(img, n_packets, policy, s, env, thr, n_upper, rng, mapping="hqam", coder=None):
    """Transmit a whole image and report quality and cost.

    The header bits are delivered out of band; only pixel bitplanes cross
    the channel. ``avg_power`` is the energy divided by all symbol slots
    spent, silent ones included.
    """
    hp, lp = partition_bitplanes(img)
    header, hp_payload = hp[:HEADER_BITS], hp[HEADER_BITS:]
    packets = packetize(hp_payload, lp, n_packets)
    received: List[Packet] = []
    n_re = n_silent = 0
    energy = 0.0
    slots = 0
    for pkt in packets:
        rx, re, sil, e, sl = transmit_packet(pkt, policy, s, env, thr, n_upper, rng, mapping, coder)
        received.append(rx)
        n_re += re
        n_silent += sil
        energy += e
        slots += sl
    hp_rx, lp_rx = depacketize(received, hp_payload.size, lp.size)
    out = recombine(np.concatenate([header, hp_rx]), lp_rx)
    return SessionReport(
        psnr=psnr(img, out),
        n_re=n_re,
        n_silent=n_silent,
        avg_power=energy / slots if slots else 0.0,
        energy=energy,
        ber_hp_emp=float(np.mean(hp_rx != hp_payload)),
        ber_lp_emp=float(np.mean(lp_rx != lp)),
        n_packets=n_packets,
        image=out,
    )
