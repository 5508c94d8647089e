"""One-time-pad encryption in an arbitrary modulus.

A Pad is a strictly single-use key stream: every encryption or
decryption advances an internal cursor, consumed symbols can never be
addressed again, and running past the end raises instead of wrapping.
Messages are sequences of integers below a common base (2 for bits,
10 for digits, 26 for letters A..Z, 256 for bytes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EncodingError, PadDepletedError


@dataclass(frozen=True)
class Message:
    """Plaintext or ciphertext: integer symbols below ``base``."""

    symbols: np.ndarray
    base: int

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")
        arr = np.asarray(self.symbols, dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() >= self.base):
            raise ValueError(f"symbols must lie in [0, {self.base})")
        object.__setattr__(self, "symbols", arr)

    def __len__(self) -> int:
        return int(self.symbols.size)


class Pad:
    """Single-use key material with an explicit consumption cursor."""

    def __init__(self, symbols, base: int):
        if base < 2:
            raise ValueError("base must be >= 2")
        arr = np.asarray(symbols, dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() >= base):
            raise ValueError(f"pad symbols must lie in [0, {base})")
        self._symbols = arr
        self.base = base
        self._consumed = 0

    @property
    def consumed(self) -> int:
        return self._consumed

    def __len__(self) -> int:
        return int(self._symbols.size)

    def remaining(self) -> int:
        return len(self) - self._consumed

    def _take(self, n: int) -> np.ndarray:
        if n > self.remaining():
            raise PadDepletedError(
                f"pad has {self.remaining()} unconsumed symbols, {n} required"
            )
        out = self._symbols[self._consumed: self._consumed + n]
        self._consumed += n
        return out


def encrypt(p: Message, pad: Pad) -> tuple[Message, Pad]:
    """c_i = (p_i + k_i) mod base, consuming len(p) pad symbols."""
    if p.base != pad.base:
        raise ValueError(f"message base {p.base} != pad base {pad.base}")
    k = pad._take(len(p))
    c = (p.symbols + k) % p.base
    return Message(c, p.base), pad


def decrypt(c: Message, pad: Pad) -> tuple[Message, Pad]:
    """p_i = (c_i - k_i) mod base; inverse of encrypt at the same cursor."""
    if c.base != pad.base:
        raise ValueError(f"message base {c.base} != pad base {pad.base}")
    k = pad._take(len(c))
    p = (c.symbols - k) % c.base
    return Message(p, c.base), pad


def ascii_encode(text: str) -> Message:
    """7-bit printable text -> base-2 message, 8 bits per character,
    most-significant bit first."""
    for ch in text:
        if ord(ch) >= 128 or not (ch.isprintable() or ch in "\t\n\r"):
            raise EncodingError(f"character {ch!r} is not 7-bit printable")
    if not text:
        return Message(np.zeros(0, dtype=np.int64), 2)
    raw = np.frombuffer(text.encode("ascii"), dtype=np.uint8)
    return Message(np.unpackbits(raw).astype(np.int64), 2)


def ascii_decode(m: Message) -> str:
    if m.base != 2:
        raise EncodingError(f"expected a base-2 message, got base {m.base}")
    if len(m) % 8:
        raise EncodingError(f"bit count {len(m)} is not a multiple of 8")
    raw = np.packbits(m.symbols.astype(np.uint8)).tobytes()
    try:
        return raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"bits do not decode as ASCII: {exc}") from exc


def pad_from_key(bits, base: int, n_symbols: int | None = None) -> Pad:
    """Build a pad from uniform key bits.

    Base 2 maps bits directly. Otherwise ceil(log2(base)) bits form one
    candidate word and words >= base are rejected, which keeps the
    surviving symbols uniform. With ``n_symbols`` set, fewer usable
    symbols than requested raises PadDepletedError.
    """
    arr = np.asarray(bits, dtype=np.uint8)
    if base == 2:
        symbols = arr.astype(np.int64)
    else:
        width = math.ceil(math.log2(base))
        usable = (len(arr) // width) * width
        words = arr[:usable].reshape(-1, width)
        weights = (1 << np.arange(width - 1, -1, -1)).astype(np.int64)
        values = words.astype(np.int64) @ weights
        symbols = values[values < base]
    if n_symbols is not None:
        if len(symbols) < n_symbols:
            raise PadDepletedError(
                f"key bits yield {len(symbols)} symbols, {n_symbols} required"
            )
        symbols = symbols[:n_symbols]
    return Pad(symbols, base)


def save_pad(pad: Pad, path) -> None:
    """Write a pad as hex text with a {base, length, consumed} header."""
    if pad.base > 256:
        raise ValueError("pad files support bases up to 256")
    with open(path, "w") as f:
        f.write(f"base={pad.base} length={len(pad)} consumed={pad.consumed}\n")
        f.write(bytes(int(s) for s in pad._symbols).hex() + "\n")


def load_pad(path) -> Pad:
    with open(path) as f:
        header = f.readline().strip()
        body = f.readline().strip()
    try:
        kv = dict(part.split("=", 1) for part in header.split())
        base, length, consumed = int(kv["base"]), int(kv["length"]), int(kv["consumed"])
    except (ValueError, KeyError) as exc:
        raise ValueError(f"bad pad header {header!r}") from exc
    symbols = np.frombuffer(bytes.fromhex(body), dtype=np.uint8).astype(np.int64)
    if len(symbols) != length:
        raise ValueError(f"pad body has {len(symbols)} symbols, header says {length}")
    pad = Pad(symbols, base)
    pad._take(consumed)  # replay consumption so used symbols stay used
    return pad
