"""Adaptive binary arithmetic coding of integer sequences.

Binarization is order-0 Exp-Golomb of zigzag-mapped values. Every bin is
coded with an adaptive probability chosen by its position inside the
codeword (positions past 15 share the last model). Probabilities are 12-bit
and move towards each coded bin by 1/32 of the remaining distance.

The range coder itself is the classic carry-propagating 32-bit design: a
33-bit ``low``, byte-wise renormalisation and a cached pending byte.
"""

from __future__ import annotations

from typing import Iterable, List

from .errors import MalformedStreamError

PROB_BITS = 12
PROB_ONE = 1 << PROB_BITS
PROB_INIT = PROB_ONE // 2
ADAPT_SHIFT = 5
N_CONTEXTS = 16
TOP = 1 << 24
MASK32 = 0xFFFFFFFF


def zigzag(v: int) -> int:
    return 2 * v if v >= 0 else -2 * v - 1


def unzigzag(u: int) -> int:
    return u >> 1 if u % 2 == 0 else -((u + 1) >> 1)


def exp_golomb_bins(u: int) -> List[int]:
    """Order-0 Exp-Golomb codeword of ``u >= 0`` as a list of bits."""
    x = u + 1
    n = x.bit_length()
    return [0] * (n - 1) + [(x >> i) & 1 for i in range(n - 1, -1, -1)]


class ContextSet:
    """``N_CONTEXTS`` adaptive models indexed by bin position."""

    __slots__ = ("p",)

    def __init__(self, n: int = N_CONTEXTS):
        self.p = [PROB_INIT] * n


class Encoder:
    def __init__(self):
        self.low = 0
        self.range = MASK32
        self.cache = 0
        self.cache_size = 1
        self.out = bytearray()

    def _shift_low(self):
        low = self.low
        if low < 0xFF000000 or low > MASK32:
            carry = low >> 32
            temp = self.cache
            while True:
                self.out.append((temp + carry) & 0xFF)
                temp = 0xFF
                self.cache_size -= 1
                if self.cache_size == 0:
                    break
            self.cache = (low >> 24) & 0xFF
        self.cache_size += 1
        self.low = (low & 0x00FFFFFF) << 8

    def encode_bit(self, ctx: ContextSet, i: int, bit: int):
        p = ctx.p[i]
        bound = (self.range >> PROB_BITS) * p
        if bit:
            self.low += bound
            self.range -= bound
            ctx.p[i] = p - (p >> ADAPT_SHIFT)
        else:
            self.range = bound
            ctx.p[i] = p + ((PROB_ONE - p) >> ADAPT_SHIFT)
        while self.range < TOP:
            self.range = (self.range << 8) & MASK32
            self._shift_low()

    def encode_uint(self, ctx: ContextSet, u: int):
        """Exp-Golomb order 0, one adaptive model per bin position."""
        x = u + 1
        n = x.bit_length()
        last = len(ctx.p) - 1
        pos = 0
        for _ in range(n - 1):
            self.encode_bit(ctx, pos if pos < last else last, 0)
            pos += 1
        for i in range(n - 1, -1, -1):
            self.encode_bit(ctx, pos if pos < last else last, (x >> i) & 1)
            pos += 1

    def encode_int(self, ctx: ContextSet, v: int):
        self.encode_uint(ctx, zigzag(v))

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        return bytes(self.out)


class Decoder:
    def __init__(self, data: bytes, base_offset: int = 0):
        self.data = data
        self.pos = 0
        self.base = base_offset
        self.range = MASK32
        self.code = 0
        for _ in range(5):
            self.code = (self.code << 8) | self._next()

    def _next(self) -> int:
        if self.pos >= len(self.data):
            raise MalformedStreamError(self.base + self.pos, "truncated arithmetic-coded payload")
        b = self.data[self.pos]
        self.pos += 1
        return b

    def decode_bit(self, ctx: ContextSet, i: int) -> int:
        p = ctx.p[i]
        bound = (self.range >> PROB_BITS) * p
        if self.code < bound:
            self.range = bound
            ctx.p[i] = p + ((PROB_ONE - p) >> ADAPT_SHIFT)
            bit = 0
        else:
            self.code -= bound
            self.range -= bound
            ctx.p[i] = p - (p >> ADAPT_SHIFT)
            bit = 1
        while self.range < TOP:
            self.range = (self.range << 8) & MASK32
            self.code = ((self.code << 8) | self._next()) & MASK32
        return bit

    def decode_uint(self, ctx: ContextSet, limit_bits: int = 64) -> int:
        last = len(ctx.p) - 1
        pos = 0
        zeros = 0
        while self.decode_bit(ctx, pos if pos < last else last) == 0:
            zeros += 1
            pos += 1
            if zeros > limit_bits:
                raise MalformedStreamError(self.base + self.pos, "Exp-Golomb prefix too long")
        pos += 1
        x = 1
        for _ in range(zeros):
            x = (x << 1) | self.decode_bit(ctx, pos if pos < last else last)
            pos += 1
        return x - 1

    def decode_int(self, ctx: ContextSet) -> int:
        return unzigzag(self.decode_uint(ctx))


def entropy_encode(levels: Iterable[int]) -> bytes:
    """Code a sequence of signed integers with a single context set."""
    enc = Encoder()
    ctx = ContextSet()
    for v in levels:
        enc.encode_int(ctx, int(v))
    return enc.finish()


def entropy_decode(data: bytes, count: int) -> List[int]:
    """Inverse of :func:`entropy_encode`; ``count`` symbols are read."""
    if count == 0:
        return []
    dec = Decoder(data)
    ctx = ContextSet()
    return [dec.decode_int(ctx) for _ in range(count)]
