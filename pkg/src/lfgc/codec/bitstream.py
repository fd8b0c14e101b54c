"""The ``.lfgc`` container.

Layout (little-endian throughout)::

    "LFGC"  u8 version  u16 rows  u16 cols  u16 height  u16 width  u8 scheme
    u32 json_len  json (plan + coding parameters)
    per reference:  u32 len  side info
    per block:      u32 len  coefficient section
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Dict, List

from ..errors import DataError, MalformedStreamError
from ..projection.plans import CENTER, MULTIVIEW, TOPLEFT

MAGIC = b"LFGC"
VERSION = 1
SCHEMES = (TOPLEFT, CENTER, MULTIVIEW)
_FIXED = struct.Struct("<4sBHHHHB")
_U32 = struct.Struct("<I")


@dataclass
class Bitstream:
    n_rows: int
    n_cols: int
    height: int
    width: int
    scheme: str
    meta: dict
    sideinfo: List[bytes] = field(default_factory=list)
    blocks: List[bytes] = field(default_factory=list)

    def header_bytes(self) -> bytes:
        if self.scheme not in SCHEMES:
            raise DataError(f"unknown scheme {self.scheme!r}")
        for v in (self.n_rows, self.n_cols, self.height, self.width):
            if not 0 <= v <= 0xFFFF:
                raise DataError(f"dimension {v} does not fit in 16 bits")
        js = json.dumps(self.meta, sort_keys=True, separators=(",", ":")).encode()
        return (_FIXED.pack(MAGIC, VERSION, self.n_rows, self.n_cols, self.height, self.width,
                            SCHEMES.index(self.scheme))
                + _U32.pack(len(js)) + js)

    def to_bytes(self) -> bytes:
        parts = [self.header_bytes()]
        for chunk in list(self.sideinfo) + list(self.blocks):
            parts.append(_U32.pack(len(chunk)))
            parts.append(chunk)
        return b"".join(parts)

    def section_sizes(self) -> Dict[str, object]:
        """Byte counts: header, each side-info chunk and each block (length prefixes included)."""
        return {
            "header": len(self.header_bytes()),
            "sideinfo": [_U32.size + len(c) for c in self.sideinfo],
            "blocks": [_U32.size + len(c) for c in self.blocks],
        }

    @property
    def n_references(self) -> int:
        return len(self.meta["plan"]["references"])

    @property
    def n_blocks(self) -> int:
        return len(self.meta["plan"]["blocks"])

    @classmethod
    def from_bytes(cls, data: bytes) -> "Bitstream":
        data = bytes(data)
        if len(data) < _FIXED.size:
            raise MalformedStreamError(len(data), "header truncated")
        magic, version, rows, cols, h, w, scheme = _FIXED.unpack_from(data, 0)
        if magic != MAGIC:
            raise MalformedStreamError(0, "bad magic")
        if version != VERSION:
            raise MalformedStreamError(4, f"unsupported version {version}")
        if scheme >= len(SCHEMES):
            raise MalformedStreamError(_FIXED.size - 1, f"unknown scheme tag {scheme}")
        pos = _FIXED.size
        js, pos = _chunk(data, pos)
        try:
            meta = json.loads(js.decode())
            n_refs = len(meta["plan"]["references"])
            n_blocks = len(meta["plan"]["blocks"])
        except (ValueError, KeyError, TypeError):
            raise MalformedStreamError(_FIXED.size, "bad header JSON") from None
        side, blocks = [], []
        for _ in range(n_refs):
            c, pos = _chunk(data, pos)
            side.append(c)
        for _ in range(n_blocks):
            c, pos = _chunk(data, pos)
            blocks.append(c)
        if pos != len(data):
            raise MalformedStreamError(pos, "trailing bytes")
        return cls(rows, cols, h, w, SCHEMES[scheme], meta, side, blocks)

    def chunk_offsets(self) -> Dict[str, List[int]]:
        """Absolute offset of each side-info and block payload, for error reporting."""
        pos = len(self.header_bytes())
        side, blocks = [], []
        for c in self.sideinfo:
            side.append(pos + _U32.size)
            pos += _U32.size + len(c)
        for c in self.blocks:
            blocks.append(pos + _U32.size)
            pos += _U32.size + len(c)
        return {"sideinfo": side, "blocks": blocks}


def _chunk(data: bytes, pos: int):
    if pos + _U32.size > len(data):
        raise MalformedStreamError(len(data), "length prefix truncated")
    (n,) = _U32.unpack_from(data, pos)
    pos += _U32.size
    if pos + n > len(data):
        raise MalformedStreamError(len(data), f"section of {n} bytes truncated")
    return data[pos:pos + n], pos + n
