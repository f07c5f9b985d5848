"""Hash generators: ones-complement checksum, CRCs, identity.

A "bit stream" here is a list of (width, Value) segments, most significant
first.  Concrete streams collapse to (bits, nbits); streams containing
symbolic values become derived hash atoms so symbolic paths stay decidable.
"""

from __future__ import annotations

import binascii

from .errors import StuckError, P4Error, READ_INVALID_HEADER, UNDEF_IN_EXPR, HASH_WIDTH_MISMATCH
from .values import Concrete, Symbolic, is_undef

ALGORITHMS = ("csum16", "crc16", "crc32", "identity")


def csum16(data: bytes) -> int:
    """Ones-complement of the ones-complement 16-bit word sum.

    Odd-length input is padded with a zero byte.
    """
    if len(data) % 2:
        data = data + b"\x00"
    total = 0
    for i in range(0, len(data), 2):
        total += (data[i] << 8) | data[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


_CRC16_TABLE = []


def _crc16_table():
    if not _CRC16_TABLE:
        for byte in range(256):
            crc = byte
            for _ in range(8):
                crc = (crc >> 1) ^ 0xA001 if crc & 1 else crc >> 1
            _CRC16_TABLE.append(crc)
    return _CRC16_TABLE


def crc16(data: bytes) -> int:
    """CRC-16/ARC: poly 0x8005 reflected, init 0, no final xor."""
    table = _crc16_table()
    crc = 0
    for b in data:
        crc = (crc >> 8) ^ table[(crc ^ b) & 0xFF]
    return crc


def crc32(data: bytes) -> int:
    """Standard CRC-32 (reflected 0x04C11DB7, init/xorout 0xFFFFFFFF)."""
    return binascii.crc32(data) & 0xFFFFFFFF


def identity(data_bits: int, nbits: int, width: int) -> int:
    if nbits != width:
        raise P4Error(HASH_WIDTH_MISMATCH,
                      f"identity hash over {nbits} bits into {width}-bit output")
    return data_bits


def _to_bytes(bits: int, nbits: int) -> bytes:
    pad = -nbits % 8
    return (bits << pad).to_bytes((nbits + pad) // 8, "big")


def compute(algorithm: str, bits: int, nbits: int, output_width: int) -> int:
    """Run a generator over a concrete bit stream, fit to output_width.

    Narrower outputs keep the low bits; wider outputs zero-extend.
    """
    if algorithm == "identity":
        raw = identity(bits, nbits, output_width)
    elif algorithm == "csum16":
        raw = csum16(_to_bytes(bits, nbits))
    elif algorithm == "crc16":
        raw = crc16(_to_bytes(bits, nbits))
    elif algorithm == "crc32":
        raw = crc32(_to_bytes(bits, nbits))
    else:
        raise P4Error("UNKNOWN_HASH", f"no hash generator named {algorithm!r}")
    return raw & ((1 << output_width) - 1)


def serialize_field_list(cfg, items) -> list:
    """Turn flattened field-list items into (width, Value) segments.

    `items` come from the program model's field-list flattener: ("field",
    instance, field) or ("const", width, bits).  Reading a field of an
    invalid instance or an undefined field is stuck.
    """
    program = cfg.program
    segments = []
    for item in items:
        if item[0] == "const":
            _, width, bits = item
            segments.append((width, Concrete(width, bits)))
            continue
        _, inst, fld = item
        if not cfg.is_valid(inst):
            raise StuckError(READ_INVALID_HEADER, f"field_list item {inst}.{fld}")
        v = cfg.get_field(inst, fld)
        if is_undef(v):
            raise StuckError(UNDEF_IN_EXPR, f"field_list item {inst}.{fld}")
        segments.append((v.width, v))
    return segments


def concat_segments(segments) -> tuple[int, int]:
    """Collapse concrete segments to (bits, nbits); symbolic input is a bug here."""
    bits = 0
    nbits = 0
    for width, v in segments:
        assert isinstance(v, Concrete)
        bits = (bits << width) | v.bits
        nbits += width
    return bits, nbits


def hash_segments(cfg, algorithm: str, output_width: int, segments):
    """Hash a bit stream; symbolic segments produce a derived hash atom."""
    if any(isinstance(v, Symbolic) for _, v in segments):
        return cfg.atoms.derive_hash(algorithm, output_width, segments)
    bits, nbits = concat_segments(segments)
    return Concrete(output_width, compute(algorithm, bits, nbits, output_width))
