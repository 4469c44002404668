"""Packet corpus readers/writers and the JSON-lines result format.

Three input formats are understood:

``hex``
    one packet per line as hex digits; blank lines and ``#`` comments are
    ignored, whitespace inside a line is allowed.
``raw``
    a sequence of records, each a 2-byte big-endian length and that many bytes.
``pcap``
    classic libpcap files with microsecond timestamps, either byte order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

from .errors import PacketFormatError

FORMATS = ("hex", "raw", "pcap")

PCAP_MAGIC_US = 0xA1B2C3D4
PCAP_MAGIC_NS = 0xA1B23C4D
PCAPNG_MAGIC = 0x0A0D0D0A
LINKTYPE_ETHERNET = 1


def parse_hex_lines(text: str) -> list[bytes]:
    packets = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        digits = "".join(line.split())
        if digits.lower().startswith("0x"):
            digits = digits[2:]
        try:
            packets.append(bytes.fromhex(digits))
        except ValueError:
            raise PacketFormatError(f"line {lineno}: not a hex string") from None
    return packets


def format_hex_lines(packets, notes=None) -> str:
    lines = []
    for i, p in enumerate(packets):
        line = p.hex()
        if notes is not None:
            line += f"  # {notes[i]}"
        lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")


def parse_raw(data: bytes) -> list[bytes]:
    packets = []
    pos = 0
    while pos < len(data):
        if pos + 2 > len(data):
            raise PacketFormatError(f"offset {pos}: dangling length prefix")
        (n,) = struct.unpack_from(">H", data, pos)
        pos += 2
        if pos + n > len(data):
            raise PacketFormatError(f"offset {pos - 2}: record of {n} bytes runs past end of file")
        packets.append(data[pos:pos + n])
        pos += n
    return packets


def format_raw(packets) -> bytes:
    out = bytearray()
    for p in packets:
        if len(p) > 0xFFFF:
            raise PacketFormatError(f"packet of {len(p)} bytes does not fit a 2-byte length")
        out += struct.pack(">H", len(p)) + p
    return bytes(out)


def parse_pcap(data: bytes) -> list[bytes]:
    if len(data) < 24:
        raise PacketFormatError("file too short for a pcap global header")
    (magic_be,) = struct.unpack_from(">I", data, 0)
    (magic_le,) = struct.unpack_from("<I", data, 0)
    if PCAP_MAGIC_US == magic_be:
        endian = ">"
    elif PCAP_MAGIC_US == magic_le:
        endian = "<"
    elif PCAP_MAGIC_NS in (magic_be, magic_le):
        raise PacketFormatError(
            "nanosecond-resolution pcap (magic 0xa1b23c4d) is not supported; "
            "only classic microsecond pcap (magic 0xa1b2c3d4) is accepted")
    elif magic_be == PCAPNG_MAGIC:
        raise PacketFormatError("pcapng files are not supported; convert to classic pcap first")
    else:
        raise PacketFormatError(f"unrecognized pcap magic 0x{magic_be:08x}")

    packets = []
    pos = 24
    while pos < len(data):
        if pos + 16 > len(data):
            raise PacketFormatError(f"offset {pos}: truncated record header")
        _, _, incl_len, _ = struct.unpack_from(endian + "IIII", data, pos)
        pos += 16
        if pos + incl_len > len(data):
            raise PacketFormatError(f"offset {pos - 16}: record runs past end of file")
        packets.append(data[pos:pos + incl_len])
        pos += incl_len
    return packets


def format_pcap(packets, little_endian: bool = True, magic: int = PCAP_MAGIC_US) -> bytes:
    e = "<" if little_endian else ">"
    out = bytearray(struct.pack(e + "IHHiIII", magic, 2, 4, 0, 0, 65535, LINKTYPE_ETHERNET))
    for i, p in enumerate(packets):
        out += struct.pack(e + "IIII", i, 0, len(p), len(p)) + p
    return bytes(out)


def read_packets(path, fmt: str) -> list[bytes]:
    path = Path(path)
    if fmt == "hex":
        return parse_hex_lines(path.read_text(encoding="ascii"))
    if fmt == "raw":
        return parse_raw(path.read_bytes())
    if fmt == "pcap":
        return parse_pcap(path.read_bytes())
    raise PacketFormatError(f"unknown packet format {fmt!r}; expected one of {', '.join(FORMATS)}")


def write_packets(path, packets, fmt: str, notes=None):
    path = Path(path)
    if fmt == "hex":
        path.write_text(format_hex_lines(packets, notes), encoding="ascii")
    elif fmt == "raw":
        path.write_bytes(format_raw(packets))
    elif fmt == "pcap":
        path.write_bytes(format_pcap(packets))
    else:
        raise PacketFormatError(f"unknown packet format {fmt!r}")


def results_to_jsonl(results) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in results)
