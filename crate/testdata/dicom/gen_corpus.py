#!/usr/bin/env python3
"""Writes the DICOM golden corpus: paired NAME.dcm and NAME.json files.

Bytes are assembled directly with struct, independently of the Rust codec.
Each listing holds either {"error": KIND} for files the parser must refuse,
or the expected meta/dataset elements (tag, vr, value hex) plus either the
decoded pixel grid or {"error": KIND} for extract_pixels.

Run from any directory: python3 testdata/dicom/gen_corpus.py
"""
import json
import os
import struct
import zlib

HERE = os.path.dirname(os.path.abspath(__file__))
EVRLE = "1.2.840.10008.1.2.1"
JPEG_BASELINE = "1.2.840.10008.1.2.4.50"
DX_PRESENTATION = "1.2.840.10008.5.1.4.1.1.1.1"
BASIC_TEXT_SR = "1.2.840.10008.5.1.4.1.1.88.11"
IMPL_UID = "2.25.4242"
LONG = {"OB", "OW", "SQ", "UT"}
STRING = {"UI", "SH", "LO", "PN", "CS", "DA", "TM", "IS", "DS", "ST", "UT"}


def pad(vr, raw):
    if len(raw) % 2 == 0:
        return raw
    return raw + (b"\x00" if vr == "UI" or vr not in STRING else b" ")


def enc(vr, value):
    if isinstance(value, str):
        return pad(vr, value.encode("ascii"))
    return value


def element(group, elem, vr, value, length=None):
    """Explicit VR little endian element; `length` overrides the length field."""
    body = enc(vr, value)
    n = len(body) if length is None else length
    head = struct.pack("<HH", group, elem) + vr.encode("ascii")
    if vr in LONG:
        head += b"\x00\x00" + struct.pack("<I", n)
    else:
        head += struct.pack("<H", n)
    return head + body


def us(v):
    return struct.pack("<H", v)


def meta(sop_class, sop_instance, ts=EVRLE, include_ts=True):
    items = [
        (0x0002, 0x0001, "OB", b"\x00\x01"),
        (0x0002, 0x0002, "UI", sop_class),
        (0x0002, 0x0003, "UI", sop_instance),
    ]
    if include_ts:
        items.append((0x0002, 0x0010, "UI", ts))
    items.append((0x0002, 0x0012, "UI", IMPL_UID))
    body = b"".join(element(*i) for i in items)
    group_len = element(0x0002, 0x0000, "UL", struct.pack("<I", len(body)))
    return [(0x0002, 0x0000, "UL", struct.pack("<I", len(body)))] + items, group_len + body


def listing(items):
    return [
        {"tag": "%04X%04X" % (g, e), "vr": vr, "value": enc(vr, v).hex()}
        for g, e, vr, v in items
    ]


def image_dataset(sop, rows, cols, bits, photometric, samples, pixel_vr=None, extra=()):
    if bits == 8:
        payload = bytes(samples)
        vr = pixel_vr or "OB"
    else:
        payload = b"".join(struct.pack("<H", s) for s in samples)
        vr = pixel_vr or "OW"
    if len(payload) % 2:
        payload += b"\x00"
    items = [
        (0x0008, 0x0016, "UI", DX_PRESENTATION),
        (0x0008, 0x0018, "UI", sop),
        (0x0008, 0x0060, "CS", "DX"),
        (0x0010, 0x0020, "LO", "CORPUS"),
        (0x0020, 0x000D, "UI", "1.2.826.0.1.3680043.10.1"),
        (0x0028, 0x0002, "US", us(1)),
        (0x0028, 0x0004, "CS", photometric),
        (0x0028, 0x0010, "US", us(rows)),
        (0x0028, 0x0011, "US", us(cols)),
        (0x0028, 0x0100, "US", us(bits)),
        (0x0028, 0x0101, "US", us(bits)),
        (0x0028, 0x0102, "US", us(bits - 1)),
        (0x0028, 0x0103, "US", us(0)),
        (0x7FE0, 0x0010, vr, payload),
    ]
    items.extend(extra)
    items.sort(key=lambda i: (i[0], i[1]))
    return items


def assemble(meta_bytes, items):
    return b"\x00" * 128 + b"DICM" + meta_bytes + b"".join(element(*i) for i in items)


def write(name, data, doc):
    with open(os.path.join(HERE, name + ".dcm"), "wb") as f:
        f.write(data)
    with open(os.path.join(HERE, name + ".json"), "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


def valid(name, sop_class, sop, items, pixels):
    meta_items, meta_bytes = meta(sop_class, sop)
    doc = {"meta": listing(meta_items), "dataset": listing(items), "pixels": pixels}
    write(name, assemble(meta_bytes, items), doc)


def grid(rows, cols, bits, photometric, samples):
    return {"rows": rows, "cols": cols, "bits_allocated": bits, "photometric": photometric, "samples": samples}


def valid_image(name, rows, cols, bits, photometric, samples, **kw):
    sop = "2.25.%d" % zlib.crc32(name.encode("ascii"))
    items = image_dataset(sop, rows, cols, bits, photometric, samples, **kw)
    valid(name, DX_PRESENTATION, sop, items, grid(rows, cols, bits, photometric, samples))


def lcg(seed, n, modulus):
    out, x = [], seed
    for _ in range(n):
        x = (1103515245 * x + 12345) % 2**31
        out.append(x % modulus)
    return out


def minimal_items(sop, sop_class=DX_PRESENTATION):
    return [(0x0008, 0x0016, "UI", sop_class), (0x0008, 0x0018, "UI", sop)]


def error(name, data, kind):
    write(name, data, {"error": kind})


def main():
    # valid images: both bit depths, both photometric interpretations
    valid_image("mono2_8bit_4x4", 4, 4, 8, "MONOCHROME2", list(range(0, 160, 10)))
    valid_image("mono2_16bit_2x2_byte_order", 2, 2, 16, "MONOCHROME2", [1, 256, 255, 65280])
    valid_image("mono1_8bit_16x16", 16, 16, 8, "MONOCHROME1", lcg(7, 256, 256))
    valid_image("mono1_16bit_12x10", 12, 10, 16, "MONOCHROME1", lcg(11, 120, 4096))
    valid_image("mono2_8bit_odd_3x3", 3, 3, 8, "MONOCHROME2", [0, 32, 64, 96, 128, 160, 192, 224, 255])
    valid_image("mono2_16bit_24x24_gradient", 24, 24, 16, "MONOCHROME2", [(r * 24 + c) * 113 for r in range(24) for c in range(24)])
    valid_image("mono2_16bit_extremes", 2, 3, 16, "MONOCHROME2", [0, 65535, 1, 65534, 32768, 32767])
    valid_image("mono1_8bit_1x1", 1, 1, 8, "MONOCHROME1", [200])
    valid_image("mono2_8bit_ow_pixels", 2, 4, 8, "MONOCHROME2", [1, 2, 3, 4, 5, 6, 7, 8], pixel_vr="OW")
    valid_image(
        "private_tags_preserved", 4, 2, 8, "MONOCHROME2", lcg(3, 8, 256),
        extra=[(0x0009, 0x0010, "LO", "ACME PRIVATE"), (0x0009, 0x1001, "OB", b"\xde\xad\xbe\xef"), (0x0019, 0x1002, "UT", "free text")],
    )
    valid_image(
        "odd_strings_padded", 2, 2, 8, "MONOCHROME2", [9, 8, 7, 6],
        extra=[(0x0010, 0x0010, "PN", "Doe^Jo"), (0x0018, 0x5101, "CS", "PA"), (0x0020, 0x0013, "IS", "7")],
    )
    ref = element(0x0008, 0x1150, "UI", DX_PRESENTATION) + element(0x0008, 0x1155, "UI", "2.25.99")
    seq = struct.pack("<HHI", 0xFFFE, 0xE000, len(ref)) + ref
    valid_image("opaque_sequence", 2, 2, 16, "MONOCHROME1", [10, 20, 30, 40], extra=[(0x0008, 0x1140, "SQ", seq)])

    # parse fine, extract_pixels refuses
    sop = "2.25.5001"
    valid("no_pixel_module", DX_PRESENTATION, sop, minimal_items(sop), {"error": "MissingPixelModule"})
    sop = "2.25.5002"
    sr_items = minimal_items(sop, BASIC_TEXT_SR) + [
        (0x0008, 0x0060, "CS", "SR"),
        (0x0040, 0xA040, "CS", "CONTAINER"),
        (0x0040, 0xA160, "UT", "COVID-19=0.9000"),
    ]
    valid("basic_text_sr", BASIC_TEXT_SR, sop, sr_items, {"error": "MissingPixelModule"})
    sop = "2.25.5003"
    items = [i for i in image_dataset(sop, 4, 4, 8, "MONOCHROME2", list(range(16))) if (i[0], i[1]) != (0x0028, 0x0010)]
    valid("missing_rows", DX_PRESENTATION, sop, items, {"error": "MissingPixelModule"})
    sop = "2.25.5004"
    items = image_dataset(sop, 4, 4, 8, "MONOCHROME2", list(range(14)))
    valid("pixel_length_mismatch", DX_PRESENTATION, sop, items, {"error": "PixelLengthMismatch"})
    sop = "2.25.5005"
    items = [
        (g, e, vr, us(3) if (g, e) == (0x0028, 0x0002) else v)
        for g, e, vr, v in image_dataset(sop, 2, 2, 8, "MONOCHROME2", [1, 2, 3, 4])
    ]
    valid("three_samples_per_pixel", DX_PRESENTATION, sop, items, {"error": "UnsupportedPixelEncoding"})
    sop = "2.25.5006"
    items = image_dataset(sop, 2, 2, 8, "RGB", [1, 2, 3, 4])
    valid("rgb_photometric", DX_PRESENTATION, sop, items, {"error": "UnsupportedPixelEncoding"})

    # parser errors
    good_sop = "2.25.6000"
    meta_items, good_meta = meta(DX_PRESENTATION, good_sop)
    good_items = image_dataset(good_sop, 4, 4, 8, "MONOCHROME2", list(range(16)))
    good = assemble(good_meta, good_items)

    error("err_131_zero_bytes", b"\x00" * 131, "MissingMagic")
    error("err_bad_magic", b"\x00" * 128 + b"DICX" + good[132:], "MissingMagic")
    _, jpeg_meta = meta(DX_PRESENTATION, good_sop, ts=JPEG_BASELINE)
    error("err_jpeg_transfer_syntax", assemble(jpeg_meta, good_items), "UnsupportedTransferSyntax")
    _, no_ts = meta(DX_PRESENTATION, good_sop, include_ts=False)
    error("err_missing_transfer_syntax", assemble(no_ts, good_items), "MissingMeta")
    error("err_truncated_pixel_data", good[:-5], "TruncatedElement")
    error("err_truncated_header", good[:-22], "TruncatedElement")
    error(
        "err_odd_length",
        assemble(good_meta, []) + element(0x0008, 0x0016, "UI", b"1.2.3") + element(0x0008, 0x0018, "UI", good_sop),
        "OddLength",
    )
    error(
        "err_unknown_vr",
        assemble(good_meta, minimal_items(good_sop)) + element(0x0010, 0x0010, "XX", b"ab"),
        "UnsupportedVr",
    )
    error(
        "err_undefined_length_sequence",
        assemble(good_meta, minimal_items(good_sop)) + element(0x0040, 0xA730, "SQ", b"", length=0xFFFFFFFF),
        "UndefinedLength",
    )
    error(
        "err_out_of_order",
        assemble(good_meta, [(0x0008, 0x0018, "UI", good_sop), (0x0008, 0x0016, "UI", DX_PRESENTATION)]),
        "OutOfOrder",
    )
    error(
        "err_missing_sop_instance",
        assemble(good_meta, [(0x0008, 0x0016, "UI", DX_PRESENTATION), (0x0008, 0x0060, "CS", "DX")]),
        "InvariantViolation",
    )
    error(
        "err_meta_group_in_dataset",
        assemble(good_meta, minimal_items(good_sop)) + element(0x0002, 0x0013, "SH", "LATE"),
        "InvariantViolation",
    )


if __name__ == "__main__":
    main()
