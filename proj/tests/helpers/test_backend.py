#!/usr/bin/env python3
"""Scriptable stand-in for an external segmentation process.

Speaks the line-delimited JSON protocol on stdin/stdout. The first argument
selects the behavior:
    zeros     reply with an all-zero label map and no segments
    blob      reply with one rectangular segment (id 1, class 10)
    silent    never reply
    mismatch  reply for the wrong frame index
    garbage   reply with something that is not JSON
    halfsize  reply with a label map at half the requested resolution
"""
import json
import struct
import sys
import tempfile


def write_pgm16(path, width, height, value_at):
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n65535\n" % (width, height))
        row = bytearray()
        for y in range(height):
            for x in range(width):
                row += struct.pack(">H", value_at(x, y))
        f.write(bytes(row))


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "zeros"
    for line in sys.stdin:
        req = json.loads(line)
        if mode == "silent":
            continue
        w, h = req["width"], req["height"]
        segments = []
        if mode == "halfsize":
            w, h = max(1, w // 2), max(1, h // 2)

        if mode in ("blob", "halfsize"):
            def value_at(x, y):
                return 1 if (w // 4 <= x < w // 2 and h // 4 <= y < h // 2) else 0
            segments = [{"id": 1, "class_id": 10, "score": 0.9}]
        else:
            def value_at(x, y):
                return 0

        out = tempfile.NamedTemporaryFile(suffix=".pgm", delete=False)
        out.close()
        write_pgm16(out.name, w, h, value_at)

        frame_index = req["frame_index"] + (1 if mode == "mismatch" else 0)
        if mode == "garbage":
            sys.stdout.write("this is not json\n")
        else:
            sys.stdout.write(json.dumps({
                "frame_index": frame_index,
                "label_map_path": out.name,
                "segments": segments,
            }) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
