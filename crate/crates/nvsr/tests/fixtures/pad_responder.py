"""Answers one exchange request with replication padding above a fixed band.

usage: pad_responder.py EXCHANGE_DIR CUTOFF_BAND
"""
import os
import struct
import sys
import time

HEADER = struct.Struct("<4sIIIIIIB")


def main():
    directory, band = sys.argv[1], int(sys.argv[2])
    request = os.path.join(directory, "request.melf")
    deadline = time.time() + 60
    while not os.path.exists(request):
        if time.time() > deadline:
            sys.exit("no request")
        time.sleep(0.005)
    with open(request, "rb") as fh:
        raw = fh.read()
    os.remove(request)
    magic, version, frames, bands, rate, window, hop, scale = HEADER.unpack_from(raw)
    assert magic == b"MELF" and version == 1
    values = struct.unpack_from("<%df" % (frames * bands), raw, HEADER.size)
    out = []
    for t in range(frames):
        row = values[t * bands:(t + 1) * bands]
        out.extend(row[f] if f <= band else row[band] for f in range(bands))
    body = HEADER.pack(magic, version, frames, bands, rate, window, hop, scale)
    body += struct.pack("<%df" % len(out), *out)
    partial = os.path.join(directory, ".response.partial")
    with open(partial, "wb") as fh:
        fh.write(body)
    os.replace(partial, os.path.join(directory, "response.melf"))


if __name__ == "__main__":
    main()
