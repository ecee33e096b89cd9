"""Binary 8-bit PGM (P5) reading and writing."""
import numpy as np

from .errors import TvprError

_WS = b" \t\n\r\v\f"


class PGMError(TvprError, ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _token(data, pos):
    while pos < len(data):
        if data[pos] in _WS:
            pos += 1
        elif data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and data[pos] not in _WS and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PGMError("unexpected end of header", start)
    return data[start:pos], start, pos


def parse_pgm(data):
    """Decode P5 bytes into a float array in [0, 1] of shape ``(height, width)``."""
    magic, off, pos = _token(data, 0)
    if magic != b"P5":
        raise PGMError(f"bad magic {magic!r}, expected b'P5'", off)
    fields = []
    for name in ("width", "height", "maxval"):
        tok, off, pos = _token(data, pos)
        if not tok.isdigit() or int(tok) <= 0:
            raise PGMError(f"invalid {name} {tok!r}", off)
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval > 255:
        raise PGMError(f"only 8-bit PGM is supported, maxval={maxval}", off)
    if pos >= len(data) or data[pos] not in _WS:
        raise PGMError("missing whitespace after header", pos)
    pos += 1
    need = width * height
    if len(data) - pos < need:
        raise PGMError(f"truncated pixel data: need {need} bytes, have {len(data) - pos}", len(data))
    pixels = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    return pixels.reshape(height, width).astype(float) / maxval


def load_pgm(path):
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def encode_pgm(u):
    u = np.asarray(u)
    if not np.all(np.isfinite(u)):
        raise ValueError("cannot save a non-finite image")
    q = np.round(np.clip(np.real(u), 0.0, 1.0) * 255.0).astype(np.uint8)
    h, w = q.shape
    return b"P5\n%d %d\n255\n" % (w, h) + q.tobytes()


def save_pgm(u, path):
    """Write the real part of ``u``, clamped to [0, 1], as 8-bit PGM."""
    with open(path, "wb") as fh:
        fh.write(encode_pgm(u))
