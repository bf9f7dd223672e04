"""Canonical byte encoding.

Integers are big-endian and fixed width, variable-length fields carry a
4-byte length prefix, lists carry a 4-byte element count. Every digest in
the package is computed over bytes produced here, so the layout is part of
the on-disk contract.
"""


class DecodeError(ValueError):
    pass


def _uint(value: int, width: int) -> bytes:
    if not 0 <= value < 1 << (8 * width):
        raise ValueError(f"{value} does not fit in {width} unsigned bytes")
    return value.to_bytes(width, "big")


class Writer:
    def __init__(self):
        self._parts = []

    def u8(self, value: int) -> "Writer":
        self._parts.append(_uint(value, 1))
        return self

    def u32(self, value: int) -> "Writer":
        self._parts.append(_uint(value, 4))
        return self

    def u64(self, value: int) -> "Writer":
        self._parts.append(_uint(value, 8))
        return self

    def fixed(self, data: bytes, width: int) -> "Writer":
        if len(data) != width:
            raise ValueError(f"expected {width} bytes, got {len(data)}")
        self._parts.append(bytes(data))
        return self

    def blob(self, data: bytes) -> "Writer":
        self.u32(len(data))
        self._parts.append(bytes(data))
        return self

    def text(self, value: str) -> "Writer":
        return self.blob(value.encode("utf-8"))

    def count(self, n: int) -> "Writer":
        return self.u32(n)

    def raw(self, data: bytes) -> "Writer":
        self._parts.append(bytes(data))
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    """Strict cursor over canonical bytes; any overrun raises DecodeError."""

    def __init__(self, data: bytes):
        self._data = memoryview(bytes(data))
        self._pos = 0

    def _take(self, n: int) -> bytes:
        end = self._pos + n
        if n < 0 or end > len(self._data):
            raise DecodeError(f"truncated input at offset {self._pos}")
        out = self._data[self._pos:end].tobytes()
        self._pos = end
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return int.from_bytes(self._take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self._take(8), "big")

    def fixed(self, width: int) -> bytes:
        return self._take(width)

    def blob(self, limit: int | None = None) -> bytes:
        n = self.u32()
        if limit is not None and n > limit:
            raise DecodeError(f"field length {n} exceeds limit {limit}")
        return self._take(n)

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(str(exc)) from None

    def count(self) -> int:
        return self.u32()

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def done(self):
        if self.remaining:
            raise DecodeError(f"{self.remaining} trailing bytes")
