import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmledger.encoding import DecodeError, Reader, Writer


def test_integers_are_big_endian_fixed_width():
    assert Writer().u32(1).getvalue() == b"\x00\x00\x00\x01"
    assert Writer().u64(258).getvalue() == b"\x00" * 6 + b"\x01\x02"


def test_blob_is_length_prefixed():
    assert Writer().blob(b"ab").getvalue() == b"\x00\x00\x00\x02ab"


@given(st.integers(0, 2**32 - 1), st.integers(0, 2**64 - 1), st.binary(max_size=64), st.text(max_size=20))
def test_roundtrip(a, b, blob, text):
    data = Writer().u32(a).u64(b).blob(blob).text(text).getvalue()
    r = Reader(data)
    assert (r.u32(), r.u64(), r.blob(), r.text()) == (a, b, blob, text)
    r.done()


def test_truncated_input_raises():
    data = Writer().blob(b"hello").getvalue()
    with pytest.raises(DecodeError):
        Reader(data[:-1]).blob()


def test_trailing_bytes_rejected():
    r = Reader(b"\x00\x00\x00\x01\xff")
    r.u32()
    with pytest.raises(DecodeError):
        r.done()


def test_out_of_range_rejected():
    with pytest.raises((ValueError, OverflowError)):
        Writer().u32(2**32)
