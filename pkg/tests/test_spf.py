import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lpmhd.grid import Grid, SpectralField, VectorField, random_divfree_field, random_field
from lpmhd.spf import SPFError, decode, encode, read_field, write_field


def _header(d=2, N=8, B=1, count=64, magic=b"SPF1"):
    return struct.pack("<4sIIIQ", magic, d, N, B, count)


class TestRoundTrip:
    @given(st.integers(0, 10_000), st.sampled_from([(2, 8, 1), (2, 16, 2), (3, 8, 1)]))
    def test_bitwise(self, seed, dims):
        g = Grid(*dims)
        c = random_field(g, 0.5, seed).coeffs
        g2, back = decode(encode(g, c))
        assert g2 == g and np.array_equal(back, c)

    def test_vector_file(self, tmp_path, grid32):
        f = random_divfree_field(grid32, 1.0, 3)
        write_field(tmp_path / "u.spf", f)
        back = read_field(tmp_path / "u.spf")
        assert isinstance(back, VectorField) and np.array_equal(back.coeffs, f.coeffs)

    def test_scalar_file(self, tmp_path, grid32):
        f = random_field(grid32, 1.0, 3)
        write_field(tmp_path / "f.spf", f)
        assert isinstance(read_field(tmp_path / "f.spf"), SpectralField)
        with pytest.raises(SPFError, match="components"):
            read_field(tmp_path / "f.spf", vector=True)

    def test_header_layout(self, grid32):
        data = encode(grid32, np.zeros(grid32.shape, dtype=complex))
        assert data[:4] == b"SPF1"
        assert struct.unpack_from("<IIIQ", data, 4) == (2, 32, 1, 32 * 32)
        assert len(data) == 24 + 16 * 32 * 32

    def test_shape_mismatch(self, grid32):
        with pytest.raises(ValueError):
            encode(grid32, np.zeros((16, 16)))

    def test_no_temporary_left_behind(self, tmp_path, grid32):
        write_field(tmp_path / "f.spf", random_field(grid32, 1.0, 0))
        assert [p.name for p in tmp_path.iterdir()] == ["f.spf"]


class TestMalformed:
    def test_bad_magic(self):
        with pytest.raises(SPFError) as exc:
            decode(_header(magic=b"SPF2") + bytes(16 * 64))
        assert exc.value.offset == 0

    def test_truncated_header(self):
        with pytest.raises(SPFError) as exc:
            decode(_header()[:10])
        assert exc.value.offset == 10

    def test_invalid_grid(self):
        with pytest.raises(SPFError) as exc:
            decode(_header(N=12, count=144) + bytes(16 * 144))
        assert exc.value.offset == 4

    @pytest.mark.parametrize("count", [0, 65])
    def test_bad_count(self, count):
        with pytest.raises(SPFError) as exc:
            decode(_header(count=count) + bytes(16 * count))
        assert exc.value.offset == 16

    def test_truncated_payload(self):
        data = _header() + bytes(16 * 63)
        with pytest.raises(SPFError, match="truncated") as exc:
            decode(data)
        assert exc.value.offset == len(data)

    def test_trailing_bytes(self):
        with pytest.raises(SPFError, match="trailing") as exc:
            decode(_header() + bytes(16 * 64 + 3))
        assert exc.value.offset == 24 + 16 * 64

    def test_non_finite(self):
        vals = np.zeros(64, dtype="<c16")
        vals[5] = complex(0.0, np.inf)
        with pytest.raises(SPFError, match="non-finite") as exc:
            decode(_header() + vals.tobytes())
        assert exc.value.offset == 24 + 16 * 5

    def test_message_names_offset(self):
        with pytest.raises(SPFError, match="byte offset 0"):
            decode(b"nope")
