"""
Tests para tensores, formato crudo, NIfTI-1, RNG y directorios de caso.
"""

import gzip
import struct
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from lesion.exceptions import FormatError, RankError, ShapeError, UnsupportedError, ValidationError
from lesion.io import (
    MAP_NAMES,
    CaseBundle,
    SeededRng,
    Tensor,
    Volume3D,
    Volume4D,
    parse_nifti,
    read_raw,
    rng_split,
    serialize_nifti,
    write_raw,
)
from lesion.io.case_store import is_case_dir, list_case_dirs, read_case_dir, write_case_dir
from lesion.io.rng import derive_seed


def nifti_fixture(values: np.ndarray, code: int, pixdim=(1.0, 1.0, 1.0, 1.0, 1.0), slope=0.0, inter=0.0,
                  units=2 | 8, order='<') -> bytes:
    """Cabecera NIfTI-1 construida a mano; ``values`` en orden (T,) Z, Y, X."""
    header = bytearray(348)
    struct.pack_into(f'{order}i', header, 0, 348)
    dims = list(values.shape[::-1])
    struct.pack_into(f'{order}8h', header, 40, len(dims), *(dims + [1] * (7 - len(dims))))
    struct.pack_into(f'{order}h', header, 70, code)
    struct.pack_into(f'{order}8f', header, 76, *(list(pixdim) + [0.0] * (8 - len(pixdim))))
    struct.pack_into(f'{order}f', header, 108, 352.0)
    struct.pack_into(f'{order}2f', header, 112, slope, inter)
    header[123] = units
    header[344:348] = b'n+1\x00'
    return bytes(header) + b'\x00' * 4 + values.astype(values.dtype.newbyteorder(order)).tobytes()


class TensorTests(SimpleTestCase):
    """Pruebas de los contenedores de datos."""

    def test_rank_limits(self):
        """Test rangos admitidos entre 1 y 5"""
        Tensor(np.zeros((1, 1, 1, 1, 1)))
        with self.assertRaises(RankError):
            Tensor(np.zeros((1, 1, 1, 1, 1, 1)))
        with self.assertRaises(RankError):
            Tensor(np.float32(1.0))

    def test_zero_extent_rejected(self):
        with self.assertRaises(ShapeError):
            Tensor(np.zeros((2, 0, 3)))

    def test_flat_index_row_major(self):
        """Test el último eje varía más rápido"""
        tensor = Tensor(np.zeros((2, 3, 4)))
        self.assertEqual(tensor.flat_index(0, 0, 1), 1)
        self.assertEqual(tensor.flat_index(0, 1, 0), 4)
        self.assertEqual(tensor.flat_index(1, 0, 0), 12)

    def test_tensor_is_read_only(self):
        tensor = Tensor(np.zeros((2, 2), dtype=np.float32))
        with self.assertRaises(ValueError):
            tensor.data[0, 0] = 1.0

    def test_volume4d_requires_two_acquisitions(self):
        with self.assertRaises(RankError):
            Volume4D(Tensor(np.zeros((1, 2, 2, 2))), (1, 1, 1), 1.0)

    def test_bad_spacing(self):
        with self.assertRaises(ValidationError):
            Volume3D(Tensor(np.zeros((2, 2, 2))), (1.0, 0.0, 1.0))


class RawFormatTests(SimpleTestCase):
    """Pruebas del formato crudo .pwt"""

    def test_single_voxel_size(self):
        """Test 16 bytes de preámbulo + 3 extensiones + espaciado + dt + 1 escalar"""
        blob = write_raw(Volume3D(Tensor(np.ones((1, 1, 1), dtype=np.float32)), (1.0, 1.0, 1.0)))
        self.assertEqual(len(blob), 76)

    def test_round_trip_is_bitwise(self):
        rng = np.random.default_rng(3)
        volume = Volume4D(Tensor(rng.normal(size=(3, 2, 4, 5))), (1.5, 0.9, 0.9), 1.6)
        decoded = read_raw(write_raw(volume))
        self.assertIsInstance(decoded, Volume4D)
        self.assertEqual(decoded.tensor, volume.tensor)
        self.assertEqual(decoded.spacing, volume.spacing)
        self.assertEqual(decoded.dt, volume.dt)
        self.assertEqual(write_raw(decoded), write_raw(volume))

    def test_plain_tensor_round_trip(self):
        tensor = Tensor(np.arange(24, dtype=np.float32).reshape(2, 3, 4))
        decoded = read_raw(write_raw(tensor))
        self.assertIsInstance(decoded, Tensor)
        self.assertEqual(decoded, tensor)

    def test_bad_magic(self):
        blob = bytearray(write_raw(Tensor(np.zeros(3, dtype=np.float32))))
        blob[:4] = b'XXXX'
        with self.assertRaises(FormatError):
            read_raw(bytes(blob))

    def test_truncated_payload(self):
        blob = write_raw(Tensor(np.zeros((4, 4), dtype=np.float64)))
        with self.assertRaises(FormatError):
            read_raw(blob[:-3])

    def test_trailing_bytes_rejected(self):
        blob = write_raw(Tensor(np.zeros((4,), dtype=np.float32)))
        with self.assertRaises(FormatError):
            read_raw(blob + b'\x00')


class NiftiTests(SimpleTestCase):
    """Pruebas del lector NIfTI-1 con cabeceras construidas a mano."""

    def test_each_datatype(self):
        values = np.arange(24).reshape(2, 3, 4)
        for code, dtype in ((2, np.uint8), (4, np.int16), (8, np.int32), (16, np.float32), (64, np.float64)):
            with self.subTest(code=code):
                volume = parse_nifti(nifti_fixture(values.astype(dtype), code, pixdim=(1.0, 0.5, 0.7, 2.0)))
                self.assertIsInstance(volume, Volume3D)
                self.assertEqual(volume.dims, (2, 3, 4))
                self.assertEqual(volume.spacing, (2.0, float(np.float32(0.7)), 0.5))
                assert_array_equal(volume.array, values.astype(np.float32))

    def test_scaling(self):
        """Test valor = almacenado · scl_slope + scl_inter"""
        values = np.array([[[0, 1], [2, 3]]], dtype=np.int16)
        volume = parse_nifti(nifti_fixture(values, 4, slope=2.0, inter=-1.0))
        assert_array_equal(volume.array, values * 2.0 - 1.0)

    def test_zero_slope_means_identity(self):
        values = np.array([[[5, 7]]], dtype=np.int16)
        assert_array_equal(parse_nifti(nifti_fixture(values, 4, slope=0.0, inter=3.0)).array, [[[5, 7]]])

    def test_4d_with_time_in_ms(self):
        values = np.zeros((3, 2, 2, 2), dtype=np.float32)
        values[1] = 1.0
        volume = parse_nifti(nifti_fixture(values, 16, pixdim=(1.0, 1.0, 1.0, 1.0, 1500.0), units=2 | 16))
        self.assertIsInstance(volume, Volume4D)
        self.assertEqual(volume.dims, (3, 2, 2, 2))
        self.assertAlmostEqual(volume.dt, 1.5)
        assert_array_equal(volume.array[1], np.ones((2, 2, 2)))

    def test_big_endian_and_gzip(self):
        values = np.arange(8, dtype=np.int32).reshape(2, 2, 2)
        blob = gzip.compress(nifti_fixture(values, 8, order='>'))
        assert_array_equal(parse_nifti(blob).array, values)

    def test_unsupported_datatype(self):
        blob = bytearray(nifti_fixture(np.zeros((1, 1, 2), dtype=np.float32), 16))
        struct.pack_into('<h', blob, 70, 32)  # complex64
        with self.assertRaises(UnsupportedError):
            parse_nifti(bytes(blob))

    def test_bad_magic_and_rank(self):
        blob = bytearray(nifti_fixture(np.zeros((1, 1, 2), dtype=np.float32), 16))
        bad_magic = bytearray(blob)
        bad_magic[344:348] = b'abcd'
        with self.assertRaises(FormatError):
            parse_nifti(bytes(bad_magic))
        struct.pack_into('<h', blob, 40, 2)
        with self.assertRaises(RankError):
            parse_nifti(bytes(blob))

    def test_truncated_payload(self):
        blob = nifti_fixture(np.zeros((2, 2, 2), dtype=np.float32), 16)
        with self.assertRaises(FormatError):
            parse_nifti(blob[:-4])

    def test_serializer_header_is_reparsed(self):
        volume = Volume4D(Tensor(np.linspace(0, 10, 24, dtype=np.float32).reshape(2, 1, 3, 4)), (2.0, 1.0, 0.5), 1.25)
        parsed = parse_nifti(serialize_nifti(volume))
        self.assertEqual(parsed.dims, volume.dims)
        self.assertEqual(parsed.spacing, volume.spacing)
        self.assertEqual(parsed.dt, volume.dt)
        assert_array_equal(parsed.array, volume.array)

    def test_serializer_with_slope(self):
        volume = Volume3D(Tensor(np.array([[[1.0, 3.0, 5.0]]], dtype=np.float32)))
        parsed = parse_nifti(serialize_nifti(volume, 'int16', scl_slope=2.0, scl_inter=1.0))
        assert_allclose(parsed.array, volume.array)


class RngTests(SimpleTestCase):

    def test_same_seed_same_stream(self):
        assert_array_equal(SeededRng(7).uniform(size=5), SeededRng(7).uniform(size=5))

    def test_split_depends_only_on_seed_and_label(self):
        """Test consumir el flujo padre no altera los hijos"""
        parent = SeededRng(11)
        before = rng_split(parent, 'patch_0').normal(size=3)
        parent.uniform(size=100)
        after = rng_split(parent, 'patch_0').normal(size=3)
        assert_array_equal(before, after)
        self.assertNotEqual(derive_seed(11, 'a'), derive_seed(11, 'b'))

    def test_derive_seed_is_64_bit(self):
        self.assertLess(derive_seed(0, 'x'), 2 ** 64)


class CaseStoreTests(SimpleTestCase):
    """Pruebas de lectura y escritura de directorios de caso."""

    def setUp(self):
        rng = np.random.default_rng(0)
        spacing = (2.0, 1.0, 1.0)
        maps = {name: Volume3D(Tensor(rng.uniform(size=(2, 3, 3)).astype(np.float32)), spacing)
                for name in MAP_NAMES}
        self.bundle = CaseBundle(
            case_id='case_007',
            pwi=Volume4D(Tensor(rng.uniform(size=(4, 2, 3, 3)).astype(np.float32)), spacing, 1.0),
            maps=maps,
            lesion_gt=Volume3D(Tensor((rng.uniform(size=(2, 3, 3)) > 0.5).astype(np.float32)), spacing),
        )

    def test_round_trip_raw_and_nifti(self):
        for nifti in (False, True):
            with self.subTest(nifti=nifti), tempfile.TemporaryDirectory() as tmp:
                case_dir = write_case_dir(Path(tmp) / 'case_007', self.bundle, {'seed': 3}, nifti=nifti)
                self.assertTrue(is_case_dir(case_dir))
                bundle, meta = read_case_dir(case_dir)
                self.assertEqual(bundle.case_id, 'case_007')
                self.assertEqual(meta['seed'], 3)
                assert_array_equal(bundle.pwi.array, self.bundle.pwi.array)
                assert_array_equal(bundle.maps['Tmax'].array, self.bundle.maps['Tmax'].array)
                assert_array_equal(bundle.lesion_gt.array, self.bundle.lesion_gt.array)
                self.assertEqual(list_case_dirs(tmp), [case_dir])

    def test_missing_map_bundle(self):
        with self.assertRaises(ValidationError):
            CaseBundle(case_id='x', pwi=self.bundle.pwi, maps={'ADC': self.bundle.maps['ADC']})

    def test_mismatched_map_dims(self):
        maps = dict(self.bundle.maps)
        maps['ADC'] = Volume3D(Tensor(np.zeros((2, 3, 4), dtype=np.float32)), (2.0, 1.0, 1.0))
        with self.assertRaises(ShapeError):
            CaseBundle(case_id='x', pwi=self.bundle.pwi, maps=maps)
