"""
Tests para remuestreo, recorte, escalado y extracción de parches.
"""

from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from lesion.exceptions import DegenerateRangeError, SamplingError, ShapeError, ValidationError
from lesion.io import SeededRng, Tensor, Volume3D, Volume4D
from lesion.phantom import LesionEllipsoid, PhantomConfig, synth_case
from lesion.preprocessing import (
    PreprocConfig,
    PreprocessedCase,
    brain_mask,
    clip_map,
    extract_patches,
    preprocess_case,
    resize_trilinear,
    scale_linear,
    stack_patches,
)
from lesion.temporal import extract_window

PHANTOM = PhantomConfig(
    dims=(30, 4, 16, 16),
    t0=4.0,
    lesions=(
        LesionEllipsoid(center=(1.5, 8.0, 8.0), radii=(1.5, 2.5, 2.5), attenuation=0.05),
        LesionEllipsoid(center=(1.5, 8.0, 8.0), radii=(1.5, 4.0, 4.0), attenuation=0.5, delay=1.0),
    ),
    noise=1.0,
    seed=2,
)
CONFIG = PreprocConfig(target_dims=(4, 16, 16), patch_size=8, patches_per_case=12)


def prepared_case(config: PreprocConfig = CONFIG):
    bundle = synth_case(PHANTOM, 'case_p').bundle
    window = extract_window(bundle.pwi, 11, config.window_length)
    return bundle, preprocess_case(bundle, window.data, config, window.sidecar())


class IntensityTests(SimpleTestCase):

    def test_clip(self):
        volume = Volume3D(Tensor(np.array([[[-5.0, 3.0, 40.0]]], dtype=np.float32)))
        assert_array_equal(clip_map(volume, 0.0, 20.0).array, [[[0.0, 3.0, 20.0]]])

    def test_empty_clip_range(self):
        volume = Volume3D(Tensor(np.zeros((1, 1, 2), dtype=np.float32)))
        with self.assertRaises(ValidationError):
            clip_map(volume, 1.0, 1.0)

    def test_scale_inside_mask(self):
        volume = Volume3D(Tensor(np.array([[[2.0, 4.0, 6.0, 100.0]]], dtype=np.float32)))
        mask = np.array([[[True, True, True, False]]])
        assert_allclose(scale_linear(volume, mask).array, [[[0.0, 127.5, 255.0, 0.0]]])

    def test_scale_4d_uses_joint_range(self):
        values = np.stack([np.zeros((1, 1, 2)), np.full((1, 1, 2), 10.0)]).astype(np.float32)
        scaled = scale_linear(Volume4D(Tensor(values), (1, 1, 1), 1.0))
        assert_allclose(scaled.array[0], 0.0)
        assert_allclose(scaled.array[1], 255.0)

    def test_constant_volume(self):
        volume = Volume3D(Tensor(np.full((2, 2, 2), 7.0, dtype=np.float32)))
        with self.assertRaises(DegenerateRangeError):
            scale_linear(volume)


class ResampleTests(SimpleTestCase):

    def test_identity(self):
        array = SeededRng(0).normal(size=(3, 5, 4)).astype(np.float32)
        resized = resize_trilinear(Volume3D(Tensor(array), (2.0, 1.0, 1.0)), (3, 5, 4))
        assert_allclose(resized.array, array, atol=1e-6)
        self.assertEqual(resized.spacing, (2.0, 1.0, 1.0))

    def test_corners_are_preserved(self):
        array = np.arange(2 * 16 * 16, dtype=np.float32).reshape(2, 16, 16)
        resized = resize_trilinear(Volume3D(Tensor(array)), (3, 8, 8))
        self.assertEqual(resized.dims, (3, 8, 8))
        self.assertAlmostEqual(float(resized.array[0, 0, 0]), float(array[0, 0, 0]), places=4)
        self.assertAlmostEqual(float(resized.array[-1, -1, -1]), float(array[-1, -1, -1]), places=3)
        self.assertEqual(resized.spacing, (2.0 / 3.0, 2.0, 2.0))

    def test_linear_field_is_exact(self):
        zz, yy, xx = np.meshgrid(np.arange(4), np.arange(6), np.arange(6), indexing='ij')
        field = (zz + 2 * yy - xx).astype(np.float64)
        resized = resize_trilinear(Volume3D(Tensor(field)), (7, 11, 11))
        positions = [np.linspace(0, n - 1, m) for n, m in ((4, 7), (6, 11), (6, 11))]
        z, y, x = np.meshgrid(*positions, indexing='ij')
        assert_allclose(resized.array, z + 2 * y - x, atol=1e-9)

    def test_4d_keeps_time_axis(self):
        volume = Volume4D(Tensor(np.ones((3, 2, 4, 4), dtype=np.float32)), (1, 1, 1), 1.5)
        resized = resize_trilinear(volume, (4, 8, 8))
        self.assertEqual(resized.dims, (3, 4, 8, 8))
        self.assertEqual(resized.dt, 1.5)

    def test_bad_target(self):
        with self.assertRaises(ValidationError):
            resize_trilinear(Volume3D(Tensor(np.ones((2, 2, 2)))), (2, 0, 2))


class PreprocessCaseTests(SimpleTestCase):
    """Pruebas de la cadena completa de preprocesado de un caso."""

    def setUp(self):
        self.bundle, self.case = prepared_case()

    def test_channels_layout(self):
        self.assertEqual(self.case.channels.shape, (32, 4, 16, 16))
        self.assertEqual(self.case.channel_names[0], 'pwi_00')
        self.assertEqual(self.case.channel_names[-6:], ('rCBF', 'rCBV', 'MTT', 'TTP', 'Tmax', 'ADC'))
        self.assertEqual(self.case.pwi_channels.shape[0], 26)
        self.assertEqual(self.case.map_channels.shape[0], 6)
        self.assertEqual(self.case.window, {'peak_index': 11, 'start': 0, 'length': 26})

    def test_scaled_range(self):
        channels = self.case.channels
        self.assertGreaterEqual(channels.min(), 0.0)
        self.assertLessEqual(channels.max(), 255.0 + 1e-3)
        assert_array_equal(channels[:, ~self.case.brain], 0.0)
        self.assertAlmostEqual(float(channels[:26][:, self.case.brain].max()), 255.0, places=3)

    def test_ground_truth_inside_brain(self):
        self.assertTrue(self.case.gt.any())
        self.assertFalse(np.any(self.case.gt & ~self.case.brain))

    def test_resampled_metadata(self):
        config = replace(CONFIG, target_dims=(2, 8, 8), patch_size=4)
        _, case = prepared_case(config)
        self.assertEqual(case.channels.shape, (32, 2, 8, 8))
        self.assertEqual(case.spacing, (2.0, 2.0, 2.0))
        self.assertEqual(case.original_dims, (4, 16, 16))
        self.assertEqual(case.original_spacing, (1.0, 1.0, 1.0))

    def test_window_length_mismatch(self):
        window = extract_window(self.bundle.pwi, 11, 20)
        with self.assertRaises(ShapeError):
            preprocess_case(self.bundle, window.data, CONFIG)

    def test_invalid_config(self):
        with self.assertRaises(ValidationError):
            replace(CONFIG, patch_size=17).validate()

    def test_brain_mask_from_adc(self):
        mask = brain_mask(self.bundle).array > 0
        assert_array_equal(mask, self.bundle.maps['ADC'].array > 0)


class PatchTests(SimpleTestCase):

    def setUp(self):
        _, self.case = prepared_case()

    def test_patch_shapes_and_centres(self):
        patches = extract_patches(self.case, CONFIG, SeededRng(4))
        self.assertEqual(len(patches), 12)
        for patch in patches:
            self.assertEqual(patch.channels.shape, (32, 8, 8))
            self.assertEqual(patch.gt.shape, (8, 8))
            y0, x0 = patch.origin
            self.assertTrue(self.case.brain[patch.z, y0 + 4, x0 + 4])
            assert_array_equal(patch.channels, self.case.channels[:, patch.z, y0:y0 + 8, x0:x0 + 8])

    def test_deterministic(self):
        first = extract_patches(self.case, CONFIG, SeededRng(4))
        second = extract_patches(self.case, CONFIG, SeededRng(4))
        self.assertEqual([p.index_entry() for p in first], [p.index_entry() for p in second])

    def test_prefix_is_stable(self):
        """Test el parche i solo depende de su sub-flujo"""
        few = extract_patches(self.case, replace(CONFIG, patches_per_case=3), SeededRng(4))
        many = extract_patches(self.case, CONFIG, SeededRng(4))
        self.assertEqual([p.index_entry() for p in few], [p.index_entry() for p in many[:3]])

    def test_lesion_biased_sampling(self):
        config = replace(CONFIG, lesion_biased=True, lesion_fraction=1.0)
        for patch in extract_patches(self.case, config, SeededRng(5)):
            y0, x0 = patch.origin
            self.assertTrue(self.case.gt[patch.z, y0 + 4, x0 + 4])

    def test_slices_are_drawn_uniformly(self):
        """Test cada corte con cerebro recibe la misma proporción de parches, sea cual sea su área"""
        brain = np.zeros((2, 16, 16), dtype=bool)
        brain[0] = True
        brain[1, 8, 8] = True
        case = PreprocessedCase(
            case_id='uneven',
            channels=np.zeros((2, 2, 16, 16), dtype=np.float32),
            channel_names=('a', 'b'),
            brain=brain,
            gt=brain.copy(),
            spacing=(1.0, 1.0, 1.0),
            original_dims=(2, 16, 16),
            original_spacing=(1.0, 1.0, 1.0),
        )
        for biased in (False, True):
            with self.subTest(lesion_biased=biased):
                config = PreprocConfig(target_dims=(2, 16, 16), patch_size=4, patches_per_case=2000,
                                       lesion_biased=biased, lesion_fraction=1.0)
                patches = extract_patches(case, config, SeededRng(6))
                fraction = np.mean([p.z == 1 for p in patches])
                self.assertGreater(fraction, 0.44)
                self.assertLess(fraction, 0.56)
                for patch in patches:
                    if patch.z == 1:
                        self.assertEqual(patch.origin, (6, 6))

    def test_stack(self):
        channels, gt = stack_patches(extract_patches(self.case, CONFIG, SeededRng(4)))
        self.assertEqual(channels.shape, (12, 32, 8, 8))
        self.assertEqual(gt.shape, (12, 1, 8, 8))
        self.assertEqual(channels.dtype, np.float32)

    def test_patch_too_large(self):
        with self.assertRaises(SamplingError):
            extract_patches(self.case, replace(CONFIG, patch_size=17), SeededRng(0))

    def test_empty_stack(self):
        with self.assertRaises(SamplingError):
            stack_patches([])
