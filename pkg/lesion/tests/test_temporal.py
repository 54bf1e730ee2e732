"""
Tests para la detección del pico de contraste y la ventana temporal.
"""

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from lesion.exceptions import DegenerateSignalError, InsufficientAcquisitionsError, MaskError, ValidationError
from lesion.io import SeededRng, Tensor, Volume4D
from lesion.phantom import PhantomConfig, synth_corpus
from lesion.temporal import WINDOW_LENGTH, SliceStats, detect_peak, extract_window, kmeans, slice_stats


def ramp_series(n_t: int) -> Volume4D:
    values = np.arange(n_t, dtype=np.float32)[:, None, None, None] * np.ones((1, 2, 3, 3), dtype=np.float32)
    return Volume4D(Tensor(values), (1.0, 1.0, 1.0), 1.0)


class KMeansTests(SimpleTestCase):

    def test_separated_groups(self):
        points = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [10.0, 10.0], [10.1, 10.0]])
        assignments, centroids = kmeans(points, 2, SeededRng(0))
        self.assertEqual(len(set(assignments[:3])), 1)
        self.assertEqual(len(set(assignments[3:])), 1)
        self.assertNotEqual(assignments[0], assignments[3])
        self.assertAlmostEqual(float(centroids[assignments[3]][0]), 10.05)

    def test_deterministic_for_seed(self):
        points = SeededRng(3).normal(size=(30, 2))
        first, _ = kmeans(points, 2, SeededRng(8))
        second, _ = kmeans(points, 2, SeededRng(8))
        assert_array_equal(first, second)

    def test_more_groups_than_points(self):
        with self.assertRaises(ValidationError):
            kmeans(np.zeros((1, 2)), 2, SeededRng(0))

    def test_single_group_centroid_is_mean(self):
        points = SeededRng(5).normal(size=(12, 2))
        assignments, centroids = kmeans(points, 1, SeededRng(0))
        assert_array_equal(assignments, np.zeros(12, dtype=int))
        assert_allclose(centroids[0], points.mean(axis=0))

    def test_four_corner_points(self):
        """Test cuatro puntos en dos columnas se agrupan por columna"""
        points = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
        for seed in range(5):
            with self.subTest(seed=seed):
                _, centroids = kmeans(points, 2, SeededRng(seed))
                self.assertEqual(sorted(map(tuple, centroids.round(12).tolist())), [(0.0, 0.5), (10.0, 0.5)])

    def test_zero_iterations(self):
        with self.assertRaises(ValidationError):
            kmeans(np.arange(6.0), 2, SeededRng(0), max_iter=0)
        with self.assertRaises(ValidationError):
            kmeans(np.arange(6.0), 2, SeededRng(0), n_init=0)

    def test_no_group_is_left_empty(self):
        """Test con puntos repetidos ningún grupo queda vacío ni con centroide indefinido"""
        points = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 5.0])
        for seed in range(30):
            with self.subTest(seed=seed):
                assignments, centroids = kmeans(points, 4, SeededRng(seed), max_iter=3)
                self.assertTrue(np.all(np.bincount(assignments, minlength=4) >= 1))
                self.assertTrue(np.all(np.isfinite(centroids)))


class PeakDetectionTests(SimpleTestCase):
    """Pico detectado frente al pico conocido de los fantomas."""

    def test_phantom_peaks_within_one_sample(self):
        """Test en 100 fantomas al menos 95 picos caen a una adquisición o menos del real"""
        base = PhantomConfig(dims=(40, 4, 16, 16))
        hits = 0
        for case in synth_corpus(100, 21, base):
            stats = slice_stats(case.bundle.pwi, case.brain_mask)
            hits += abs(detect_peak(stats, SeededRng(0)) - case.true_peak_index) <= 1
        self.assertGreaterEqual(hits, 95)

    def test_invariant_to_affine_rescaling(self):
        """Test el pico no cambia al reescalar la señal con a > 0 y desplazarla"""
        base = PhantomConfig(dims=(40, 4, 16, 16))
        for case in synth_corpus(5, 8, base):
            stats = slice_stats(case.bundle.pwi, case.brain_mask)
            peak = detect_peak(stats, SeededRng(2))
            for a, b in ((3.0, 50.0), (0.25, -7.0)):
                with self.subTest(case=case.bundle.case_id, a=a, b=b):
                    scaled = SliceStats(mean=a * stats.mean + b, std=a * stats.std)
                    self.assertEqual(detect_peak(scaled, SeededRng(2)), peak)

    def test_tie_resolves_to_earliest(self):
        mean = np.array([10.0, 10.0, 2.0, 2.0, 10.0, 10.0])
        stats = SliceStats(mean=mean, std=np.zeros(6))
        self.assertEqual(detect_peak(stats, SeededRng(1)), 2)

    def test_flat_signal(self):
        stats = SliceStats(mean=np.full(8, 5.0), std=np.ones(8))
        with self.assertRaises(DegenerateSignalError):
            detect_peak(stats, SeededRng(0))

    def test_too_few_acquisitions(self):
        stats = SliceStats(mean=np.array([3.0, 1.0, 2.0]), std=np.zeros(3))
        with self.assertRaises(ValidationError):
            detect_peak(stats, SeededRng(0))

    def test_empty_brain_mask(self):
        with self.assertRaises(MaskError):
            slice_stats(ramp_series(5), np.zeros((2, 3, 3)))


class ExtractWindowTests(SimpleTestCase):

    def setUp(self):
        self.pwi = ramp_series(40)

    def test_window_contains_peak(self):
        for peak in (0, 5, 13, 20, 30, 39):
            with self.subTest(peak=peak):
                window = extract_window(self.pwi, peak)
                self.assertEqual(window.data.dims, (WINDOW_LENGTH, 2, 3, 3))
                self.assertLessEqual(window.start, peak)
                self.assertLess(peak, window.start + WINDOW_LENGTH)
                self.assertEqual(float(window.data.array[0, 0, 0, 0]), float(window.start))

    def test_window_contains_peak_for_any_length(self):
        rng = SeededRng(9)
        for _ in range(25):
            n_t = int(rng.integers(WINDOW_LENGTH, 80))
            peak = int(rng.integers(0, n_t))
            with self.subTest(n_t=n_t, peak=peak):
                window = extract_window(ramp_series(n_t), peak)
                self.assertTrue(0 <= window.start <= peak < window.start + WINDOW_LENGTH <= n_t)

    def test_centred_and_clamped(self):
        self.assertEqual(extract_window(self.pwi, 15).start, 2)
        self.assertEqual(extract_window(self.pwi, 20).start, 7)
        self.assertEqual(extract_window(self.pwi, 2).start, 0)
        self.assertEqual(extract_window(self.pwi, 39).start, 14)

    def test_sidecar(self):
        window = extract_window(self.pwi, 20)
        self.assertEqual(window.sidecar(), {'peak_index': 20, 'start': 7, 'length': 26})
        self.assertEqual(window.source_dims, (40, 2, 3, 3))

    def test_short_series(self):
        with self.assertRaises(InsufficientAcquisitionsError):
            extract_window(ramp_series(25), 10)

    def test_bad_peak(self):
        with self.assertRaises(ValidationError):
            extract_window(self.pwi, 40)
