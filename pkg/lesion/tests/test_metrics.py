"""
Tests para métricas de solapamiento, distancias de superficie, NMI e informes por corpus.
"""

import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_array_equal

from lesion.exceptions import DataError, ShapeError, UndefinedDistanceError, ValidationError
from lesion.io import MAP_NAMES, CaseBundle, SeededRng, Tensor, Volume3D, Volume4D
from lesion.io.case_store import write_case_dir
from lesion.io.raw_format import save_raw
from lesion.metrics import (
    CaseMetrics,
    MetricsReport,
    assd,
    binarize,
    dice_binary,
    evaluate_case,
    evaluate_corpus,
    hausdorff,
    nmi,
    nmi_matrix,
    precision,
    read_metrics_csv,
    recall,
    surface,
    write_metrics_csv,
)
from lesion.services.selftest_service import brute_force_distances, brute_force_surface, random_mask_pair


def line_mask(start: int, stop: int, length: int = 10) -> np.ndarray:
    mask = np.zeros((1, 1, length), dtype=bool)
    mask[0, 0, start:stop] = True
    return mask


def write_line_case(root: Path, case_id: str, gt: np.ndarray) -> Path:
    spacing = (1.0, 1.0, 1.0)
    zeros = Volume3D(Tensor(np.zeros(gt.shape, dtype=np.float32)), spacing)
    bundle = CaseBundle(
        case_id=case_id,
        pwi=Volume4D(Tensor(np.zeros((2,) + gt.shape, dtype=np.float32)), spacing, 1.0),
        maps={name: zeros for name in MAP_NAMES},
        lesion_gt=Volume3D(Tensor(gt.astype(np.float32)), spacing),
    )
    return write_case_dir(root / case_id, bundle)


class OverlapTests(SimpleTestCase):

    def test_count_oracle(self):
        a, b = line_mask(0, 4, 6), line_mask(2, 6, 6)
        self.assertEqual(dice_binary(a, b), 0.5)
        self.assertEqual(precision(a, b), 0.5)
        self.assertEqual(recall(a, b), 0.5)

    def test_empty_masks(self):
        empty, full = line_mask(0, 0), line_mask(0, 3)
        self.assertEqual(dice_binary(empty, empty), 1.0)
        self.assertEqual(precision(empty, empty), 1.0)
        self.assertEqual(recall(empty, empty), 1.0)
        self.assertEqual(dice_binary(empty, full), 0.0)
        self.assertEqual(precision(empty, full), 0.0)
        self.assertEqual(recall(empty, full), 0.0)

    def test_threshold_is_exclusive(self):
        assert_array_equal(binarize(np.array([0.49, 0.5, 0.51])), [False, False, True])

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            dice_binary(np.zeros((2, 2, 2)), np.zeros((2, 2, 3)))


class SurfaceDistanceTests(SimpleTestCase):
    """Distancias de superficie frente a un oráculo de fuerza bruta."""

    def test_single_voxels(self):
        a, b = np.zeros((1, 4, 5), dtype=bool), np.zeros((1, 4, 5), dtype=bool)
        a[0, 0, 0] = True
        b[0, 3, 4] = True
        self.assertAlmostEqual(hausdorff(a, b, (1, 1, 1)), 5.0, places=12)
        self.assertAlmostEqual(assd(a, b, (1, 1, 1)), 5.0, places=12)

    def test_anisotropic_spacing(self):
        a, b = line_mask(0, 1, 3), line_mask(2, 3, 3)
        self.assertAlmostEqual(hausdorff(a, b, (1.0, 1.0, 3.0)), 6.0, places=12)

    def test_identical_masks(self):
        mask = line_mask(2, 7)
        self.assertEqual(hausdorff(mask, mask), 0.0)
        self.assertEqual(assd(mask, mask), 0.0)

    def test_surface_of_cube(self):
        cube = np.ones((3, 3, 3), dtype=bool)
        border = surface(cube)
        self.assertEqual(int(border.sum()), 26)
        self.assertFalse(border[1, 1, 1])
        assert_array_equal(border, brute_force_surface(cube))

    def test_brute_force_oracle(self):
        root = SeededRng(31)
        for i in range(40):
            a, b, spacing = random_mask_pair(root.split(f"pair_{i}"))
            with self.subTest(instance=i):
                expected_hd, expected_assd = brute_force_distances(a, b, spacing)
                hd, mean = hausdorff(a, b, spacing), assd(a, b, spacing)
                self.assertAlmostEqual(hd, expected_hd, delta=1e-9)
                self.assertAlmostEqual(mean, expected_assd, delta=1e-9)
                self.assertGreaterEqual(hd + 1e-12, mean)
                self.assertAlmostEqual(hausdorff(b, a, spacing), hd, delta=1e-12)
                self.assertAlmostEqual(assd(b, a, spacing), mean, delta=1e-12)

    def test_empty_mask_is_undefined(self):
        with self.assertRaises(UndefinedDistanceError):
            hausdorff(line_mask(0, 0), line_mask(0, 2))


class NmiTests(SimpleTestCase):

    def setUp(self):
        rng = SeededRng(8)
        self.x = rng.uniform(0.0, 255.0, 100_000)
        self.y = rng.uniform(0.0, 255.0, 100_000)

    def test_self_information_is_one(self):
        self.assertAlmostEqual(nmi(self.x, self.x), 1.0, places=9)

    def test_independent_signals(self):
        self.assertLess(nmi(self.x, self.y), 0.05)

    def test_affine_invariance(self):
        related = self.x + 0.3 * self.y
        self.assertAlmostEqual(nmi(3.0 * related + 2.0, self.x), nmi(related, self.x), places=6)

    def test_constant_signal(self):
        self.assertEqual(nmi(np.ones(100), np.ones(100)), 0.0)

    def test_invalid_arguments(self):
        with self.assertRaises(ValidationError):
            nmi(self.x, self.y, bins=0)
        with self.assertRaises(ShapeError):
            nmi(self.x, self.y[:10])

    def test_matrix(self):
        rng = SeededRng(2)
        mask = np.ones((2, 8, 8), dtype=bool)
        maps = {name: rng.uniform(size=(2, 8, 8)) for name in MAP_NAMES}
        features = [('feature_0', maps['Tmax']), ('feature_1', rng.uniform(size=(2, 8, 8)))]
        matrix = nmi_matrix(features, maps, mask, bins=8)
        self.assertEqual(matrix.shape, (2, 6))
        self.assertEqual(matrix.columns, MAP_NAMES)
        self.assertAlmostEqual(float(matrix.values[0, MAP_NAMES.index('Tmax')]), 1.0)
        self.assertEqual(matrix.as_rows()[1][0], 'feature_1')


class ReportTests(SimpleTestCase):
    """Pruebas de la evaluación de un corpus y de su CSV."""

    def test_corpus_aggregates(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            gt_dir, pred_dir = root / 'gt', root / 'pred'
            pred_dir.mkdir()
            for case_id, pred in (('case_a', line_mask(4, 9)), ('case_b', line_mask(3, 8))):
                write_line_case(gt_dir, case_id, line_mask(0, 5))
                save_raw(pred_dir / f"{case_id}.pwt", Volume3D(Tensor(pred.astype(np.float32))))
            report = evaluate_corpus(pred_dir, gt_dir, threads=2)
        self.assertEqual([row.case_id for row in report.rows], ['case_a', 'case_b'])
        self.assertAlmostEqual(report.rows[0].dice, 0.2)
        self.assertAlmostEqual(report.rows[1].dice, 0.4)
        self.assertAlmostEqual(report.mean['dice'], 0.3)
        self.assertAlmostEqual(report.sd['dice'], math.sqrt(0.02), places=9)

    def test_unmatched_cases(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            (root / 'pred').mkdir()
            write_line_case(root / 'gt', 'case_a', line_mask(0, 5))
            save_raw(root / 'pred' / 'case_a.pwt', Volume3D(Tensor(line_mask(0, 5).astype(np.float32))))
            save_raw(root / 'pred' / 'case_z.pwt', Volume3D(Tensor(line_mask(0, 5).astype(np.float32))))
            with self.assertRaises(DataError) as ctx:
                evaluate_corpus(root / 'pred', root / 'gt')
        self.assertEqual(ctx.exception.details['unmatched'], ['case_z'])

    def test_empty_prediction_is_flagged(self):
        row = evaluate_case('case_e', np.zeros((1, 1, 10)), line_mask(0, 5), (1, 1, 1))
        self.assertTrue(math.isnan(row.hd))
        self.assertEqual(row.dice, 0.0)
        report = MetricsReport.from_rows([row, evaluate_case('case_f', line_mask(0, 5), line_mask(0, 5),
                                                             (1, 1, 1))])
        self.assertEqual(report.flagged, ['case_e'])
        self.assertEqual(report.mean['hd'], 0.0)

    def test_csv_round_trip(self):
        rows = [CaseMetrics('case_a', 0.5, 2.0, 1.0, 0.5, 0.5),
                CaseMetrics('case_b', 0.0, float('nan'), float('nan'), 0.0, 0.0)]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'metrics.csv'
            write_metrics_csv(MetricsReport.from_rows(rows), path)
            lines = path.read_text().splitlines()
            restored = read_metrics_csv(path)
        self.assertEqual(lines[0], 'case_id,dice,hd,assd,precision,recall')
        self.assertEqual(lines[2], 'case_b,0,NA,NA,0,0')
        self.assertEqual(lines[3].split(',')[0], 'mean')
        self.assertEqual(restored.rows[0], rows[0])
        self.assertTrue(math.isnan(restored.rows[1].hd))
