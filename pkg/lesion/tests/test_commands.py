"""
Tests de integración de los comandos de gestión del pipeline.

La cadena completa synth -> window -> preprocess -> train -> predict ->
evaluate -> nmi -> report se ejecuta una vez sobre un corpus diminuto;
las pruebas de aceptación largas solo corren con PWINET_SLOW_TESTS=1.
"""

import json
import shutil
import tempfile
import unittest
from io import StringIO
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from lesion.exceptions import EXIT_DATA, EXIT_NUMERICAL, EXIT_USAGE
from lesion.io import MAP_NAMES, CaseBundle, SeededRng, Tensor, Volume3D, Volume4D
from lesion.io.case_store import list_case_dirs, read_case_dir, write_case_dir
from lesion.io.raw_format import load_raw
from lesion.metrics import read_metrics_csv
from lesion.models import MODEL_KINDS, build_model
from lesion.phantom import LesionEllipsoid, PhantomConfig, synth_case
from lesion.preprocessing import PreprocConfig, extract_patches, stack_patches
from lesion.services import PreprocessService
from lesion.training import PatchSet, TrainConfig, fit_batch, load_checkpoint

TINY_CONFIG = {
    'phantom': {
        'dims': [30, 4, 16, 16],
        't0': 4.0,
        'noise': 1.0,
        'lesions': [
            {'center': [1.5, 8.0, 8.0], 'radii': [1.5, 2.5, 2.5], 'attenuation': 0.05},
            {'center': [1.5, 8.0, 8.0], 'radii': [1.5, 4.0, 4.0], 'attenuation': 0.5, 'delay': 1.0},
        ],
    },
    'preproc': {'target_dims': [4, 16, 16], 'patch_size': 8, 'patches_per_case': 6},
    'arch': {'unet_levels': 1, 'base_filters': 2, 'gru_hidden': 2, 'merge_filters': 2, 'expansion_factor': 1},
    'train': {'learning_rate': 1e-2, 'batch_size': 4, 'epochs': 1, 'split': [2, 1]},
}


def run(name, *args):
    """Ejecuta un comando y devuelve su salida estándar."""
    out = StringIO()
    call_command(name, *[str(a) for a in args], stdout=out, stderr=StringIO())
    return out.getvalue()


def write_flat_case(case_dir) -> Path:
    """Caso con PWI constante: no hay pico de contraste que detectar."""
    spacing = (1.0, 1.0, 1.0)
    maps = {name: Volume3D(Tensor(np.full((2, 4, 4), 800.0, dtype=np.float32)), spacing) for name in MAP_NAMES}
    bundle = CaseBundle(
        case_id='flat',
        pwi=Volume4D(Tensor(np.full((10, 2, 4, 4), 50.0, dtype=np.float32)), spacing, 1.0),
        maps=maps,
        lesion_gt=None,
    )
    return write_case_dir(case_dir, bundle)


class PipelineCommandTests(SimpleTestCase):
    """Cadena completa de comandos sobre un corpus de tres casos."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.root = Path(tempfile.mkdtemp())
        cls.config = cls.root / 'config.json'
        cls.config.write_text(json.dumps(TINY_CONFIG))
        root, cfg = cls.root, cls.config

        cls.synth_out = run('synth', '--out', root / 'corpus', '--n', 3, '--fixed', '--config', cfg, '--seed', 1)
        cls.window_out = run('window', '--in', root / 'corpus' / 'case_000', '--out', root / 'win' / 'case_000.pwt')
        run('preprocess', '--case', root / 'corpus', '--out', root / 'prep', '--config', cfg, '--seed', 1)
        run('preprocess', '--case', root / 'corpus' / 'case_000', '--out', root / 'prep_window',
            '--window', root / 'win' / 'case_000.pwt', '--config', cfg)
        run('train', '--data', root / 'prep', '--arch', 'branched', '--out', root / 'model' / 'model.ckpt',
            '--config', cfg)
        run('predict', '--model', root / 'model' / 'model.ckpt', '--case', root / 'corpus',
            '--out', root / 'pred', '--config', cfg, '--seed', 1)
        run('predict', '--model', root / 'model' / 'model.ckpt', '--case', root / 'prep' / 'case_001',
            '--out', root / 'single.pwt', '--config', cfg)
        run('evaluate', '--pred', root / 'pred', '--gt', root / 'corpus', '--report', root / 'metrics.csv')
        run('nmi', '--model', root / 'model' / 'model.ckpt', '--case', root / 'prep' / 'case_000',
            '--out', root / 'nmi.csv', '--bins', 8)
        cls.report_out = run('report', '--metrics', f"branched={root / 'metrics.csv'}", '--nmi', root / 'nmi.csv',
                             '--features', '--model', root / 'model' / 'model.ckpt',
                             '--case', root / 'prep' / 'case_000', '--out', root / 'figs', '--config', cfg)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.root, ignore_errors=True)
        super().tearDownClass()

    def test_synth_writes_cases(self):
        dirs = list_case_dirs(self.root / 'corpus')
        self.assertEqual([d.name for d in dirs], ['case_000', 'case_001', 'case_002'])
        bundle, meta = read_case_dir(dirs[0])
        self.assertEqual(bundle.pwi.array.shape, (30, 4, 16, 16))
        self.assertIn('true_peak_index', meta)
        self.assertTrue(bundle.lesion_gt.array.any())

    def test_window_and_sidecar(self):
        window = load_raw(self.root / 'win' / 'case_000.pwt')
        self.assertEqual(window.array.shape[0], 26)
        sidecar = json.loads((self.root / 'win' / 'case_000.json').read_text())
        self.assertEqual(sidecar['case_id'], 'case_000')
        self.assertTrue(0 <= sidecar['start'] <= 4)

    def test_preprocess_outputs(self):
        for name in ('case_000', 'case_001', 'case_002'):
            with self.subTest(case=name):
                case_dir = self.root / 'prep' / name
                channels = load_raw(case_dir / 'channels.pwt')
                self.assertEqual(channels.dims, (32, 4, 16, 16))
                self.assertEqual(load_raw(case_dir / 'patches.pwt').dims, (6, 32, 8, 8))
        meta = json.loads((self.root / 'prep_window' / 'meta.json').read_text())
        self.assertEqual(meta['original_dims'], [4, 16, 16])

    def test_train_writes_checkpoint_and_loss(self):
        checkpoint = load_checkpoint(self.root / 'model' / 'model.ckpt', 'branched')
        self.assertEqual(checkpoint.metadata['patch_size'], 8)
        self.assertEqual(len(checkpoint.metadata['val_cases']), 1)
        lines = (self.root / 'model' / 'loss.csv').read_text().splitlines()
        self.assertEqual(lines[0], 'epoch,train_loss,val_dice')
        self.assertEqual(len(lines), 2)

    def test_predictions_at_original_resolution(self):
        for name in ('case_000', 'case_001', 'case_002'):
            with self.subTest(case=name):
                volume = load_raw(self.root / 'pred' / f"{name}.pwt")
                self.assertEqual(volume.dims, (4, 16, 16))
                self.assertTrue(np.all((volume.array >= 0.0) & (volume.array <= 1.0)))
        single = load_raw(self.root / 'single.pwt')
        self.assertEqual(single.dims, (4, 16, 16))

    def test_metrics_report(self):
        report = read_metrics_csv(self.root / 'metrics.csv')
        self.assertEqual([row.case_id for row in report.rows], ['case_000', 'case_001', 'case_002'])
        for row in report.rows:
            self.assertTrue(0.0 <= row.dice <= 1.0)

    def test_nmi_matrix(self):
        lines = (self.root / 'nmi.csv').read_text().splitlines()
        self.assertEqual(lines[0].split(','), ['feature'] + list(MAP_NAMES))
        self.assertEqual(len(lines) - 1, 2)
        values = [float(v) for line in lines[1:] for v in line.split(',')[1:]]
        self.assertTrue(all(0.0 <= v <= 1.0 + 1e-9 for v in values))

    def test_report_figures(self):
        for name in ('hd_vs_dice.svg', 'nmi_heatmap.svg', 'feature_panel.svg'):
            with self.subTest(figure=name):
                text = (self.root / 'figs' / name).read_text()
                self.assertTrue(text.lstrip().startswith('<'))
                self.assertIn('<svg', text)
                self.assertIn(name, self.report_out)


def tree_bytes(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob('*')) if p.is_file()}


class ThreadDeterminismTests(SimpleTestCase):
    """Las salidas no dependen del número de hilos."""

    def test_synth_and_preprocess_ignore_thread_count(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            config = root / 'config.json'
            config.write_text(json.dumps(TINY_CONFIG))
            for threads in (1, 4):
                out = root / f"threads_{threads}"
                run('synth', '--out', out / 'corpus', '--n', 4, '--config', config, '--seed', 5,
                    '--threads', threads)
                run('preprocess', '--case', out / 'corpus', '--out', out / 'prep', '--config', config,
                    '--seed', 5, '--threads', threads)
            single, pooled = tree_bytes(root / 'threads_1'), tree_bytes(root / 'threads_4')
        self.assertEqual(sorted(single), sorted(pooled))
        self.assertIn('prep/case_003/channels.pwt', single)
        for name in single:
            with self.subTest(file=name):
                self.assertEqual(single[name], pooled[name])


class CommandExitCodeTests(SimpleTestCase):
    """Códigos de salida: 1 uso, 2 datos, 3 numérico."""

    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.tmp, True)

    def assertExitCode(self, code, name, *args):
        with self.assertRaises(CommandError) as ctx:
            run(name, *args)
        self.assertEqual(ctx.exception.returncode, code)
        return ctx.exception

    def test_unknown_architecture(self):
        self.assertExitCode(EXIT_USAGE, 'train', '--data', self.tmp, '--arch', 'resnet', '--out', self.tmp / 'm.ckpt')

    def test_missing_required_flag(self):
        self.assertExitCode(EXIT_USAGE, 'synth', '--n', 2)

    def test_invalid_threads(self):
        self.assertExitCode(EXIT_USAGE, 'synth', '--out', self.tmp, '--n', 1, '--threads', 0)

    def test_empty_corpus(self):
        error = self.assertExitCode(EXIT_USAGE, 'synth', '--out', self.tmp, '--n', 0)
        self.assertIn('EMPTY_CORPUS', str(error))

    def test_bad_config(self):
        path = self.tmp / 'config.json'
        path.write_text(json.dumps({'arch': {'layers': 3}}))
        error = self.assertExitCode(EXIT_USAGE, 'synth', '--out', self.tmp / 'c', '--n', 1, '--config', path)
        self.assertIn('BAD_CONFIG', str(error))

    def test_missing_case_directory(self):
        error = self.assertExitCode(EXIT_DATA, 'window', '--in', self.tmp / 'nope', '--out', self.tmp / 'w.pwt')
        self.assertIn('CASE_NOT_FOUND', str(error))

    def test_corrupted_checkpoint(self):
        model = self.tmp / 'model.ckpt'
        model.write_bytes(b'XXXX' + bytes(64))
        write_flat_case(self.tmp / 'flat')
        self.assertExitCode(EXIT_DATA, 'predict', '--model', model, '--case', self.tmp / 'flat',
                            '--out', self.tmp / 'p.pwt')

    def test_flat_signal_is_numerical(self):
        write_flat_case(self.tmp / 'flat')
        self.assertExitCode(EXIT_NUMERICAL, 'window', '--in', self.tmp / 'flat', '--out', self.tmp / 'w.pwt')

    def test_features_need_model_and_case(self):
        self.assertExitCode(EXIT_USAGE, 'report', '--features', '--out', self.tmp)


class NiftiCommandTests(SimpleTestCase):

    def test_nifti_corpus_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            config = root / 'config.json'
            config.write_text(json.dumps({'phantom': TINY_CONFIG['phantom']}))
            run('synth', '--out', root / 'corpus', '--n', 1, '--fixed', '--nifti', '--config', config)
            case_dir = root / 'corpus' / 'case_000'
            self.assertTrue(any(p.name.endswith(('.nii', '.nii.gz')) for p in case_dir.iterdir()))
            bundle, _ = read_case_dir(case_dir)
            self.assertEqual(bundle.pwi.array.shape, (30, 4, 16, 16))
            run('window', '--in', case_dir, '--out', root / 'w.pwt')
            self.assertEqual(load_raw(root / 'w.pwt').array.shape[0], 26)


class AblationCommandTests(SimpleTestCase):

    def test_small_ablation(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            config = root / 'config.json'
            config.write_text(json.dumps(TINY_CONFIG))
            output = run('ablation', '--out', root / 'ablation', '--n', 4, '--seeds', 0,
                         '--kinds', 'standard', 'branched', '--config', config)
            summary = json.loads((root / 'ablation' / 'summary.json').read_text())
            for kind in ('standard', 'branched'):
                self.assertTrue((root / 'ablation' / 'seed_0' / kind / 'metrics.csv').exists())
                self.assertEqual(len(list((root / 'ablation' / 'seed_0' / kind / 'pred').iterdir())), 1)
        self.assertEqual(summary['corpus_size'], 4)
        self.assertEqual(len(summary['methods']['standard']['dice_by_seed']), 1)
        self.assertIn('branched_minus_standard', summary['methods'])
        self.assertIn('Orden por Dice mediana', output)


class SelftestCommandTests(SimpleTestCase):

    def test_quick_selftest(self):
        output = run('selftest', '--instances', 1, '--skip-model', '--seed', 3)
        self.assertIn('grad_conv', output)
        self.assertIn('comprobaciones superadas', output)


OVERFIT_PHANTOM = PhantomConfig(
    lesions=(
        LesionEllipsoid(center=(3.5, 32.0, 32.0), radii=(2.0, 8.0, 8.0), attenuation=0.05),
        LesionEllipsoid(center=(3.5, 32.0, 32.0), radii=(2.0, 12.0, 12.0), attenuation=0.5, delay=1.0),
    ),
    noise=1.0,
)


def lesion_patches():
    """Cuatro parches de tamaño de referencia con lesión, del mismo caso sintético."""
    bundle = synth_case(OVERFIT_PHANTOM, 'case_overfit').bundle
    preproc = PreprocConfig(lesion_biased=True, lesion_fraction=1.0)
    case = PreprocessService().prepare(bundle, preproc, seed=0)
    return [p for p in extract_patches(case, preproc, SeededRng(0)) if p.gt.any()][:4]


class OverfitCaseTests(SimpleTestCase):

    def test_case_has_lesion_patches(self):
        """Test el caso del arnés de sobreajuste tiene verdad no vacía y da un lote completo"""
        self.assertTrue(synth_case(OVERFIT_PHANTOM, 'case_overfit').bundle.lesion_gt.array.any())
        patches = lesion_patches()
        self.assertEqual(len(patches), 4)
        self.assertTrue(all(p.gt.any() for p in patches))


@unittest.skipUnless(settings.PWINET['SLOW_TESTS'], 'Pruebas de aceptación largas (PWINET_SLOW_TESTS=1)')
class AcceptanceTests(SimpleTestCase):
    """Arnés de sobreajuste por arquitectura y ablación direccional a escala de escritorio."""

    def test_overfit_single_batch(self):
        patches = lesion_patches()
        self.assertEqual(len(patches), 4)
        channels, gt = stack_patches(patches)
        batch = PatchSet.from_channels(channels, gt, [p.case_id for p in patches])
        for kind in MODEL_KINDS:
            with self.subTest(kind=kind):
                spec = build_model(kind, seed=0)
                losses = fit_batch(spec, batch.inputs(kind), batch.gt, 500, TrainConfig(learning_rate=1e-3))
                self.assertLess(losses[-1], 0.2)
                minima = [min(losses[i:i + 100]) for i in range(0, 500, 100)]
                self.assertTrue(all(b <= a for a, b in zip(minima, minima[1:])))

    def test_directional_ablation(self):
        with tempfile.TemporaryDirectory() as tmp:
            run('ablation', '--out', tmp, '--n', 40, '--seeds', 0, 1, 2, '--kinds', 'standard', 'branched')
            summary = json.loads((Path(tmp) / 'summary.json').read_text())
        self.assertGreaterEqual(summary['methods']['branched_minus_standard'], 0.03)
