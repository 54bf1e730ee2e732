"""
Tests para la validación del documento de configuración.
"""

import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from lesion.exceptions import ValidationError
from lesion.models import ArchConfig
from lesion.phantom import LesionEllipsoid
from lesion.preprocessing import PreprocConfig
from lesion.serializers import PipelineConfig, load_pipeline_config, parse_pipeline_config


class PipelineConfigTests(SimpleTestCase):
    """Pruebas del serializador de configuración del pipeline."""

    def test_empty_document_gives_defaults(self):
        config = parse_pipeline_config({})
        self.assertEqual(config, PipelineConfig())

    def test_sections_become_dataclasses(self):
        config = parse_pipeline_config({
            'preproc': {'target_dims': [4, 16, 16], 'patch_size': 8, 'lesion_biased': True},
            'arch': {'unet_levels': 1, 'gru_merge': 'concat'},
            'train': {'epochs': 3, 'split': [3, 1]},
        })
        self.assertEqual(config.preproc, PreprocConfig(target_dims=(4, 16, 16), patch_size=8, lesion_biased=True))
        self.assertEqual(config.arch, ArchConfig(unet_levels=1, gru_merge='concat'))
        self.assertEqual(config.train.epochs, 3)
        self.assertEqual(config.train.split, (3, 1))

    def test_lesions(self):
        config = parse_pipeline_config({'phantom': {'lesions': [
            {'center': [4, 32, 32], 'radii': [2, 5, 5], 'attenuation': 0.1},
        ]}})
        self.assertEqual(config.phantom.lesions,
                         (LesionEllipsoid(center=(4.0, 32.0, 32.0), radii=(2.0, 5.0, 5.0), attenuation=0.1),))

    def test_unknown_keys_at_every_level(self):
        documents = (
            ({'bogus': 1}, 'bogus'),
            ({'arch': {'layers': 3}}, 'arch'),
            ({'phantom': {'lesions': [{'center': [1, 1, 1], 'radii': [1, 1, 1], 'shape': 'box'}]}}, 'phantom'),
        )
        for document, key in documents:
            with self.subTest(document=document):
                with self.assertRaises(ValidationError) as ctx:
                    parse_pipeline_config(document)
                self.assertEqual(ctx.exception.error_code, 'BAD_CONFIG')
                self.assertIn(key, ctx.exception.details['errors'])

    def test_wrong_types(self):
        with self.assertRaises(ValidationError):
            parse_pipeline_config({'train': {'epochs': 'many'}})
        with self.assertRaises(ValidationError):
            parse_pipeline_config({'preproc': {'target_dims': [4, 16]}})
        with self.assertRaises(ValidationError):
            parse_pipeline_config({'arch': {'gru_merge': 'max'}})

    def test_invariants_are_checked(self):
        with self.assertRaises(ValidationError) as ctx:
            parse_pipeline_config({'preproc': {'target_dims': [4, 16, 16], 'patch_size': 32}})
        self.assertIn('preproc', ctx.exception.details['errors'])
        with self.assertRaises(ValidationError):
            parse_pipeline_config({'phantom': {'dims': [10, 4, 8, 8], 't0': 9.0}})

    def test_seed_propagation(self):
        config = parse_pipeline_config({'seed': 7, 'train': {'seed': 3}})
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.phantom.seed, 7)
        self.assertEqual(config.train.seed, 3)

    def test_seed_argument_overrides_document(self):
        config = parse_pipeline_config({'seed': 7}, seed=11)
        self.assertEqual(config.seed, 11)
        self.assertEqual(config.train.seed, 11)


class LoadConfigTests(SimpleTestCase):

    def test_without_path(self):
        self.assertEqual(load_pipeline_config(None, seed=4).phantom.seed, 4)

    def test_from_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'config.json'
            path.write_text(json.dumps({'train': {'batch_size': 2}}))
            self.assertEqual(load_pipeline_config(path).train.batch_size, 2)

    def test_file_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            (root / 'broken.json').write_text('{"train": ')
            (root / 'list.json').write_text('[1, 2]')
            cases = (
                (root / 'missing.json', 'CONFIG_NOT_FOUND'),
                (root / 'broken.json', 'CONFIG_NOT_JSON'),
                (root / 'list.json', 'CONFIG_NOT_OBJECT'),
            )
            for path, code in cases:
                with self.subTest(code=code):
                    with self.assertRaises(ValidationError) as ctx:
                        load_pipeline_config(path)
                    self.assertEqual(ctx.exception.error_code, code)
