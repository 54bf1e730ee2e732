from .config_serializers import (
    PipelineConfig,
    PipelineConfigSerializer,
    load_pipeline_config,
    parse_pipeline_config,
)

__all__ = [
    'PipelineConfig',
    'PipelineConfigSerializer',
    'load_pipeline_config',
    'parse_pipeline_config',
]
