"""Export embeddings and classifier weights from a frozen VLM backbone.

Produces the consumer's documented file formats (binary embeddings and
JSON classifier documents) from image folders and class-name prompts. The
backbone is always frozen; prompt-tuned contexts come from external
checkpoint files.
"""

__version__ = "0.1.0"

from .backbone import ToyVisionLanguageBackbone, load_backbone
from .export import (
    export_embeddings,
    export_fewshot_classifier,
    export_zeroshot_classifier,
)
from .job import ExportJob, read_job

__all__ = [
    "__version__",
    "ExportJob",
    "ToyVisionLanguageBackbone",
    "export_embeddings",
    "export_fewshot_classifier",
    "export_zeroshot_classifier",
    "load_backbone",
    "read_job",
]
