"""Synthetic cohort generation: templates, backends, and bundle assembly."""

from .backends import (GenerationBackend, GenerationFailed, GrammarBackend,
                       RemoteLlmBackend, derive_seed)
from .bundles import (DEFAULT_COUNTS, Cohort, PatientBundle, cohort_from_dict,
                      cohort_to_dict, generate_bundle, generate_cohort,
                      seed_reference_data)
from .demographics import ClinicalProfile, Demographics, DiversityParams
from .parsing import ParseError, parse_structured_output
from .templates import (MissingPlaceholder, PromptTemplate, default_templates,
                        render_prompt, validate_templates)

__all__ = [
    "GenerationBackend", "GenerationFailed", "GrammarBackend", "RemoteLlmBackend",
    "derive_seed", "DEFAULT_COUNTS", "Cohort", "PatientBundle", "cohort_from_dict",
    "cohort_to_dict", "generate_bundle", "generate_cohort", "seed_reference_data",
    "ClinicalProfile", "Demographics", "DiversityParams", "ParseError",
    "parse_structured_output", "MissingPlaceholder", "PromptTemplate",
    "default_templates", "render_prompt", "validate_templates",
]
