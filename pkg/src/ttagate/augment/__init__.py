from .generate import (
    AugmentationSet,
    AugmenterKind,
    AugmenterSpec,
    Backends,
    Variant,
    generate_augmentations,
    variant_seed,
)
from .prompts import PromptTemplate, build_icr_prompt, build_paraphrase_prompt, extract_rewrite, load_template
from .word import SynonymLexicon, default_lexicon, load_lexicon, word_augment

__all__ = [
    "AugmentationSet",
    "AugmenterKind",
    "AugmenterSpec",
    "Backends",
    "PromptTemplate",
    "SynonymLexicon",
    "Variant",
    "build_icr_prompt",
    "build_paraphrase_prompt",
    "default_lexicon",
    "extract_rewrite",
    "generate_augmentations",
    "load_lexicon",
    "load_template",
    "variant_seed",
    "word_augment",
]
