"""Discovery of non-compositional compounds from parallel data."""

from .corpus import Bitext, Token, Vocabulary, defuse, fuse_side, load_bitext
from .linker import TranslationModel, conditional, induce_model
from .objectives import mutual_information, objective_v, predictive_value_i

__version__ = "0.1.0"

__all__ = [
    "Bitext",
    "Token",
    "Vocabulary",
    "defuse",
    "fuse_side",
    "load_bitext",
    "TranslationModel",
    "conditional",
    "induce_model",
    "mutual_information",
    "objective_v",
    "predictive_value_i",
]
