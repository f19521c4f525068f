"""Single-shot decoding of CSS-code syndromes measured through redundant stabilizers."""

__version__ = "0.1.0"

from .codes import StabilizerCode, build_product_16_2, build_toric_18_2, get_code
from .gf2 import BitMatrix, BitVector
from .syndrome_code import SyndromeCode, build_from_spec, build_variant

__all__ = [
    "BitMatrix",
    "BitVector",
    "StabilizerCode",
    "SyndromeCode",
    "build_from_spec",
    "build_product_16_2",
    "build_toric_18_2",
    "build_variant",
    "get_code",
]
