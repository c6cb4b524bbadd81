"""Normal-ordered stress-tensor moments for coherent and cat states of a free scalar field."""

from .algebra import (
    FieldFactor,
    OperatorPolynomial,
    cat_expectation,
    coherent_matrix_element,
    even_odd_split_check,
    expectation,
    field,
)
from .modes import (
    BOX,
    NONE,
    BoxGeometry,
    Derivative,
    ModeBasis,
    ModeSum,
    SpacetimePoint,
    build_box_modes,
    decompose_classical,
    kg_inner_product,
    kg_residual,
    mode_value,
)
from .states import (
    CatState,
    CoherentAmplitude,
    cat_normalize,
    classical_profile,
    coherent_overlap,
    epsilon,
    phase_cat,
)
from .stress import T_bilinear, build_T_polynomial, conservation_residual, source_term

__version__ = "0.1.0"
