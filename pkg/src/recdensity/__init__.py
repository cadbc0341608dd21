"""Positivity, negativity and zero densities of real linear recurrence sequences."""
from .config import RunConfig
from .constructor import (
    TrigSpec,
    arcsin_sequence,
    interlace,
    prescribed_density_trig,
    sawtooth_fourier,
    sine_sequence,
)
from .density import (
    DensityReport,
    empirical_density,
    oscillation_certificate,
    positivity_density,
    zero_density,
)
from .dominance import DominantForm, dominant_form, has_positive_dominating_root
from .errors import (
    DomainError,
    ParseError,
    PrecisionError,
    RecDensityError,
    ResourceError,
    UndecidableError,
)
from .lattice import detect_rational, find_integer_relations, unimodular_completion
from .measure import torus_measure
from .roots import CharacteristicSpectrum, find_roots
from .seqcore import (
    PowerSum,
    Recurrence,
    char_poly,
    evaluate,
    load_recurrence,
    power_sum,
    power_sum_decompose,
    reconstruct,
    subsequence_power_sum,
)
from .torus import ModuleBasis, TorusForm, module_basis, torus_forms

__version__ = "0.1.0"
