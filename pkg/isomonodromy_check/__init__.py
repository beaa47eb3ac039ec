"""
Numerical verification of the H^{2+2+1} isomonodromic construction: the
Hamiltonian flows, their Lax pair, the PRLG reduction and the kernel solutions
of the quantum evolution equations.
"""

# Local
from .config import RunConfig, load_config, parse_config
from .errors import IsomonodromyError
from .hamiltonians import Chart, Form, KnsState, TimePoint
from .params import ParameterSet, make_parameter_set
