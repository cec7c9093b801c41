"""Direct tracts of transcendental functions: detection, growth profiles,
local power-map checks, escaping dynamics and ODE order bounds."""

__version__ = "0.1.0"

from .errors import TractDynError  # noqa: E402
from .functions import FunctionModel, derivative, evaluate, make_model  # noqa: E402
from .tract import TractDescriptor, Window, default_tract, locate_tract  # noqa: E402

__all__ = ["FunctionModel", "TractDescriptor", "TractDynError", "Window", "__version__",
           "default_tract", "derivative", "evaluate", "locate_tract", "make_model"]
