"""Exact ground states, μ-magnon analysis and entanglement of alternating-spin Heisenberg chains."""

__version__ = "0.1.0"

from .spinbasis import *  # noqa: F401,F403
from .hamiltonian import *  # noqa: F401,F403
from .eigensolver import *  # noqa: F401,F403
from .mumagnon import *  # noqa: F401,F403
from .entanglement import *  # noqa: F401,F403
from . import spinbasis, hamiltonian, eigensolver, mumagnon, entanglement

__all__ = (["__version__"] + spinbasis.__all__ + hamiltonian.__all__ + eigensolver.__all__
           + mumagnon.__all__ + entanglement.__all__)
