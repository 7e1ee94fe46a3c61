from typing import List
import logging

from ringlab.schemas import EvolutionMode

from .base import BasePropagator
from .imaginary_time import ImaginaryTimePropagator
from .real_time import RealTimePropagator

logger = logging.getLogger(__name__)


class PropagatorFactory:
    """Registry that hands out the propagator for an evolution mode"""

    def __init__(self):
        self.propagators: List[BasePropagator] = [
            RealTimePropagator(),
            ImaginaryTimePropagator(),
        ]

    def get(self, mode: EvolutionMode) -> BasePropagator:
        for propagator in self.propagators:
            if propagator.supports_mode(mode):
                return propagator
        raise ValueError(f"No propagator registered for mode {mode}")

    def add_propagator(self, propagator: BasePropagator, priority: int = 0):
        """
        Register a propagator

        Args:
            propagator: The propagator to add
            priority: 0 puts it ahead of the built-in ones, anything else behind them
        """
        if priority == 0:
            self.propagators.insert(0, propagator)
        else:
            self.propagators.append(propagator)
        logger.debug(f"Registered {propagator.__class__.__name__} for {propagator.mode}")


# Global propagator factory instance
propagator_factory = PropagatorFactory()
