"""Magic-state distillation factories: block codes, error tracking, simulation and cost."""

__version__ = "0.1.0"
