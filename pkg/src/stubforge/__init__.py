"""stubforge: evolutionary synthesis and repair of mock-object stub code."""

__version__ = "0.1.0"
