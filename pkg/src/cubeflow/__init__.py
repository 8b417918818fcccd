"""cubeflow: topology-free immersed-boundary flow solver on building-cube grids."""

__version__ = "0.1.0"
