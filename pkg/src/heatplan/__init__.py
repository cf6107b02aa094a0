"""Building aggregation and multi-objective planning of district heat supply."""

__version__ = "0.1.0"
