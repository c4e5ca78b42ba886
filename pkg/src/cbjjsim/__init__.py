"""Monte Carlo switching-dynamics simulator and detection-metrics toolkit for
current-biased Josephson junctions."""

__version__ = "0.1.0"
