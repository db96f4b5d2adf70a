"""Indoor visible-light link simulator with mirror and steerable-mirror
(ORIS) wall reflectors: channel model, lighting constraints, outage
minimisation heuristics and a Monte Carlo harness."""

__version__ = "0.1.0"
