"""Generalized online semi-definite programming with a log-det regularizer.

Library layout:

- linalg: symmetric-matrix primitives, graph Laplacians, effective resistance
- osdp: the FTRL learner over the gamma-trace decision set, regret accounting
- omc: mistake-driven online matrix completion with side information
- similarity: online same-class prediction on graphs
- synth: planted biclustered instances, clique graphs, labeled sequences
- verify: randomized property suites
- report: figure rendering from trace/regret CSVs
- cli: experiment driver (`gosdp` entry point)
"""

from . import linalg, omc, osdp, similarity, synth

__all__ = ["linalg", "osdp", "omc", "similarity", "synth"]
__version__ = "0.1.0"
