"""Best-answer prediction for community Q&A sites.

Pipeline: ingest Stack Exchange dump XML, extract shallow / textual /
user / relation feature groups, train boosted trees, evaluate with
grouped cross-validated AUC, and run greedy feature-group selection.
"""

__version__ = "0.1.0"
