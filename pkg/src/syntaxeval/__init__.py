"""Harness for measuring how well fill-mask code models recover syntax.

Pipeline: ingest a snippet corpus, mask tokens per AST node type (treatment)
and matched random tokens (control), query a fill-mask backend, score the
reconstructed code by AST-traversal similarity, and estimate the causal
effect of syntax-guided masking with propensity-score adjustment.
"""

__version__ = "0.1.0"
