"""HTTP shim serving any pretrained fill-mask model behind /fill-mask.

The wire protocol is defined in the repository-root PROTOCOL.md, shared with
the evaluation harness's HTTP backend.
"""

__version__ = "0.1.0"
