"""Backend selection for the pair-sum hot loop.

The compiled extension is used when importable; set ``NLTELEPORT_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from . import _pairsum_py

if os.environ.get("NLTELEPORT_PURE_PYTHON", "") == "1":
    contract_pair = _pairsum_py.contract_pair
    BACKEND = "python"
else:
    try:
        from ._pairsum import contract_pair  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        contract_pair = _pairsum_py.contract_pair
        BACKEND = "python"

__all__ = ["contract_pair", "BACKEND"]
