"""Evaluation backends for expression program banks.

The compiled Cython core is preferred; a pure-numpy fallback is selected at
import time when the extension is unavailable or LIFTREACH_PURE_PYTHON is set.
"""

import os

import numpy as np

from . import fallback
from .program import ProgramBank

BACKEND = "python"
_core = None

if os.environ.get("LIFTREACH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _evalcore as _core

        BACKEND = "compiled"
    except ImportError:
        _core = None


def backend_name() -> str:
    return BACKEND


def eval_bank(bank: ProgramBank, points: np.ndarray) -> np.ndarray:
    """Evaluate all programs at points (n_vars, m) -> (n_programs, m)."""
    if _core is not None:
        return _core.eval_bank_core(
            bank.codes, bank.args, bank.consts, bank.offsets, points, bank.max_stack
        )
    return fallback.eval_bank(bank, points)
