"""Postfix program encoding shared by the compiled and fallback evaluators."""

from dataclasses import dataclass

import numpy as np

OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_NEG = 5
OP_POW = 6
OP_EXP = 7
OP_SIN = 8
OP_COS = 9
OP_TAN = 10


@dataclass(frozen=True)
class ProgramBank:
    """A batch of stack-machine programs over a common variable space.

    codes/args hold all programs back to back; offsets[i]:offsets[i+1] is
    program i. args carries the constant index (OP_CONST), variable index
    (OP_VAR) or integer exponent (OP_POW).
    """

    codes: np.ndarray
    args: np.ndarray
    consts: np.ndarray
    offsets: np.ndarray
    n_vars: int
    max_stack: int

    @property
    def n_programs(self) -> int:
        return len(self.offsets) - 1
