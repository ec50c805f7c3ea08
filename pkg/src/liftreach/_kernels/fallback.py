"""Pure-numpy evaluation backend (used when the compiled extension is absent)."""

import numpy as np

from .program import (
    OP_ADD,
    OP_CONST,
    OP_COS,
    OP_EXP,
    OP_MUL,
    OP_NEG,
    OP_POW,
    OP_SIN,
    OP_SUB,
    OP_TAN,
    OP_VAR,
    ProgramBank,
)


def eval_bank(bank: ProgramBank, points: np.ndarray) -> np.ndarray:
    m = points.shape[1]
    out = np.empty((bank.n_programs, m), dtype=np.float64)
    codes, args, consts, offsets = bank.codes, bank.args, bank.consts, bank.offsets
    for p in range(bank.n_programs):
        stack = []
        for idx in range(offsets[p], offsets[p + 1]):
            op = codes[idx]
            a = args[idx]
            if op == OP_CONST:
                stack.append(consts[a])
            elif op == OP_VAR:
                stack.append(points[a])
            elif op == OP_ADD:
                rhs = stack.pop()
                stack[-1] = stack[-1] + rhs
            elif op == OP_SUB:
                rhs = stack.pop()
                stack[-1] = stack[-1] - rhs
            elif op == OP_MUL:
                rhs = stack.pop()
                stack[-1] = stack[-1] * rhs
            elif op == OP_NEG:
                stack[-1] = -stack[-1]
            elif op == OP_POW:
                stack[-1] = stack[-1] ** int(a)
            elif op == OP_EXP:
                stack[-1] = np.exp(stack[-1])
            elif op == OP_SIN:
                stack[-1] = np.sin(stack[-1])
            elif op == OP_COS:
                stack[-1] = np.cos(stack[-1])
            elif op == OP_TAN:
                stack[-1] = np.tan(stack[-1])
            else:
                raise ValueError(f"unknown opcode {op}")
        out[p] = stack.pop()
    return out
