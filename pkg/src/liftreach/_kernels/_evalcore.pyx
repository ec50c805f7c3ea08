# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stack-machine evaluator for expression program banks."""

from libc.math cimport cos, exp, pow, sin, tan
from libc.stdlib cimport free, malloc

import numpy as np


def eval_bank_core(int[::1] codes, int[::1] args, double[::1] consts,
                   int[::1] offsets, double[:, ::1] points, int max_stack):
    cdef Py_ssize_t n_programs = offsets.shape[0] - 1
    cdef Py_ssize_t m = points.shape[1]
    out_arr = np.empty((n_programs, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr

    cdef double* stack = <double*> malloc(max_stack * sizeof(double))
    if stack == NULL:
        raise MemoryError()

    cdef Py_ssize_t p, j, idx, start, stop
    cdef int op, a, e, sp
    cdef double v
    try:
        with nogil:
            for p in range(n_programs):
                start = offsets[p]
                stop = offsets[p + 1]
                for j in range(m):
                    sp = 0
                    for idx in range(start, stop):
                        op = codes[idx]
                        a = args[idx]
                        if op == 0:    # CONST
                            stack[sp] = consts[a]
                            sp += 1
                        elif op == 1:  # VAR
                            stack[sp] = points[a, j]
                            sp += 1
                        elif op == 2:  # ADD
                            sp -= 1
                            stack[sp - 1] = stack[sp - 1] + stack[sp]
                        elif op == 3:  # SUB
                            sp -= 1
                            stack[sp - 1] = stack[sp - 1] - stack[sp]
                        elif op == 4:  # MUL
                            sp -= 1
                            stack[sp - 1] = stack[sp - 1] * stack[sp]
                        elif op == 5:  # NEG
                            stack[sp - 1] = -stack[sp - 1]
                        elif op == 6:  # POW
                            if a == 2:
                                stack[sp - 1] = stack[sp - 1] * stack[sp - 1]
                            elif a == 3:
                                v = stack[sp - 1]
                                stack[sp - 1] = v * v * v
                            else:
                                stack[sp - 1] = pow(stack[sp - 1], <double> a)
                        elif op == 7:  # EXP
                            stack[sp - 1] = exp(stack[sp - 1])
                        elif op == 8:  # SIN
                            stack[sp - 1] = sin(stack[sp - 1])
                        elif op == 9:  # COS
                            stack[sp - 1] = cos(stack[sp - 1])
                        else:          # TAN
                            stack[sp - 1] = tan(stack[sp - 1])
                    out[p, j] = stack[0]
    finally:
        free(stack)
    return out_arr
