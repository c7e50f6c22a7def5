# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel: postfix evaluator and recursive adaptive Simpson.

Same contract and same interval acceptance rule as ``_pykernel``.
"""

import numpy as np

from libc.math cimport exp, log, sqrt, sin, cos, pow, fabs, isfinite, NAN, INFINITY
from libc.stdlib cimport malloc, free

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_NEG = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_DIV = 6
    OP_POW = 7
    OP_POWI = 8
    OP_EXP = 9
    OP_LN = 10
    OP_SQRT = 11
    OP_SIN = 12
    OP_COS = 13

cdef int MIN_DEPTH = 3
cdef double ROUNDING = 128 * 2.220446049250313e-16


cdef struct Prog:
    const int* ops
    const double* args
    int n
    double* stack


cdef struct Acc:
    double value
    double error
    long leaves
    long max_leaves
    int max_depth
    int status


cdef inline double powi(double x, int m) noexcept nogil:
    cdef double r = 1.0
    cdef bint inv = m < 0
    if inv:
        m = -m
    while m:
        if m & 1:
            r *= x
        x *= x
        m >>= 1
    return 1.0 / r if inv else r


cdef inline double run(Prog* p, double x) noexcept nogil:
    cdef int i, sp = 0
    cdef int op
    cdef double* s = p.stack
    for i in range(p.n):
        op = p.ops[i]
        if op == OP_CONST:
            s[sp] = p.args[i]
            sp += 1
        elif op == OP_VAR:
            s[sp] = x
            sp += 1
        elif op == OP_NEG:
            s[sp - 1] = -s[sp - 1]
        elif op == OP_ADD:
            sp -= 1
            s[sp - 1] = s[sp - 1] + s[sp]
        elif op == OP_SUB:
            sp -= 1
            s[sp - 1] = s[sp - 1] - s[sp]
        elif op == OP_MUL:
            sp -= 1
            s[sp - 1] = s[sp - 1] * s[sp]
        elif op == OP_DIV:
            sp -= 1
            s[sp - 1] = s[sp - 1] / s[sp]
        elif op == OP_POW:
            sp -= 1
            s[sp - 1] = pow(s[sp - 1], s[sp])
        elif op == OP_POWI:
            s[sp - 1] = powi(s[sp - 1], <int> p.args[i])
        elif op == OP_EXP:
            s[sp - 1] = exp(s[sp - 1])
        elif op == OP_LN:
            if s[sp - 1] < 0:
                s[sp - 1] = NAN
            elif s[sp - 1] == 0:
                s[sp - 1] = -INFINITY
            else:
                s[sp - 1] = log(s[sp - 1])
        elif op == OP_SQRT:
            if s[sp - 1] < 0:
                s[sp - 1] = NAN
            else:
                s[sp - 1] = sqrt(s[sp - 1])
        elif op == OP_SIN:
            s[sp - 1] = sin(s[sp - 1])
        elif op == OP_COS:
            s[sp - 1] = cos(s[sp - 1])
    return s[0]


cdef class _Bound:
    """Keeps the program arrays alive while raw pointers are in use."""
    cdef int[::1] ops
    cdef double[::1] args
    cdef double* stack
    cdef Prog prog

    def __cinit__(self, program):
        self.ops = np.ascontiguousarray(program.ops, dtype=np.int32)
        self.args = np.ascontiguousarray(program.args, dtype=np.float64)
        self.stack = <double*> malloc((program.stack_size + 1) * sizeof(double))
        if self.stack == NULL:
            raise MemoryError()
        self.prog.ops = &self.ops[0]
        self.prog.args = &self.args[0]
        self.prog.n = self.ops.shape[0]
        self.prog.stack = self.stack

    def __dealloc__(self):
        free(self.stack)


def eval_points(program, xs):
    cdef _Bound bound = _Bound(program)
    arr = np.ascontiguousarray(xs, dtype=np.float64)
    flat = arr.reshape(-1)
    out = np.empty_like(flat)
    cdef double[::1] xv = flat
    cdef double[::1] ov = out
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = run(&bound.prog, xv[i])
    return out.reshape(arr.shape)


def eval_point(program, double x):
    cdef _Bound bound = _Bound(program)
    return run(&bound.prog, x)


cdef void _asr(Prog* p, Acc* acc, double lo, double hi, double f_lo, double f_mid, double f_hi,
               double whole, double eps, int depth) noexcept nogil:
    cdef double mid = 0.5 * (lo + hi)
    cdef double q1 = 0.5 * (lo + mid)
    cdef double q3 = 0.5 * (mid + hi)
    cdef double f_q1 = run(p, q1)
    cdef double f_q3 = run(p, q3)
    cdef double h, left, right, delta, scale
    if not (isfinite(f_q1) and isfinite(f_q3)):
        acc.status = 1
        return
    h = hi - lo
    left = h / 12.0 * (f_lo + 4.0 * f_q1 + f_mid)
    right = h / 12.0 * (f_mid + 4.0 * f_q3 + f_hi)
    delta = left + right - whole
    scale = h / 12.0 * (fabs(f_lo) + 4.0 * fabs(f_q1) + 2.0 * fabs(f_mid) + 4.0 * fabs(f_q3) + fabs(f_hi))
    if depth >= MIN_DEPTH and (fabs(delta) <= 15.0 * eps or fabs(delta) <= ROUNDING * scale):
        acc.value += left + right + delta / 15.0
        acc.error += fabs(delta) / 15.0
        acc.leaves += 1
        return
    if depth >= acc.max_depth or acc.leaves >= acc.max_leaves:
        acc.status = 2
        acc.value += left + right + delta / 15.0
        acc.error += fabs(delta) / 15.0
        acc.leaves += 1
        return
    _asr(p, acc, lo, mid, f_lo, f_q1, f_mid, left, 0.5 * eps, depth + 1)
    if acc.status == 1:
        return
    _asr(p, acc, mid, hi, f_mid, f_q3, f_hi, right, 0.5 * eps, depth + 1)


def simpson(program, double a, double b, double tol, int max_depth=50, long max_leaves=200000):
    """Adaptive Simpson on [a, b]; returns ``(value, error, leaves, status)``."""
    cdef _Bound bound = _Bound(program)
    cdef Acc acc
    cdef double fa, fm, fb
    acc.value = 0.0
    acc.error = 0.0
    acc.leaves = 0
    acc.max_leaves = max_leaves
    acc.max_depth = max_depth
    acc.status = 0
    with nogil:
        fa = run(&bound.prog, a)
        fm = run(&bound.prog, 0.5 * (a + b))
        fb = run(&bound.prog, b)
        if isfinite(fa) and isfinite(fm) and isfinite(fb):
            _asr(&bound.prog, &acc, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 0)
        else:
            acc.status = 1
    if acc.status == 1:
        return NAN, INFINITY, acc.leaves, 1
    return acc.value, acc.error, acc.leaves, acc.status
