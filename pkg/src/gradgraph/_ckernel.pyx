# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Packed float tape interpreter, compiled.

Mirror of ``gradgraph._pykernel``: same opcodes, same operation order in
the integer-power loop, same error codes, so both kernels produce
identical bits. Slot ``i`` is written by instruction ``i``.
"""

from libc.math cimport exp as c_exp, log as c_log


cdef inline double _powi(double base, long long e) noexcept nogil:
    cdef double r = 1.0
    cdef double b = base
    while e:
        if e & 1:
            r *= b
        b *= b
        e >>= 1
    return r


def run(const int[::1] ops, const long long[::1] a, const long long[::1] b,
        const double[::1] consts, const double[::1] inputs, double[::1] slots):
    """Execute the instruction arrays. Returns 0, or ``(code, index)`` on a
    domain error at instruction ``index``."""
    cdef Py_ssize_t i
    cdef Py_ssize_t n = ops.shape[0]
    cdef int op
    cdef double x
    cdef long long k
    for i in range(n):
        op = ops[i]
        if op == 2:  # add
            slots[i] = slots[a[i]] + slots[b[i]]
        elif op == 3:  # mul
            slots[i] = slots[a[i]] * slots[b[i]]
        elif op == 0:  # load input
            slots[i] = inputs[a[i]]
        elif op == 1:  # load const
            slots[i] = consts[a[i]]
        elif op == 4:  # integer power
            x = slots[a[i]]
            k = b[i]
            if k < 0:
                if x == 0.0:
                    return (2, i)
                slots[i] = 1.0 / _powi(x, -k)
            else:
                slots[i] = _powi(x, k)
        elif op == 5:  # exp
            slots[i] = c_exp(slots[a[i]])
        else:  # log
            x = slots[a[i]]
            if x <= 0.0:
                return (1, i)
            slots[i] = c_log(x)
    return 0
