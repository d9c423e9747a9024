"""Packed float tape interpreter, pure Python.

This is the fallback twin of the compiled extension ``gradgraph._ckernel``
and must match it bit for bit: same opcodes, same operation order inside
the integer-power loop, same error codes. Slot ``i`` is written by
instruction ``i``.
"""

import math

LOAD_INPUT = 0
LOAD_CONST = 1
ADD = 2
MUL = 3
POW = 4
EXP = 5
LOG = 6

ERR_LOG_DOMAIN = 1
ERR_ZERO_NEG_POW = 2


def _powi(base, e):
    r = 1.0
    b = base
    while e:
        if e & 1:
            r *= b
        b *= b
        e >>= 1
    return r


def run(ops, a, b, consts, inputs, slots):
    """Execute the instruction arrays. Returns 0, or ``(code, index)`` on a
    domain error at instruction ``index``."""
    for i in range(len(ops)):
        op = ops[i]
        if op == ADD:
            slots[i] = slots[a[i]] + slots[b[i]]
        elif op == MUL:
            slots[i] = slots[a[i]] * slots[b[i]]
        elif op == LOAD_INPUT:
            slots[i] = inputs[a[i]]
        elif op == LOAD_CONST:
            slots[i] = consts[a[i]]
        elif op == POW:
            x = slots[a[i]]
            k = b[i]
            if k < 0:
                if x == 0.0:
                    return (ERR_ZERO_NEG_POW, i)
                slots[i] = 1.0 / _powi(x, -k)
            else:
                slots[i] = _powi(x, k)
        elif op == EXP:
            try:
                slots[i] = math.exp(slots[a[i]])
            except OverflowError:
                slots[i] = math.inf
        else:
            x = slots[a[i]]
            if x <= 0.0:
                return (ERR_LOG_DOMAIN, i)
            slots[i] = math.log(x)
    return 0
