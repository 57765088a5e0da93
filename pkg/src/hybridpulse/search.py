"""Golden-section line search used by the gap finder and the optimizers."""

import math

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def golden_minimize(f, a, b, xtol=1e-10, max_iter=400):
    """Minimize a unimodal scalar function on [a, b].

    Returns (x_min, f_min). The bracket shrinks by 1/phi per step, so the
    number of evaluations is fixed by xtol; no derivative information is
    used and f is never evaluated outside [a, b].
    """
    a, b = (a, b) if a <= b else (b, a)
    h = b - a
    if h <= xtol:
        x = 0.5 * (a + b)
        return x, f(x)
    n = min(max_iter, int(math.ceil(math.log(xtol / h) / math.log(_INV_PHI))))
    c = a + _INV_PHI2 * h
    d = a + _INV_PHI * h
    fc = f(c)
    fd = f(d)
    for _ in range(n):
        if fc < fd:
            b, d, fd = d, c, fc
            h *= _INV_PHI
            c = a + _INV_PHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h *= _INV_PHI
            d = a + _INV_PHI * h
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def golden_maximize(f, a, b, xtol=1e-10, max_iter=400):
    """Maximize a unimodal scalar function on [a, b]; returns (x_max, f_max)."""
    x, fneg = golden_minimize(lambda t: -f(t), a, b, xtol=xtol, max_iter=max_iter)
    return x, -fneg
