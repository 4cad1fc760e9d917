"""Compiled inner loops for the Monte Carlo engine.

``advance`` draws observations and applies one stepper for ``n_steps``
consecutive samples.  Randomness is consumed in exactly the order used by
:func:`ino_pca.spiked_model.sample_observation` (``c`` first, then the ``p``
noise entries), so the compiled engine and the pure-numpy reference engine see
the same stream.  Keep the arithmetic here in sync with ``algorithms.py``.
"""

from __future__ import annotations

import math

import numba
import numpy as np

KIND_CODES = {"ino": 0, "reg": 1, "oja": 2, "krasulina": 3, "ada-ino": 4, "ccipca": 5, "adaoja": 6}

OK = 0
DEGENERATE = 1


@numba.njit(cache=True, nogil=True)
def advance(kind, x, lam, xi, omega, param, acc, k0, n_steps, rng, lam_floor):
    """Run ``n_steps`` updates in place on ``x``.

    Returns ``(status, k, lam, acc)`` where ``k`` is the number of samples
    absorbed so far; on ``DEGENERATE`` it is the index of the failing step.
    """
    p = x.size
    y = np.empty(p)
    s = math.sqrt(omega / p)
    k = k0
    for _ in range(n_steps):
        c = rng.standard_normal()
        sc = s * c
        yx = 0.0
        yy = 0.0
        xix = 0.0
        for i in range(p):
            yi = sc * xi[i] + rng.standard_normal()
            y[i] = yi
            yx += yi * x[i]
            yy += yi * yi
            xix += xi[i] * x[i]
        k += 1
        xx = 0.0
        if kind == 0 or kind == 4:
            if not lam > lam_floor:
                return DEGENERATE, k - 1, lam, acc
            tau = param
            if kind == 4:
                q = xix / (p * lam)
                tau = lam * (omega * (1.0 - q * q) / (omega * q * q + 1.0))
            a = tau / p
            g = yx / lam
            for i in range(p):
                xn = x[i] + a * (y[i] * g - x[i])
                x[i] = xn
                xx += xn * xn
            lam = math.sqrt(xx) / math.sqrt(p)
        elif kind == 1:
            a = param / p
            for i in range(p):
                xn = x[i] + a * (y[i] * yx - lam * x[i])
                x[i] = xn
                xx += xn * xn
            lam = math.sqrt(xx) / math.sqrt(p)
        elif kind == 2 or kind == 6:
            if kind == 2:
                a = param / p
                g = yx
            else:
                g = yx / p
                acc += yy * g * g
                if acc == 0.0:
                    continue
                a = math.sqrt(p) * (param / math.sqrt(acc))
            for i in range(p):
                xn = x[i] + a * (y[i] * g)
                x[i] = xn
                xx += xn * xn
            if xx == 0.0:
                return DEGENERATE, k, lam, acc
            scale = math.sqrt(p) / math.sqrt(xx)
            for i in range(p):
                x[i] *= scale
            lam = 1.0
        elif kind == 3:
            x2 = 0.0
            for i in range(p):
                x2 += x[i] * x[i]
            if x2 == 0.0:
                return DEGENERATE, k - 1, lam, acc
            a = param / p
            r = yx * yx / x2
            for i in range(p):
                xn = x[i] + a * (y[i] * yx - r * x[i])
                x[i] = xn
                xx += xn * xn
            lam = math.sqrt(xx) / math.sqrt(p)
        else:
            if k == 1:
                for i in range(p):
                    x[i] = y[i]
                lam = math.sqrt(yy) / math.sqrt(p)
                continue
            v2 = 0.0
            for i in range(p):
                v2 += x[i] * x[i]
            if v2 == 0.0:
                return DEGENERATE, k - 1, lam, acc
            keep = (k - 1.0 - param) / k
            gain = (1.0 + param) / k
            h = yx / math.sqrt(v2)
            for i in range(p):
                xn = keep * x[i] + gain * (y[i] * h)
                x[i] = xn
                xx += xn * xn
            lam = math.sqrt(xx) / math.sqrt(p)
    return OK, k, lam, acc
