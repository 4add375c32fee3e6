"""Central finite differences with one optional Richardson level."""

import numpy as np


def central_diff(func, y, i, h):
    e = np.zeros_like(y)
    e[i] = h
    return (np.asarray(func(y + e)) - np.asarray(func(y - e))) / (2.0 * h)


def derivative(func, y, i, h, richardson=True):
    """d func / d y_i at ``y``.

    With ``richardson`` the h and h/2 quotients are combined as
    (4 D(h/2) - D(h)) / 3, cancelling the h^2 term.
    """
    y = np.asarray(y, dtype=float)
    d1 = central_diff(func, y, i, h)
    if not richardson:
        return d1
    d2 = central_diff(func, y, i, h / 2.0)
    return (4.0 * d2 - d1) / 3.0


def gradient(func, y, h, richardson=True):
    """Stack of partial derivatives, new leading axis indexes the direction."""
    y = np.asarray(y, dtype=float)
    return np.stack([derivative(func, y, i, h, richardson) for i in range(y.size)])
