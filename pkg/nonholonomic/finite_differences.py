"""
Central finite differences used to fill in omitted derivative callbacks and
to audit supplied ones.
"""
import numpy as np

# cbrt(machine eps): balances truncation and roundoff for a central
# difference of an analytic first derivative.
SECOND_DERIVATIVE_STEP = np.cbrt(np.finfo(float).eps)


def step_sizes(x, scale):
    x = np.asarray(x, dtype=float)
    return scale * (1.0 + np.abs(x))


def gradient(func, x, scale):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    steps = step_sizes(x, scale)
    grad = np.zeros(x.size)
    for i in range(x.size):
        forward = x.copy()
        backward = x.copy()
        forward[i] += steps[i]
        backward[i] -= steps[i]
        grad[i] = (func(forward) - func(backward)) / (2.0 * steps[i])
    return grad


def jacobian(func, x, scale=SECOND_DERIVATIVE_STEP):
    """
    Central-difference Jacobian of an array-valued function.

    Returns an array of shape ``func(x).shape + (x.size,)`` so that
    ``J[..., j]`` is the derivative with respect to ``x[j]``.
    """
    x = np.asarray(x, dtype=float)
    base = np.asarray(func(x), dtype=float)
    out = np.zeros(base.shape + (x.size,))
    steps = step_sizes(x, scale)
    for j in range(x.size):
        forward = x.copy()
        backward = x.copy()
        forward[j] += steps[j]
        backward[j] -= steps[j]
        out[..., j] = (
            np.asarray(func(forward), dtype=float) - np.asarray(func(backward), dtype=float)
        ) / (2.0 * steps[j])
    return out


def max_relative_error(approx, exact):
    """max |approx - exact| / (1 + |exact|), componentwise."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if approx.size == 0:
        return 0.0
    return float(np.max(np.abs(approx - exact) / (1.0 + np.abs(exact))))


def five_point_derivative(values, h):
    """
    Fourth-order central derivative of equally spaced samples along axis 0.

    Only interior points with two neighbours on each side are returned; the
    result has ``len(values) - 4`` rows, aligned with ``values[2:-2]``.
    """
    values = np.asarray(values, dtype=float)
    if len(values) < 5:
        return np.zeros((0,) + values.shape[1:])
    return (values[:-4] - 8.0 * values[1:-3] + 8.0 * values[3:-1] - values[4:]) / (12.0 * h)
