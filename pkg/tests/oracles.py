"""Independent reference implementations used to check the package.

None of these import the code paths they check.
"""

import itertools
import math

import numpy as np


def brute_force_scores(pred_tags, gold_tags, classes):
    """Per-class F1, support-weighted F1 and accuracy by direct enumeration.

    ``pred_tags``/``gold_tags`` are flat, equally long tag lists.
    """
    n = len(gold_tags)
    f1 = {}
    support = {}
    for a in classes:
        tp = fp = fn = 0
        for p, g in zip(pred_tags, gold_tags):
            if p == a and g == a:
                tp += 1
            elif p == a and g != a:
                fp += 1
            elif p != a and g == a:
                fn += 1
        support[a] = tp + fn
        f1[a] = 0.0 if tp + fp + fn == 0 else (2 * tp) / (2 * tp + fp + fn)
    weighted = sum(support[a] * f1[a] for a in classes) / n
    acc = sum(1 for p, g in zip(pred_tags, gold_tags) if p == g) / n
    return f1, weighted, acc


def enumerate_windows(n, lo=1, hi=None):
    """All (size, start) pairs with lo <= size <= min(hi, n), by exhaustive search."""
    hi = n if hi is None else hi
    out = []
    for s, e in itertools.combinations(range(n + 1), 2):
        w = e - s
        if lo <= w <= hi:
            out.append((w, s))
    return sorted(out)


def central_difference(f, x, index, h=1e-4):
    """d f / d x[index] by central differences; ``x`` is modified and restored."""
    old = x[index]
    x[index] = old + h
    fp = f()
    x[index] = old - h
    fm = f()
    x[index] = old
    return (fp - fm) / (2 * h)


def relative_error(a, b, floor=1e-8):
    return abs(a - b) / max(abs(a), abs(b), floor)


def adam_reference(theta, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Scalar Adam written from the textbook update rule."""
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1**t)
        vh = v / (1 - b2**t)
        theta = theta - lr * mh / (math.sqrt(vh) + eps)
    return theta


def softmax_reference(row):
    """Softmax in extended precision via math.fsum on shifted exponents."""
    row = [float(x) for x in row]
    mx = max(row)
    ex = [math.exp(x - mx) for x in row]
    s = math.fsum(ex)
    return np.array([e / s for e in ex])
