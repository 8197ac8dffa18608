"""Bracketed, safeguarded Newton iteration, vectorised over numpy arrays.

Every element carries its own bracket ``[lo, hi]`` with a sign change of ``f``.
A Newton step is taken only when it lands strictly inside the current bracket;
otherwise the element falls back to bisection. Elements are iterated until the
step is below a relative tolerance, after which one extra Newton polish step is
applied so the result sits within an ulp or two of the floating-point root.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from dsrlab.errors import BranchNotFoundError, NoConvergenceError

ArrayFunc = Callable[[np.ndarray], np.ndarray]

EPS = np.finfo(float).eps


def safeguarded_newton(
    f: ArrayFunc,
    df: ArrayFunc,
    lo,
    hi,
    x0=None,
    *,
    rtol: float = 4 * EPS,
    max_iter: int = 100,
) -> np.ndarray:
    """Find roots of ``f`` inside ``[lo, hi]`` elementwise.

    :param f: residual, evaluated on whole arrays
    :param df: derivative of ``f``
    :param lo: lower bracket ends (array-like)
    :param hi: upper bracket ends, ``f(lo)`` and ``f(hi)`` must differ in sign
    :param x0: optional starting points, defaults to the bracket midpoints
    :raises BranchNotFoundError: if some bracket has no sign change
    :raises NoConvergenceError: if some element is still unconverged after ``max_iter``
    """
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = np.minimum(lo, hi).copy(), np.maximum(lo, hi).copy()

    flo = f(lo)
    fhi = f(hi)
    exact_lo = flo == 0
    exact_hi = fhi == 0
    bad = (np.sign(flo) == np.sign(fhi)) & ~exact_lo & ~exact_hi
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise BranchNotFoundError(
            f"no sign change on [{lo[i]!r}, {hi[i]!r}] (f = {flo[i]!r}, {fhi[i]!r})"
        )

    x = 0.5 * (lo + hi) if x0 is None else np.broadcast_to(np.asarray(x0, float), lo.shape).copy()
    x = np.clip(x, lo, hi)
    x[exact_lo] = lo[exact_lo]
    x[exact_hi] = hi[exact_hi]
    done = exact_lo | exact_hi

    for _ in range(max_iter):
        if done.all():
            break
        act = ~done
        fx = f(x)
        dfx = df(x)

        # shrink the bracket around the sign change
        same_as_lo = np.sign(fx) == np.sign(flo)
        move_lo = act & same_as_lo
        move_hi = act & ~same_as_lo
        lo = np.where(move_lo, x, lo)
        flo = np.where(move_lo, fx, flo)
        hi = np.where(move_hi, x, hi)

        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - fx / dfx
        inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
        xn = np.where(inside, newton, 0.5 * (lo + hi))
        xn = np.where(fx == 0, x, xn)

        scale = np.maximum(np.abs(xn), np.finfo(float).tiny)
        conv = (fx == 0) | (inside & (np.abs(xn - x) <= rtol * scale)) | (hi - lo <= rtol * scale)
        x = np.where(act, xn, x)
        done = done | (act & conv)
    else:
        if not done.all():
            i = int(np.flatnonzero(~done)[0])
            raise NoConvergenceError(
                f"no convergence after {max_iter} iterations", (float(lo[i]), float(hi[i]))
            )

    # final polish; rejected if it leaves the bracket
    fx = f(x)
    dfx = df(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        polished = x - fx / dfx
    ok = np.isfinite(polished) & (polished >= lo) & (polished <= hi) & (fx != 0)
    x = np.where(ok, polished, x)
    return x
