"""
Utilities for walking integer lattices.

Definition of terms used:

A lattice is either the full lattice (all integers) or the half lattice
(non-negative integers). Its kind is given by the string ``'full'`` or
``'half'``.

A window of radius ``K`` is the set of lattice points ``k`` with
``|k| <= K`` (full lattice) or ``0 <= k <= K`` (half lattice).

A shell between radii ``inner`` and ``outer`` is the set of lattice
points in the window of radius ``outer`` but not in the window of radius
``inner``. Summing over successive shells of doubling windows is how
every infinite lattice sum in this package is accumulated, always in
the same order, so that results are reproducible bit for bit.

A probe set is a finite, deterministic sample of a window used to check
entrywise identities without materializing anything.
"""
import numpy as np


def window(kind, radius):
    """
    Return the lattice points of the window of radius ``radius``, in
    increasing order.

    :param kind: (str) 'full' or 'half'
    :param radius: (int) window radius
    :return: (numpy.ndarray) int64 lattice points
    """
    lo = -radius if kind == 'full' else 0
    return np.arange(lo, radius + 1, dtype=np.int64)


def shell(kind, inner, outer):
    """
    Return the lattice points of the shell between radii ``inner`` and
    ``outer``, in increasing order.

    If ``inner`` is negative the shell is the whole window of radius
    ``outer``.

    :param kind: (str) 'full' or 'half'
    :param inner: (int) inner radius, excluded
    :param outer: (int) outer radius, included
    :return: (numpy.ndarray) int64 lattice points
    """
    if inner < 0:
        return window(kind, outer)
    pos = np.arange(inner + 1, outer + 1, dtype=np.int64)
    if kind == 'half':
        return pos
    return np.concatenate((-pos[::-1], pos))


def doubling_radii(start, cap):
    """
    Generator that enumerates radii ``start, 2*start, 4*start, ...`` up to
    and including the first radius that reaches ``cap``.

    :param start: (int) first radius (>= 1)
    :param cap: (int) largest radius worth trying
    :return: (generator) of ints
    """
    radius = max(int(start), 1)
    while True:
        yield min(radius, cap)
        if radius >= cap:
            return
        radius *= 2


def doubling_shells(kind, start, cap):
    """
    Generator that yields ``(radius, points)`` pairs where ``points`` is
    the shell added when the window grows to ``radius``. The first shell
    is the whole starting window.

    :param kind: (str) 'full' or 'half'
    :param start: (int) first radius
    :param cap: (int) last radius
    :return: (generator) of (int, numpy.ndarray)
    """
    previous = -1
    for radius in doubling_radii(start, cap):
        yield radius, shell(kind, previous, radius)
        previous = radius


def chunked(points, chunk_size):
    """
    Generator that splits a 1-d array of lattice points into consecutive
    pieces of at most ``chunk_size`` points, preserving order.

    NOTE: the pieces are views on ``points``.

    :param points: (numpy.ndarray) lattice points
    :param chunk_size: (int) maximum piece length
    :return: (generator) of numpy.ndarray
    """
    for start in range(0, len(points), chunk_size):
        yield points[start:start + chunk_size]


def probe_points(kind, radius, count=64, seed=0):
    """
    Return a deterministic probe set for the window of radius ``radius``:
    the points near the origin, a geometric ladder out to the window edge
    (both signs on the full lattice), and ``count`` seeded uniform draws.

    :param kind: (str) 'full' or 'half'
    :param radius: (int) window radius
    :param count: (int) number of random draws
    :param seed: (int) seed for the random draws
    :return: (numpy.ndarray) sorted, unique int64 lattice points
    """
    near = np.arange(0, min(radius, 8) + 1)
    ladder = np.unique(np.geomspace(1, max(radius, 1), num=24).astype(np.int64))
    lo = -radius if kind == 'full' else 0
    draws = np.random.RandomState(seed).randint(lo, radius + 1, size=count)
    pos = np.concatenate((near, ladder))
    if kind == 'full':
        pos = np.concatenate((pos, -pos))
    return np.unique(np.concatenate((pos, draws)).astype(np.int64))
