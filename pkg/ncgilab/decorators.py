from functools import wraps
from threading import Lock


def memoize_per_instance(func):
    """Decorator that memoizes a method of an immutable object, per instance
    and per positional argument tuple.

    Thread-safe: the cache is guarded by a lock owned by the decorated
    function; the evaluation itself runs outside the lock, so two threads
    may compute the same value once each, and the first result stored wins.
    Method arguments must be hashable.
    """
    func._lock = Lock()
    cache_name = '_{}_memo'.format(func.__name__)

    @wraps(func)
    def wrapper(self, *args):
        with func._lock:
            cache = self.__dict__.setdefault(cache_name, {})
            if args in cache:
                return cache[args]

        res = func(self, *args)

        with func._lock:
            return cache.setdefault(args, res)

    return wrapper
