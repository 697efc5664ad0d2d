import logging
import os
from concurrent.futures import ThreadPoolExecutor

from django.conf import settings

logger = logging.getLogger(__name__)


def resolve_threads(requested=None):
    """
    Worker count: the HMVP_THREADS setting (environment) wins, then the
    requested value, then the machine parallelism.

    :param requested: value of the --threads flag, if any
    :type requested: int
    """
    if settings.HMVP_THREADS and settings.HMVP_THREADS > 0:
        return int(settings.HMVP_THREADS)
    if requested and requested > 0:
        return int(requested)
    return os.cpu_count() or 1


def chunk_ranges(total, parts):
    """
    Splits range(total) into at most ``parts`` contiguous (start, stop)
    pairs of nearly equal length.
    """
    parts = max(1, min(parts, total))
    base, extra = divmod(total, parts)
    ranges = []
    start = 0
    for i in range(parts):
        stop = start + base + (1 if i < extra else 0)
        ranges.append((start, stop))
        start = stop
    return ranges


def map_chunks(func, total, threads=1):
    """
    Calls ``func(start, stop)`` on contiguous chunks of range(total) and
    returns the results in chunk order. Each chunk must only write its
    own slice of any shared output, so the result does not depend on
    scheduling.
    """
    ranges = chunk_ranges(total, threads)
    if len(ranges) <= 1:
        return [func(start, stop) for start, stop in ranges]
    with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
        return list(pool.map(lambda r: func(*r), ranges))
