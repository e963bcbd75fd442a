"""Kernel backend selection: compiled extension if available, python fallback.

Set FPE_BACKEND=py to force the fallback; FPE_THREADS caps worker count for
the pairwise-distance kernels (results are bitwise independent of the thread
count; cells are disjoint).
"""

from __future__ import annotations

import os

from . import _pykernels

_impl = _pykernels
if os.environ.get("FPE_BACKEND", "").lower() not in ("py", "python"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

SystemPack = _pykernels.SystemPack

STATUS_LIMIT = _pykernels.STATUS_LIMIT
STATUS_SIGMA = _pykernels.STATUS_SIGMA
STATUS_DOMAIN = _pykernels.STATUS_DOMAIN
STATUS_FOLD = _pykernels.STATUS_FOLD
STATUS_STALL = _pykernels.STATUS_STALL
STATUS_STOPCOORD = _pykernels.STATUS_STOPCOORD


def backend_name() -> str:
    return _impl.BACKEND_NAME


def thread_count() -> int:
    env = os.environ.get("FPE_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def flow_segment(*args, **kwargs):
    return _impl.flow_segment(*args, **kwargs)


def slide_segment(*args, **kwargs):
    return _impl.slide_segment(*args, **kwargs)


def pair_rhos(P, spu, wmat, threads: int | None = None):
    return _impl.pair_rhos(P, spu, wmat, threads or thread_count())


def pair_rhos_sym(pats, wmat, threads: int | None = None):
    return _impl.pair_rhos_sym(pats, wmat, threads or thread_count())
