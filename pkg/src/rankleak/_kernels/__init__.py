"""Hot scoring kernel with a compiled core and a pure-numpy fallback.

Set RANKLEAK_PURE_KERNELS=1 to force the fallback. Both backends accumulate
per-attribute terms in ascending attribute order, so their float64 scores
are bitwise identical.
"""

import os

from . import _pk

if os.environ.get("RANKLEAK_PURE_KERNELS"):
    _impl = _pk
    BACKEND = "pure"
else:
    try:
        from . import _ck as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pk
        BACKEND = "pure"

score_block = _impl.score_block
pure_score_block = _pk.score_block
