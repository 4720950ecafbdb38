"""
Kernel selection.

The compiled extension is used when it imports; otherwise (or with ``APUFLAB_PURE=1``)
the numpy fallback is used. Both produce identical results on +/-1 data.
"""
import os

from . import _fallback

if os.environ.get("APUFLAB_PURE") == "1":
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "compiled" if _impl is not _fallback else "python"

smo_binary = _impl.smo_binary
smo_dense = _impl.smo_dense
greedy_challenge = _impl.greedy_challenge
