"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
implementations are used.  Set ``NCSIR_KERNELS=python`` to force the
fallback (``compiled`` makes a missing extension an error).
"""
import os

from . import _pykernels

_choice = os.environ.get("NCSIR_KERNELS", "auto").lower()

if _choice == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _pykernels

BACKEND = "compiled" if _impl is not _pykernels else "python"

euler_predict = _impl.euler_predict
jac_state_apply = _impl.jac_state_apply
jac_state_t_apply = _impl.jac_state_t_apply
jac_control_apply = _impl.jac_control_apply
jac_control_t_apply = _impl.jac_control_t_apply
laplacian = _impl.laplacian
helmholtz_cg = _impl.helmholtz_cg

__all__ = [
    "BACKEND", "euler_predict", "jac_state_apply", "jac_state_t_apply",
    "jac_control_apply", "jac_control_t_apply", "laplacian", "helmholtz_cg",
]
