"""Transport-kernel selection: the compiled extension when importable, else
the pure-Python twin. Set RBIR_PURE_TRANSPORT=1 to force the fallback."""

import os

if os.environ.get("RBIR_PURE_TRANSPORT"):
    from . import _transport_py as transport
    BACKEND = "python"
else:
    try:
        from . import _transport as transport  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        from . import _transport_py as transport  # type: ignore[no-redef]
        BACKEND = "python"

solve_balanced = transport.solve_balanced
emd_cost = transport.emd_cost
