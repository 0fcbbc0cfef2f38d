import os
import sys

# ctest points this at the build tree; an editable install would otherwise take precedence.
_build = os.environ.get("CSMORSE_BUILD_PYTHONPATH")
if _build:
    sys.meta_path[:] = [f for f in sys.meta_path if not type(f).__module__.startswith("_editable_skbc_")]
    sys.path.insert(0, _build)
