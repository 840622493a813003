"""
Configuration for the temporal constraint toolkit.
Values can be overridden through environment variables.
"""

import os

# Largest relation arity accepted by the public API. Orbit enumeration grows
# with the ordered Bell numbers, so anything above 10 is impractical.
ARITY_CAP = int(os.environ.get('TEMPORAL_ARITY_CAP', 10))

# Brute-force oracles enumerate every weak order / region tree
BRUTE_CSP_VAR_CAP = int(os.environ.get('TEMPORAL_BRUTE_CSP_VAR_CAP', 8))
BRUTE_QCSP_VAR_CAP = 7

DEFAULT_SEED = int(os.environ.get('TEMPORAL_SEED', 20240601))
FUZZ_WORKERS = int(os.environ.get('TEMPORAL_FUZZ_WORKERS', 1))

LOG_FILE = os.environ.get('TEMPORAL_LOG_FILE') or None
