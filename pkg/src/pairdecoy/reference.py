"""Reference values targeted by the validation suite and the reports.

These are the quantities this library is expected to reproduce.  Where an
exact derivation disagrees with a reference value, the derived value is
reported alongside it (see :mod:`pairdecoy.discrepancy`); reference values
are never substituted for computed ones.
"""

# Stage probabilities of the two-pair splitting attack.
POST_SELECTION_PROBABILITY = 0.25
FIRST_PROJECTION_PROBABILITY = 0.75
SECOND_PROJECTION_PROBABILITY = 0.40
OVERALL_CONDITIONAL_PROBABILITY = 0.30

# Splitting-attack-limited security distance at lam = 0.1, k = 0.2 dB/km.
PNS_LIMIT_DISTANCE_KM = 37.4

# Maximum secure distances of the key-rate comparison and their loss gap.
NO_DECOY_DISTANCE_KM = 18.0
THREE_INTENSITY_DISTANCE_KM = 40.0
LOSS_GAP_DB = 4.4

# Default operating point of the comparison.
DEFAULT_SIGNAL_INTENSITY = 0.1
DEFAULT_DECOY_INTENSITY = 0.01
DEFAULT_LOSS_DB_PER_KM = 0.2
DEFAULT_DARK_COUNT = 1e-6
DEFAULT_EC_INEFFICIENCY = 1.2
DEFAULT_SIFTING_FACTOR = 0.5
