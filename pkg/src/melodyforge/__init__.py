"""melodyforge: deterministic melody synthesis and shifted-dataset construction.

The package renders 4-second, 16 kHz mono melodies whose musical key (major
vs minor) is the prediction label, and builds train/val/test datasets with
user-controlled confounding between key and timbre: domain shift (sine
gradually replaced by square) and sample selection bias (timbre correlated
with the label at a chosen strength).

Everything is seeded and reproducible: the same seed always yields the same
symbolic melody, the same rendered samples, and byte-identical WAV files.
"""

GENERATOR_VERSION = "1.0.0"
MANIFEST_FORMAT_VERSION = 1

__version__ = GENERATOR_VERSION
