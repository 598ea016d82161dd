"""Gas-sensor-array analysis toolkit.

Simulates a 4-channel metal-oxide sensor array, ingests raw ADC frame
streams, and runs the full pipeline: baseline correction, smoothing,
PCA / kernel-PCA feature reduction, SVM gas identification and MLP
concentration regression, plus a reproducible experiment bench.
"""

__version__ = "0.1.0"
