"""
modred - modally reduced representation learning for multi-channel ECG.

Subpackages:
- core: Shared utilities (errors, fatal error reporting, logging, seeds)
- numcore: Reverse-mode tensor engine, AdamW, cosine schedule, gradient checks
- mae1d: 1-D masked autoencoder and its checkpoint codec
- objectives: Reconstruction, triplet alignment and curriculum losses
- datapipe: Record formats, preprocessing, batching, synthetic hearts
- disttrain: Reference and coordinator/worker training
- evalkit: Similarity, reconstruction, MI and biometric evaluations
- cli: The ``modred`` command-line entrypoint
"""
