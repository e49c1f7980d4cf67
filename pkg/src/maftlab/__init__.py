"""maftlab: desk-scale laboratory for multilingual speech SSL.

Corpus normalization, activity-based segmentation, temperature-balanced
sampling, discrete-unit targets, masked-prediction pretraining in three
construction modes, and SLID/ASR fine-tuning with the matching evaluation
protocol.
"""

__version__ = "0.1.0"
