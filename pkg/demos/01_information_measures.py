"""
Information measures on discretized bands
=========================================

Entropy, mutual information and symmetric uncertainty, computed from
histograms of quantized 16-bit samples.
"""
import numpy as np

from hsiband.infotheory import DiscretizedBand, entropy, joint_histogram, mutual_information, \
    quantize_band, symmetric_uncertainty

rng = np.random.default_rng(0)

##############################################################################
# Quantization maps the 16-bit range onto ``n_levels`` equal-width bins.

raw = rng.integers(0, 65536, size=10_000)
band = quantize_band(raw, n_levels=8)
print("bin counts:", band.histogram())
print("entropy of 8 uniform bins: %.4f bits" % entropy(band.histogram()))

##############################################################################
# A noisy copy shares most of its information with the original, an
# independent draw shares almost none.

copy = quantize_band(np.clip(raw + rng.integers(-2000, 2000, raw.size), 0, 65535), 8)
other = quantize_band(rng.integers(0, 65536, size=raw.size), 8)

for name, b in [("noisy copy", copy), ("independent", other)]:
    mi = mutual_information(joint_histogram(band, b))
    print(f"{name:12s} MI {mi:.4f} bits   SU {symmetric_uncertainty(band, b):.4f}")

##############################################################################
# SU is normalized: a relabeled copy scores exactly one.

a = DiscretizedBand(np.array([0, 1, 1, 2, 2, 2]), 3)
b = DiscretizedBand(np.array([2, 0, 0, 1, 1, 1]), 3)
print("SU of a relabeled copy:", symmetric_uncertainty(a, b))
