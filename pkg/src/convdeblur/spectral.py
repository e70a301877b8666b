"""Convolution eigenvalues/eigenvectors of an image, sharpness, condition number.

The convolution eigenvalues of an image under a feature filter are the
singular values of the Toeplitz operator of the filtered image acting on
s1 x s2 probes; the eigenvectors are the right singular vectors reshaped.
"""

from dataclasses import dataclass

import numpy as np

from .features import DELTA, apply_filter
from .tensorops import as_image, toeplitz, toeplitz_gram


@dataclass(frozen=True)
class ConvSpectrum:
    s1: int
    s2: int
    sigmas: np.ndarray      # (s1*s2,), nonincreasing, all > 0 for nonzero input
    vectors: np.ndarray     # (s1*s2, s1, s2), unit Frobenius norm, orthonormal

    @property
    def sigma_max(self):
        return float(self.sigmas[0])

    @property
    def sigma_min(self):
        return float(self.sigmas[-1])


def conv_spectrum(img, f=DELTA, s1=None, s2=None, method="svd"):
    """All s1*s2 convolution eigenvalue/eigenvector pairs of an image.

    method='svd' decomposes the Toeplitz matrix directly (numerically
    preferable: no condition-number squaring); method='gram' goes through
    the Gram matrix, which is cheaper for large images.
    """
    img = as_image(img)
    if s1 is None or s2 is None:
        raise ValueError("sampling sizes s1, s2 are required")
    if s1 < 1 or s2 < 1:
        raise ValueError("sampling sizes must be >= 1")
    if not np.any(img):
        raise ValueError("degenerate input: zero image has no spectrum")
    feat = apply_filter(f, img)
    if not np.any(feat):
        raise ValueError("degenerate input: filtered image is identically zero")
    if method == "svd":
        a = toeplitz(feat, s1, s2)
        _, sig, vt = np.linalg.svd(a, full_matrices=False)
        vecs = vt
    elif method == "gram":
        g = toeplitz_gram(feat, s1, s2)
        w, v = np.linalg.eigh(g)
        order = np.argsort(w)[::-1]
        sig = np.sqrt(np.clip(w[order], 0.0, None))
        vecs = v[:, order].T
    else:
        raise ValueError(f"unknown method {method!r}")
    return ConvSpectrum(s1, s2, sig, vecs.reshape(s1 * s2, s1, s2))


def sharpness(img, f=DELTA, s1=None, s2=None, method="svd"):
    """Smallest convolution eigenvalue; large values mean a sharp image."""
    return conv_spectrum(img, f, s1, s2, method).sigma_min


def conv_condition(img, f=DELTA, s1=None, s2=None, method="svd"):
    """sigma_max / sigma_min of the image's convolution spectrum (>= 1)."""
    spec = conv_spectrum(img, f, s1, s2, method)
    return spec.sigma_max / spec.sigma_min
