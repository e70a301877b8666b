"""Image-dependent convex kernel regularizer and its Hessian.

Given the convolution spectrum of the blurry image, the regularizer value at
a kernel K is sum_i ||K (x) kappa_i||_F^2 / sigma_i^2, a quadratic form
vec(K)^T H vec(K). Its minimizer over the simplex approximates the true
blur kernel without any knowledge of the sharp image.
"""

from dataclasses import dataclass

import numpy as np

from .tensorops import as_image, conv2d_full, toeplitz_gram, vectorize

SIGMA_CLAMP_REL = 1e-12


@dataclass(frozen=True)
class RegularizerHessian:
    m1: int
    m2: int
    matrix: np.ndarray        # (m1*m2, m1*m2), symmetric positive definite
    spectrum: object          # ConvSpectrum the Hessian was built from
    clamp_count: int = 0      # eigenvalues clamped up to SIGMA_CLAMP_REL*sigma_max


def build_hessian(spec, m1, m2):
    """Assemble H = sum_i A(kappa_i)^T A(kappa_i) / sigma_i^2.

    Near-zero singular values are clamped to SIGMA_CLAMP_REL * sigma_max so
    H stays finite; the clamped directions are the ones the data most
    strongly forbids, and the count is reported on the result.

    Accumulation runs in fixed index order with Kahan compensation, so the
    result is deterministic run to run.
    """
    if m1 < 1 or m2 < 1:
        raise ValueError("kernel sizes must be >= 1")
    n = spec.s1 * spec.s2
    if len(spec.sigmas) != n or spec.vectors.shape != (n, spec.s1, spec.s2):
        raise ValueError("incomplete spectrum: all s1*s2 pairs are required")
    floor = SIGMA_CLAMP_REL * spec.sigma_max
    clamped = int(np.count_nonzero(spec.sigmas < floor))
    d = m1 * m2
    h = np.zeros((d, d))
    comp = np.zeros((d, d))
    for i in range(n):
        sig = max(float(spec.sigmas[i]), floor)
        term = toeplitz_gram(spec.vectors[i], m1, m2) / (sig * sig)
        y = term - comp
        t = h + y
        comp = (t - h) - y
        h = t
    h = 0.5 * (h + h.T)
    return RegularizerHessian(m1, m2, h, spec, clamped)


def h_value(hess, k):
    """Quadratic form vec(K)^T H vec(K)."""
    k = as_image(k)
    if k.shape != (hess.m1, hess.m2):
        raise ValueError(f"kernel shape {k.shape} does not match "
                         f"({hess.m1}, {hess.m2}) Hessian")
    v = vectorize(k)
    return float(v @ hess.matrix @ v)


def h_value_direct(spec, k):
    """Reference evaluation by the defining sum; oracle for h_value."""
    k = as_image(k)
    floor = SIGMA_CLAMP_REL * spec.sigma_max
    total = 0.0
    for i in range(len(spec.sigmas)):
        sig = max(float(spec.sigmas[i]), floor)
        total += np.sum(conv2d_full(k, spec.vectors[i]) ** 2) / (sig * sig)
    return total


def necessary_condition_check(spec_b, sigma_min_i0, k):
    """Per-index slacks sigma_i(B)/sigma_min(I0) - ||K (x) kappa_i||_F.

    All slacks are >= 0 (up to roundoff) when K is the true kernel of a
    noiseless blur; a violation certifies K cannot be the true kernel.
    """
    k = as_image(k)
    if sigma_min_i0 <= 0:
        raise ValueError("sigma_min of the sharp image must be positive")
    slacks = np.empty(len(spec_b.sigmas))
    for i in range(len(spec_b.sigmas)):
        norm = np.sqrt(np.sum(conv2d_full(k, spec_b.vectors[i]) ** 2))
        slacks[i] = spec_b.sigmas[i] / sigma_min_i0 - norm
    return slacks
