"""Complex DFT/FFT for arbitrary vector lengths.

``fft_forward`` evaluates the unnormalized forward transform

    X_k = sum_{n=0}^{N-1} x_n * exp(-i 2 pi k n / N)

in O(N log N) for every length, composite or prime: composite lengths are
handled by recursive mixed-radix decimation, prime lengths above a small
threshold by Bluestein's chirp-z reduction to a power-of-two convolution.
No implicit zero padding is ever applied; the output length always equals
the input length. ``dft_direct`` evaluates the same sum literally in
O(N^2) and serves as the verification oracle for ``fft_forward``.

All arithmetic runs in double precision (complex128) regardless of the
input dtype.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ValidationError

# Prime lengths up to this bound are transformed by a direct O(p^2) matrix
# product; larger primes go through Bluestein. The bound is a constant, so
# it does not affect the O(N log N) guarantee.
_DIRECT_PRIME_MAX = 31


def _as_complex_vector(values, name: str = "input") -> np.ndarray:
    arr = np.asarray(values, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} must have length >= 1")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValidationError(f"{name} contains non-finite components")
    return arr


def _smallest_prime_factor(n: int) -> int:
    if n % 2 == 0:
        return 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return n


@lru_cache(maxsize=256)
def _dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp((-2j * np.pi / n) * np.outer(k, k))


@lru_cache(maxsize=256)
def _twiddles(n: int, r: int) -> np.ndarray:
    # W_N^{s k1} for s in [0, r), k1 in [0, n/r)
    m = n // r
    s = np.arange(r)[:, None]
    k1 = np.arange(m)[None, :]
    return np.exp((-2j * np.pi / n) * (s * k1))


@lru_cache(maxsize=64)
def _chirp(n: int) -> np.ndarray:
    # exp(-i pi k^2 / n); the exponent is periodic in k^2 mod 2n, which keeps
    # the argument small and exact for any n.
    k = np.arange(n, dtype=np.int64)
    return np.exp((-1j * np.pi / n) * ((k * k) % (2 * n)))


@lru_cache(maxsize=64)
def _bluestein_kernel(n: int) -> tuple[int, np.ndarray]:
    # Spectrum of the circular chirp filter, padded to a power of two.
    size = 1 << (2 * n - 1).bit_length()
    b = np.zeros(size, dtype=np.complex128)
    wc = np.conj(_chirp(n))
    b[:n] = wc
    if n > 1:
        b[-(n - 1):] = wc[1:][::-1]
    return size, _fft_batch(b[None, :])[0]


def _fft_batch(x: np.ndarray) -> np.ndarray:
    """Transform each row of a (batch, n) complex128 array."""
    n = x.shape[1]
    if n == 1:
        return x.copy()
    r = _smallest_prime_factor(n)
    if r == n:
        if n <= _DIRECT_PRIME_MAX:
            return x @ _dft_matrix(n).T
        return _bluestein_batch(x)
    m = n // r
    # Decimation in time: subsequence s holds x[r*j + s], j in [0, m).
    sub = np.ascontiguousarray(x.reshape(x.shape[0], m, r).transpose(0, 2, 1))
    f = _fft_batch(sub.reshape(-1, m)).reshape(x.shape[0], r, m)
    g = f * _twiddles(n, r)
    # Combine with an r-point DFT across the subsequence axis; the flat
    # output index is k2 * m + k1.
    if r == 2:
        out = np.empty_like(g)
        out[:, 0, :] = g[:, 0, :] + g[:, 1, :]
        out[:, 1, :] = g[:, 0, :] - g[:, 1, :]
    else:
        out = np.einsum("ks,bsm->bkm", _dft_matrix(r), g)
    return out.reshape(x.shape[0], n)


def _bluestein_batch(x: np.ndarray) -> np.ndarray:
    n = x.shape[1]
    size, kernel = _bluestein_kernel(n)
    w = _chirp(n)
    a = np.zeros((x.shape[0], size), dtype=np.complex128)
    a[:, :n] = x * w
    conv = _fft_batch(_fft_batch(a).conj() * kernel.conj()).conj() / size
    return conv[:, :n] * w


def fft_forward(values) -> np.ndarray:
    """Forward DFT of a complex vector, computed in O(N log N).

    Accepts any 1-D sequence of real or complex numbers and returns a
    complex128 array of the same length. Raises ``ValidationError`` on
    empty or non-finite input.
    """
    x = _as_complex_vector(values)
    return _fft_batch(x[None, :])[0]


def dft_direct(values) -> np.ndarray:
    """Literal O(N^2) evaluation of the DFT sum; oracle for ``fft_forward``.

    The full twiddle matrix is rebuilt on every call so the cost is the
    textbook quadratic one, never amortized.
    """
    x = _as_complex_vector(values)
    n = x.size
    k = np.arange(n)
    matrix = np.exp((-2j * np.pi / n) * np.outer(k, k))
    return matrix @ x


def amplitude_spectrum(spectrum) -> np.ndarray:
    """Per-component amplitudes sqrt(re^2 + im^2) of a complex spectrum.

    Output is a float64 array of the same length with every entry >= 0.
    """
    c = _as_complex_vector(spectrum, name="spectrum")
    return np.hypot(c.real, c.imag)
