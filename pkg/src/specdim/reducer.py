"""Truncated low-frequency amplitude representation of embedding vectors.

An input vector of dimension N is transformed to the frequency domain,
converted to its amplitude spectrum, and cut down to the first M
components (the lowest frequency indices, a plain prefix slice). The
prefix is taken from the full amplitude vector without re-scaling; for
real inputs the upper half of that vector mirrors the lower half, and the
slice deliberately ignores this redundancy (see README for the rationale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .spectral import amplitude_spectrum, fft_forward


@dataclass(frozen=True)
class ReductionSpec:
    """Dimensions of one reduction: N source components down to M.

    ``factor`` records the requested ratio when the spec was built from
    one; specs built directly from a target dimension leave it None.
    """

    source_dim: int
    target_dim: int
    factor: float | None = None

    def __post_init__(self) -> None:
        if self.source_dim < 1:
            raise ValidationError(f"source_dim must be >= 1, got {self.source_dim}")
        if not 1 <= self.target_dim <= self.source_dim:
            raise ValidationError(
                f"target_dim must be in [1, {self.source_dim}], got {self.target_dim}"
            )
        if self.factor is not None and self.factor < 1:
            raise ValidationError(f"factor must be >= 1, got {self.factor}")


@dataclass(frozen=True, eq=False)
class SpectrumVector:
    """Reduced amplitude vector plus the spec that produced it."""

    amplitudes: np.ndarray
    source_dim: int
    spec: ReductionSpec

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.float64)
        if amps.ndim != 1 or amps.size != self.spec.target_dim:
            raise ValidationError(
                f"amplitudes must have length {self.spec.target_dim}, got {amps.size}"
            )
        if not np.all(np.isfinite(amps)) or np.any(amps < 0):
            raise ValidationError("amplitudes must be finite and non-negative")
        object.__setattr__(self, "amplitudes", amps)


def make_spec(source_dim: int, factor: float) -> ReductionSpec:
    """Build a ReductionSpec from a requested reduction factor.

    The target dimension is floor(source_dim / factor); factor 5 on 768
    dimensions gives 153, factor 8 gives 96.
    """
    if source_dim < 1:
        raise ValidationError(f"source_dim must be >= 1, got {source_dim}")
    if factor < 1:
        raise ValidationError(f"factor must be >= 1, got {factor}")
    target = math.floor(source_dim / factor)
    if target < 1:
        raise ValidationError(
            f"factor {factor} reduces {source_dim} dimensions to zero"
        )
    return ReductionSpec(source_dim=source_dim, target_dim=target, factor=float(factor))


def reduce(amplitudes, spec: ReductionSpec) -> SpectrumVector:
    """Keep the first M components of a full amplitude vector, unscaled."""
    amps = np.asarray(amplitudes, dtype=np.float64)
    if amps.ndim != 1 or amps.size != spec.source_dim:
        raise ValidationError(
            f"expected {spec.source_dim} amplitudes, got {amps.size}"
        )
    return SpectrumVector(
        amplitudes=amps[: spec.target_dim].copy(),
        source_dim=spec.source_dim,
        spec=spec,
    )


def transform_embedding(vector, spec: ReductionSpec) -> SpectrumVector:
    """Full reduction pipeline: forward FFT, amplitudes, prefix slice."""
    u = np.asarray(vector, dtype=np.float64)
    if u.ndim != 1 or u.size != spec.source_dim:
        raise ValidationError(
            f"expected a vector of dimension {spec.source_dim}, got {u.size}"
        )
    if not np.all(np.isfinite(u)):
        raise ValidationError("vector contains non-finite components")
    return reduce(amplitude_spectrum(fft_forward(u)), spec)
