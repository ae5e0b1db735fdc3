"""Tunable analysis parameters shared by the video and IMU pipelines."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class AnalysisParams:
    """Filter and detector settings.

    Defaults mirror the validated pipeline: Gaussian sigma of 3 samples,
    4th-order 2 Hz low-pass Butterworth, peak height threshold at
    mean + 0.8 sd, adaptive peak distance fraction 0.7. Step events use a
    fixed refractory separation in seconds instead of the adaptive distance
    (the global-extreme span is unrelated to step spacing).
    """

    sigma: float = 3.0
    butter_cutoff_hz: float = 2.0
    butter_order: int = 4
    peak_height_k: float = 0.8
    peak_dist_frac: float = 0.7
    step_min_separation_s: float = 0.3
    imu_corroboration_s: float = 0.15

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.butter_cutoff_hz <= 0:
            raise ConfigError(f"butter_cutoff_hz must be positive, got {self.butter_cutoff_hz}")
        if self.butter_order < 2 or self.butter_order % 2 != 0:
            raise ConfigError(f"butter_order must be even and >= 2, got {self.butter_order}")
        if self.peak_height_k < 0:
            raise ConfigError(f"peak_height_k must be >= 0, got {self.peak_height_k}")
        if self.peak_dist_frac <= 0:
            raise ConfigError(f"peak_dist_frac must be positive, got {self.peak_dist_frac}")
        if self.step_min_separation_s <= 0:
            raise ConfigError(
                f"step_min_separation_s must be positive, got {self.step_min_separation_s}")
        if self.imu_corroboration_s <= 0:
            raise ConfigError(
                f"imu_corroboration_s must be positive, got {self.imu_corroboration_s}")


DEFAULT_PARAMS = AnalysisParams()
