"""Canned synthetic scenarios used by the acceptance suite, benchmarks and CLI."""
from __future__ import annotations

import math

import numpy as np

from .synth import ScenarioConfig, VehicleSpec

# signed-exponential pixel noise, mean magnitude 1/rate grey levels
CALIBRATED_NOISE_LAMBDA = 0.5


def traffic_scenario(seed: int = 2019, num_vehicles: int = 15, size: int = 512, num_frames: int = 120,
                     drift=(0.15, 0.05), noise_lambda: float = CALIBRATED_NOISE_LAMBDA) -> ScenarioConfig:
    """Straight lanes plus one turning and one circulating vehicle.

    Sizes 2x4 to 3x8, intensity offsets 40 to 70, speeds 1 to 3 px/frame.
    Vehicles move along their long axis and stay inside the frame.
    """
    rng = np.random.default_rng([seed, 0xCA75])
    vehicles = []
    lanes = np.linspace(60, size - 60, num_vehicles)
    for k in range(num_vehicles):
        length = int(rng.integers(4, 9))
        width = int(rng.integers(2, 4))
        intensity = float(rng.uniform(40, 70))
        speed = float(rng.uniform(1.0, 3.0))
        travel = speed * (num_frames - 1)
        if k == num_vehicles - 1:
            radius = 45.0
            vehicles.append(VehicleSpec(
                (width + 1, width + 1), intensity,
                {"kind": "roundabout", "center": [size * 0.75, size * 0.25], "radius": radius,
                 "start_angle": float(rng.uniform(0, 2 * math.pi)), "angular_rate": speed / radius}))
            continue
        horizontal = k % 2 == 0
        direction = 1.0 if rng.random() < 0.5 else -1.0
        lane = float(lanes[(k * 7) % num_vehicles]) + float(rng.uniform(-5, 5))
        start_along = (size - travel) / 2 if direction > 0 else (size + travel) / 2
        start_along += float(rng.uniform(-0.25, 0.25)) * max(size - travel - 40, 0)
        if horizontal:
            start, vel, dims = [start_along, lane], [direction * speed, 0.0], (length, width)
        else:
            start, vel, dims = [lane, start_along], [0.0, direction * speed], (width, length)
        if k == num_vehicles - 2:
            # right turn half way along
            turn_at = num_frames // 2
            path = {"kind": "arc", "start": start, "velocity": vel, "angular_rate": math.pi / 2 / 20,
                    "turn_start": turn_at, "turn_end": turn_at + 20}
        else:
            path = {"kind": "line", "start": start, "velocity": vel}
        vehicles.append(VehicleSpec(dims, intensity, path))
    return ScenarioConfig(size, size, num_frames, noise_lambda=noise_lambda, drift=tuple(drift),
                          vehicles=tuple(vehicles), seed=seed, block_count=12, block_contrast=25.0)


def regular_noise_scenario(seed: int = 7, size: int = 512, num_frames: int = 120,
                           drift=(0.15, 0.05), noise_lambda: float = CALIBRATED_NOISE_LAMBDA) -> ScenarioConfig:
    """Vehicle-free drifting texture with many high-contrast blocks."""
    return ScenarioConfig(size, size, num_frames, noise_lambda=noise_lambda, drift=tuple(drift),
                          seed=seed, block_count=60, block_contrast=60.0, block_size=(10, 50))


def static_noise_scenario(seed: int = 11, size: int = 512, num_frames: int = 120,
                          noise_lambda: float = CALIBRATED_NOISE_LAMBDA) -> ScenarioConfig:
    """No vehicles, no drift: only texture and pixel noise."""
    return ScenarioConfig(size, size, num_frames, noise_lambda=noise_lambda, seed=seed)
