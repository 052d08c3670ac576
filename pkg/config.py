"""
Configuration module for the Chen-Fliess expansion toolkit
Loads run defaults from .env file and provides centralized config access
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file explicitly
_env_path = Path(__file__).parent / '.env'
load_dotenv(dotenv_path=_env_path, override=True)


def _flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() not in ('0', 'false', 'no', 'off')


class Config:
    """Central configuration class for expansion experiments"""

    # ==================== Monte Carlo Defaults ====================
    SEED = int(os.getenv('CF_SEED', '20240601'))
    N_PATHS = int(os.getenv('CF_N_PATHS', '10000'))
    N_STEPS = int(os.getenv('CF_N_STEPS', '512'))
    SUBSTEP_RATIO = int(os.getenv('CF_SUBSTEP_RATIO', '1'))

    # Parallelism never changes results, only wall time
    WORKERS = int(os.getenv('CF_WORKERS', '1'))
    CHUNK_SIZE = int(os.getenv('CF_CHUNK_SIZE', '256'))
    SHOW_PROGRESS = _flag('CF_SHOW_PROGRESS', '1')

    # ==================== Functional Derivatives ====================
    TIME_STEP_FRACTION = float(os.getenv('CF_TIME_STEP_FRACTION', '1e-3'))  # h = fraction * T
    SPACE_STEP = float(os.getenv('CF_SPACE_STEP', '1e-4'))  # scaled by max(1, |x_t|)
    MAX_NUMERIC_DEPTH = 2  # words this long or shorter may fall back to finite differences

    # ==================== Acceptance Tolerances ====================
    SLOPE_TOLERANCE = float(os.getenv('CF_SLOPE_TOLERANCE', '0.25'))
    CONFIDENCE_LEVEL = float(os.getenv('CF_CONFIDENCE_LEVEL', '0.95'))
    RANK_TOLERANCE = float(os.getenv('CF_RANK_TOLERANCE', '1e-10'))
    SEPARATION_TOLERANCE = float(os.getenv('CF_SEPARATION_TOLERANCE', '1e-9'))
    EXACT_EXPANSION_FLOOR = 1e-12  # rms below this counts as an exact expansion

    # ==================== Directory Configuration ====================
    BASE_DIR = Path(__file__).parent
    OUTPUT_DIR = Path(os.getenv('CF_OUTPUT_DIR', str(BASE_DIR / 'outputs')))
    EXPERIMENTS_DIR = BASE_DIR / 'experiments'

    @classmethod
    def validate(cls):
        """Validate that configuration values are usable"""
        errors = []

        if cls.N_PATHS < 2:
            errors.append(f"CF_N_PATHS must be at least 2, got {cls.N_PATHS}")

        if cls.N_STEPS < 1:
            errors.append(f"CF_N_STEPS must be at least 1, got {cls.N_STEPS}")

        if cls.SUBSTEP_RATIO < 1:
            errors.append(f"CF_SUBSTEP_RATIO must be at least 1, got {cls.SUBSTEP_RATIO}")

        if cls.WORKERS < 1:
            errors.append(f"CF_WORKERS must be at least 1, got {cls.WORKERS}")

        if cls.CHUNK_SIZE < 1:
            errors.append(f"CF_CHUNK_SIZE must be at least 1, got {cls.CHUNK_SIZE}")

        if not 0.0 < cls.CONFIDENCE_LEVEL < 1.0:
            errors.append(f"CF_CONFIDENCE_LEVEL must lie in (0, 1), got {cls.CONFIDENCE_LEVEL}")

        if cls.TIME_STEP_FRACTION <= 0 or cls.SPACE_STEP <= 0:
            errors.append("CF_TIME_STEP_FRACTION and CF_SPACE_STEP must be positive")

        return errors

    @classmethod
    def print_config(cls):
        """Print current configuration"""
        print("=" * 60)
        print("CHEN-FLIESS EXPANSION TOOLKIT - CONFIGURATION")
        print("=" * 60)
        print(f"\nMonte Carlo:")
        print(f"  Seed: {cls.SEED}")
        print(f"  Paths: {cls.N_PATHS}")
        print(f"  Steps: {cls.N_STEPS} (substep ratio {cls.SUBSTEP_RATIO})")
        print(f"  Workers: {cls.WORKERS} (chunk size {cls.CHUNK_SIZE})")
        print(f"\nFunctional Derivatives:")
        print(f"  Time step: {cls.TIME_STEP_FRACTION} x T")
        print(f"  Space step: {cls.SPACE_STEP}")
        print(f"\nTolerances:")
        print(f"  Slope: +/-{cls.SLOPE_TOLERANCE}")
        print(f"  Confidence level: {cls.CONFIDENCE_LEVEL}")
        print(f"  Rank tolerance: {cls.RANK_TOLERANCE}")
        print(f"\nDirectories:")
        print(f"  Base: {cls.BASE_DIR}")
        print(f"  Output: {cls.OUTPUT_DIR}")
        print(f"  Experiments: {cls.EXPERIMENTS_DIR}")
        print("=" * 60)


# Create a singleton instance
config = Config()

# Validate on import (warnings only)
validation_errors = config.validate()
if validation_errors:
    print("⚠️ Configuration Warnings:")
    for error in validation_errors:
        print(f"  - {error}")
