#!/usr/bin/env python3
"""
Verify run defaults and that every bundled experiment file resolves
"""

from pathlib import Path

from config import config
from errors import ConfigError
from experiment_config import load_experiment


def check_experiments(directory: Path = None):
    """Load every *.cfg file; returns (loaded names, {name: error message})"""
    directory = directory or config.EXPERIMENTS_DIR
    loaded, failed = [], {}
    for path in sorted(Path(directory).glob('*.cfg')):
        try:
            exp = load_experiment(path)
            loaded.append(f"{path.name} ({exp.kind})")
        except ConfigError as e:
            failed[path.name] = str(e)
    return loaded, failed


def main():
    config.print_config()
    print()

    all_good = True
    errors = config.validate()
    if errors:
        all_good = False
        for error in errors:
            print(f"❌ {error}")
    else:
        print("✅ Run defaults are valid")

    loaded, failed = check_experiments()
    for name in loaded:
        print(f"✅ {name}")
    for name, message in failed.items():
        print(f"❌ {message}")
        all_good = False
    if not loaded and not failed:
        print(f"⚠️  No experiment files found in {config.EXPERIMENTS_DIR}")

    print("=" * 60)
    if all_good:
        print("✅ ALL CONFIGURATION CHECKS PASSED")
    else:
        print("❌ SOME CONFIGURATION ISSUES DETECTED")
    print("=" * 60)
    return 0 if all_good else 1


if __name__ == "__main__":
    exit(main())
