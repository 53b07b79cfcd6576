#!/usr/bin/env python3
"""
BellNoise - Run Script
Console launcher for the bellnoise command group
"""
import sys


def check_dependencies():
    """Check if all required Python packages are installed"""
    required = ['numpy', 'scipy', 'click']
    missing = []

    for package in required:
        try:
            __import__(package)
        except ImportError:
            missing.append(package)

    return missing


def main():
    """Main entry point"""
    missing = check_dependencies()
    if missing:
        print("Missing dependencies:", file=sys.stderr)
        for dep in missing:
            print(f"   - {dep}", file=sys.stderr)
        print("\nInstall with: pip install -r requirements.txt", file=sys.stderr)
        sys.exit(1)

    from cli import run
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()
