import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(HERE, "..", "src"))


def config_path(name):
    return os.path.join(HERE, "..", "configs", name)


def print_summary(rows, keys):
    print("  ".join(f"{k:>12}" for k in keys))
    for r in rows:
        print("  ".join(f"{r[k]:>12.5g}" if isinstance(r[k], float) else f"{r[k]:>12}" for k in keys))
