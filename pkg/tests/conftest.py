import os
import sys

from hypothesis import settings

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

settings.register_profile("deterministic", derandomize=True, max_examples=150)
settings.load_profile("deterministic")
