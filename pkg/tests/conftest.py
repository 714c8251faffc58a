import sys
from pathlib import Path

# make shared test helpers (oracles.py, synth.py) importable
sys.path.insert(0, str(Path(__file__).parent))
