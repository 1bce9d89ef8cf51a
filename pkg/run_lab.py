#!/usr/bin/env python
"""
Geodesic Lab Master Script

Runs a scenario file (`run_lab.py run scenarios/hyperbolic_spectrum.ini`) or
derives plot series from a finished run (`run_lab.py emit-plots output`).
"""

import sys
import os

# Add the current directory to the Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

# Import the main function
from src.lab_master import main
if __name__ == "__main__":
    # Run the main function
    main()
