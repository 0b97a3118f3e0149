#!/usr/bin/env python3
"""
GraviCollapse - Main Entry Point
"""

import os
import sys

# Make the package importable when run as a script from a checkout
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from gravicollapse.src.cli import main

if __name__ == "__main__":
    main()
