"""
Main entry point for the command-line engine.
"""

import sys

from seqnet.cli import main

if __name__ == "__main__":
    sys.exit(main())
