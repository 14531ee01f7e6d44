"""
Allow zdistill to be run as a module: python3 -m zdistill
"""
import sys

from zdistill.zdistill_cli import main

if __name__ == '__main__':
    sys.exit(main())
