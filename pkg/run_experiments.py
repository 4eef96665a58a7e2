"""Run an experiment from the repository root:

    python run_experiments.py greedy --trials 100 --out results/greedy
"""

import sys

from basis_approx.experiments_cli import main

if __name__ == "__main__":
    sys.exit(main())
