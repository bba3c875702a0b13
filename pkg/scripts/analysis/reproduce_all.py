#!/usr/bin/env python3
"""
Full reproduction run
Runs every verification claim and writes the data of every figure

Run frequency: on demand (before a release, after touching closedform/protocols)
Purpose: One command that regenerates results/claims.json and results/fig*.csv
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '../../backend'))

from services.analysis import CLAIMS, run_claims  # noqa: E402
from services.figures import FIGURES, emit_figure, export_figure  # noqa: E402

LOG_DIR = os.path.join(os.path.dirname(__file__), '../../logs')
os.makedirs(LOG_DIR, exist_ok=True)

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.path.join(LOG_DIR, 'reproduce_all.log')),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger(__name__)


class Reproducer:
    def __init__(self, out_dir: Path, seed: int, quick: bool, points: int = None):
        self.out_dir = Path(out_dir)
        self.seed = seed
        self.quick = quick
        self.points = points

    def run_claims(self) -> bool:
        logger.info(f"Running {len(CLAIMS)} claims (seed={self.seed}, quick={self.quick})...")
        results = run_claims("all", seed=self.seed, quick=self.quick)
        path = self.out_dir / "claims.json"
        path.write_text(json.dumps([r.model_dump(mode="json") for r in results], indent=2, sort_keys=True))
        for result in results:
            logger.info(f"  {result.claim_id:<24} {'pass' if result.passed else 'FAIL'}  "
                        f"worst residual {result.worst_residual:.3e} over {result.n_checked} points")
        return all(r.passed for r in results)

    def write_figures(self):
        for figure_id in FIGURES:
            start = time.time()
            figure = emit_figure(figure_id, points=self.points)
            export_figure(figure, self.out_dir / f"{figure_id}.csv")
            logger.info(f"  {figure_id}: {len(figure.series)} series in {time.time() - start:.1f}s")

    def run(self) -> int:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        logger.info("=" * 80)
        logger.info("REPRODUCTION RUN")
        logger.info("=" * 80)
        try:
            passed = self.run_claims()
            self.write_figures()
        except Exception as e:
            logger.error(f"Error during reproduction run: {e}", exc_info=True)
            raise
        logger.info("=" * 80)
        logger.info("ALL CLAIMS PASSED" if passed else "SOME CLAIMS FAILED (see claims.json)")
        logger.info("=" * 80)
        return 0 if passed else 1


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Run every claim and write every figure")
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), '../../results'))
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--quick", action="store_true", help="reduced draw counts")
    parser.add_argument("--points", type=int, help="points per curve (figure defaults when omitted)")
    args = parser.parse_args()
    sys.exit(Reproducer(Path(args.out), args.seed, args.quick, args.points).run())
