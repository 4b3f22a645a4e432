"""Write the plot data for figures 1-6 as CSV files.

    python scripts/regenerate_figures.py [OUTDIR]
"""

import sys
from pathlib import Path

from seqcert.cli import main


def run(outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    for fig in range(1, 7):
        path = outdir / f"figure{fig}.csv"
        code = main(["figure", "--id", str(fig), "--out", str(path)])
        if code:
            raise SystemExit(code)
        print(path)


if __name__ == "__main__":
    run(Path(sys.argv[1] if len(sys.argv) > 1 else "figure_data"))
