"""Tabulate the three attention concentrations against distance and time.

    python3 scripts/attention_profiles.py > profiles.csv
"""

import csv
import math
import sys

from cogctl.attention import AttentionWeights, xi


def main():
    w = AttentionWeights()
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["x", "xi1_of_distance", "xi2_of_time", "xi3_of_time"])
    for x in range(0, 301, 5):
        out.writerow([x, f"{xi(0, float(x), w)[0]:.6f}", f"{xi(x, math.inf, w)[1]:.6f}",
                      f"{xi(x, math.inf, w)[2]:.6f}"])


if __name__ == "__main__":
    main()
