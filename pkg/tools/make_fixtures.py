"""Regenerate the bundled plant fixtures and their golden synthesis reports."""
import os
import sys

import numpy as np

from qsynth import cli, plants
from qsynth.serialize import dumps, plant_to_dict


def main():
    base = os.path.join(os.path.dirname(__file__), "..", "src", "qsynth", "fixtures")
    docs = {
        "cavity": plant_to_dict(plants.cavity_plant()),
        "cavity_uncertain": plant_to_dict(plants.cavity_plant(), {"mu": 0.1, "S": 1.5 * np.eye(2)}),
        "cavity_measured": plant_to_dict(plants.measured_cavity_plant()),
        "amplifier_cavity": plant_to_dict(plants.amplifier_cavity_plant()),
    }
    for name, doc in docs.items():
        path = os.path.join(base, f"{name}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps(doc))
        opts = plants.FIXTURES[name]
        out = os.path.join(base, "expected", f"{name}.json")
        code = cli.main(["synthesize", path, "--g", str(opts["g"]), "--realize", opts["realize"], "--out", out])
        print(name, "exit", code, file=sys.stderr)


if __name__ == "__main__":
    main()
