"""Driving the same machinery from the command line.

Writes a small JSON config, runs it through ``pfgate`` and shows the CSV and
manifest it leaves behind.  Equivalent shell call:

    pfgate --config run.json --out out/
"""

import json
import pathlib
import tempfile

from pfgate.cli import main

work = pathlib.Path(tempfile.mkdtemp())
config = {"device": 5, "task": "static-zz", "output": "demo",
          "params": {"omegaCRange": [5.0, 5.5], "methods": ["exact", "swt"]},
          "grid": {"omegaCStep": 0.05}}
(work / "run.json").write_text(json.dumps(config))
main(["--config", str(work / "run.json"), "--out", str(work)])
print((work / "demo" / "static_zz.csv").read_text())
manifest = json.loads((work / "demo" / "manifest.json").read_text())
print("config hash", manifest["configHash"], "wall time", round(manifest["wallTime_s"], 2), "s")
