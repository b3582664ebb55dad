#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""CLI exit codes: 0 ok, 2 configuration/usage, 3 scene, 4 runtime."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path


def main() -> int:
    cli, root = sys.argv[1], Path(sys.argv[2])
    scene = str(root / "data" / "canyon.json")
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        bad_scene = tmp / "bad_scene.json"
        bad_scene.write_text(json.dumps(
            {"buildings": [{"id": "a", "footprint": [[0, 0], [1, 0]], "height": 3}], "bs_sites": []}))
        cases = [
            ("unknown flag", ["coverage", "--bogus"], 2),
            ("no subcommand", [], 2),
            ("unknown preset", ["coverage", "--scene", scene, "--preset", "7G"], 2),
            ("zero rays", ["coverage", "--scene", scene, "--rays", "0"], 2),
            ("bad threshold", ["plan", "--scene", scene, "--threshold-T", "-1"], 2),
            ("missing scene", ["coverage", "--scene", str(tmp / "missing.json")], 3),
            ("degenerate footprint", ["coverage", "--scene", str(bad_scene)], 3),
            ("ok", ["coverage", "--scene", scene, "--rays", "20000", "--quiet"], 0),
        ]
        for name, args, want in cases:
            out = tmp / name.replace(" ", "_")
            cmd = [cli] + args + (["--out", str(out)] if args else [])
            got = subprocess.run(cmd, capture_output=True).returncode
            status = "ok" if got == want else "FAILED"
            print(f"{status}: {name}: exit {got} (expected {want})")
            failures += got != want
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
