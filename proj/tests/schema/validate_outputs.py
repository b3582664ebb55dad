#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
#
# ristwin - ray-traced radio coverage and RIS deployment planning
# Copyright (C) 2026 The ristwin Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ------------------------------------------------------------------------
"""Runs every CLI subcommand on the fixtures and validates the artifacts."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from jsonschema import Draft7Validator
from referencing import Registry, Resource

CSV_HEADERS = {
    "coverage.csv": "x,y,rsrp_dbm,sector_id,beam_index,outage",
    "coverage_pre.csv": "x,y,rsrp_dbm,sector_id,beam_index,outage",
    "coverage_post.csv": "x,y,rsrp_dbm,sector_id,beam_index,outage",
    "aperture_sweep.csv": "aperture_m,elements,ris_count,outage_ues,recovered_initial,"
    "recovered_reclustering,recovered_reassociation,total_fraction",
    "recluster_sweep.csv": "recluster_T_m,ris_count,outage_ues,recovered_initial,"
    "recovered_reclustering,recovered_reassociation,total_fraction",
    "measurements.csv": "x,y,rsrp_dbm,cell_id",
}


def load_schemas(root):
    schemas = {}
    for path in sorted((root / "docs" / "schemas").glob("*.schema.json")):
        doc = json.loads(path.read_text())
        Draft7Validator.check_schema(doc)
        schemas[path.name] = doc
    registry = Registry().with_resources(
        (name, Resource.from_contents(doc)) for name, doc in schemas.items()
    )
    return schemas, registry


def validate(schemas, registry, name, path):
    doc = json.loads(path.read_text())
    Draft7Validator(schemas[name], registry=registry).validate(doc)
    print(f"ok  {path.name} against {name}")


def check_ppm(path):
    data = path.read_bytes()
    head = data.split(b"\n", 3)
    assert head[0] == b"P6", path
    w, h = map(int, head[1].split())
    assert head[2] == b"255", path
    assert len(head[3]) == w * h * 3, path
    print(f"ok  {path.name} ({w}x{h} P6)")


def run(cli, *args):
    proc = subprocess.run([cli, *args, "--quiet"], capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"{' '.join(args)} failed ({proc.returncode}): {proc.stderr}")


def main():
    cli, root = sys.argv[1], pathlib.Path(sys.argv[2])
    schemas, registry = load_schemas(root)
    data = root / "data"
    for scene in sorted(data.glob("*.json")):
        validate(schemas, registry, "scene.schema.json", scene)
    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp)
        canyon = str(data / "canyon.json")
        run(cli, "coverage", "--scene", canyon, "--out", str(out / "cov"))
        run(cli, "plan", "--scene", canyon, "--out", str(out / "plan"), "--aperture-sweep", "1,2",
            "--recluster-sweep", "5,10")
        run(cli, "cluster", "--scene", canyon, "--out", str(out / "cl"))
        run(cli, "synth-measurements", "--scene", canyon, "--csv", str(out / "cal" / "measurements.csv"),
            "--per-cell", "25")
        run(cli, "calibrate", "--scene", canyon, "--out", str(out / "cal"), "--measurements",
            str(out / "cal" / "measurements.csv"), "--steps", "20", "--holdout-frac", "0.2")

        validate(schemas, registry, "coverage_summary.schema.json", out / "cov" / "summary.json")
        validate(schemas, registry, "plan.schema.json", out / "plan" / "plan.json")
        validate(schemas, registry, "recovery.schema.json", out / "plan" / "recovery.json")
        validate(schemas, registry, "plan_summary.schema.json", out / "plan" / "summary.json")
        validate(schemas, registry, "clusters.schema.json", out / "cl" / "clusters.json")
        validate(schemas, registry, "calibration_report.schema.json", out / "cal" / "calibration_report.json")
        validate(schemas, registry, "scene.schema.json", out / "cal" / "calibrated_scene.json")
        for csv in out.rglob("*.csv"):
            header = csv.read_text().splitlines()[0]
            assert header == CSV_HEADERS[csv.name], (csv, header)
            print(f"ok  {csv.name} header")
        for ppm in out.rglob("*.ppm"):
            check_ppm(ppm)
    return 0


if __name__ == "__main__":
    try:
        sys.exit(main())
    except jsonschema.ValidationError as e:
        sys.exit(f"schema violation: {e.message} at {list(e.absolute_path)}")
