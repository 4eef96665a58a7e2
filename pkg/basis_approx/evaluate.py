"""Re-check an experiment output directory from its files alone."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .greedy import greedy_bound_sq
from .persist import csv_text, read_csv, read_manifest
from .summary import bounds_table, chain_summary, summarize_frames

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-10
NESTED_SLACK = 1e-10


def print_report(title: str, items: dict) -> None:
    print(f"\n=== {title} ===")
    if not items:
        return
    width = max(len(str(k)) for k in items)
    for label, value in items.items():
        print(f"  {str(label):<{width}} : {value}")


def _same_text(path: Path, text: str) -> bool:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read() == text


def _trace_checks(out, manifest):
    """Summary consistency plus bound dominance (greedy) or nestedness."""
    checks = {}
    params = manifest["params"]
    trial_files = [f for f in manifest["files"] if f.startswith("trials/")]
    frames = {}
    for f in trial_files:
        frame = read_csv(out / f)
        frames[len(frames)] = frame
    if not frames:
        return {"trial files": (False, "none")}

    summary = summarize_frames(frames)
    checks["summary matches raw traces"] = (_same_text(out / "summary.csv", csv_text(summary.table)), "")

    if manifest["command"] == "greedy":
        worst = 0
        prime_hits = 0
        total = 0
        for frame in frames.values():
            raw = frame["raw_sq"].to_numpy()
            e0 = raw[0]
            guaranteed = np.array([greedy_bound_sq(n, e0, params["m_dprime"]) for n in range(raw.size)])
            worst += int(np.count_nonzero(raw > guaranteed + BOUND_SLACK))
            prime_hits += int(np.count_nonzero(raw <= frame["bound_sq"].to_numpy() + BOUND_SLACK))
            total += raw.size
        checks["guaranteed bound (M'') holds"] = (worst == 0, f"{worst} violating steps")
        checks["bound_sq (M') dominates"] = (None, f"{prime_hits} of {total} steps")
    else:
        bad = 0
        for frame in frames.values():
            e = frame["normalized"].to_numpy()
            bad += int(np.count_nonzero(np.diff(e) > NESTED_SLACK))
        checks["error nonincreasing in N"] = (bad == 0, f"{bad} increasing steps")
    return checks


def _chain_checks(out, manifest):
    params = manifest["params"]
    lengths = read_csv(out / "chains.csv")
    ns = sorted(set(params["n"]))
    summary = chain_summary(lengths, ns, params["tol"], params["theta"])
    invalid = int((~lengths["valid"].astype(bool)).sum())
    capped = int(lengths["capped"].astype(bool).sum())
    return {
        "summary matches chain lengths": (_same_text(out / "summary.csv", csv_text(summary)), ""),
        "chains pairwise within band": (invalid == 0, f"{invalid} invalid"),
        "chains capped": (None, str(capped)),
    }


def _bounds_checks(out, manifest):
    p = manifest["params"]
    table = bounds_table(p["n"], p["eps"], p["theta"])
    return {"bounds match closed forms": (_same_text(out / "bounds.csv", csv_text(table)), f"{len(table)} rows")}


def _angle_checks(out, manifest):
    table = read_csv(out / "angles.csv")
    total = int(table["count"].sum())
    expected = int(manifest["params"]["count"])
    return {"histogram mass equals count": (total == expected, f"{total} / {expected}")}


def verify_output(directory) -> bool:
    """Print a verification report for one output directory; True when every
    pass/fail check passes."""
    out = Path(directory)
    manifest = read_manifest(out / "manifest.json")
    command = manifest["command"]

    missing = [f for f in manifest.get("files", []) if not (out / f).exists()]
    checks = {"files present": (not missing, ", ".join(missing))}
    failures = manifest.get("failures", [])
    checks["trial failures"] = (not failures, str(len(failures)))

    if command in ("greedy", "random", "const-blowup"):
        checks.update(_trace_checks(out, manifest))
    elif command == "chains":
        checks.update(_chain_checks(out, manifest))
    elif command == "bounds":
        checks.update(_bounds_checks(out, manifest))
    elif command == "angles":
        checks.update(_angle_checks(out, manifest))

    items = {}
    ok = True
    for label, (passed, detail) in checks.items():
        status = "info" if passed is None else ("PASS" if passed else "FAIL")
        items[label] = f"{status} {detail}".rstrip()
        if passed is False:
            ok = False
            logger.warning("verify %s: %s failed %s", out, label, detail)
    print_report(f"VERIFY {command.upper()}", items)
    return ok
