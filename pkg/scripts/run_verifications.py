#!/usr/bin/env python3
"""Run all identity/solver verification checks and print a summary table."""

import argparse
import json
import sys

from emdsm import harness


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--json", action="store_true", help="emit machine-readable JSON")
    parser.add_argument("kinds", nargs="*", default=list(harness.VERIFY_KINDS))
    args = parser.parse_args()

    results = [harness.verify(kind) for kind in args.kinds]
    if args.json:
        print(json.dumps(results, indent=2))
    else:
        for result in results:
            for check in result["checks"]:
                status = "PASS" if check["passed"] else "FAIL"
                print(f"[{status}] {check['name']}: {check['value']}")
            print(f"== {result['kind']}: {'PASS' if result['passed'] else 'FAIL'} "
                  f"({result['seconds']:.1f} s)")
    sys.exit(0 if all(r["passed"] for r in results) else 1)


if __name__ == "__main__":
    main()
