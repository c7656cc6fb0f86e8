"""Command-line entry point for running export jobs."""

from __future__ import annotations

import argparse
import logging
import sys

from .backbone import load_backbone
from .errors import BackboneError, ExportError, JobError
from .export import load_context, run_job
from .job import read_job


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuselens-export",
        description="Export embeddings and classifiers from a frozen VLM backbone",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a job document")
    run.add_argument("--job", required=True, help="job JSON document")
    run.add_argument("--context", default=None,
                     help=".npy learned-context tensor; enables few-shot export")
    run.add_argument("--backbone", default=None,
                     help="override the job's backbone identifier")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        job = read_job(args.job)
        backbone = load_backbone(args.backbone or job.backbone)
        context = load_context(args.context) if args.context else None
        for path in run_job(job, backbone, context):
            print(f"wrote {path}")
        return 0
    except (JobError, BackboneError) as exc:
        print(f"error[job]: {exc}", file=sys.stderr)
        return 4
    except ExportError as exc:
        print(f"error[export]: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error[export]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
