"""Command-line pipeline: label, score, rerank, tune, eval, report.

Stages communicate through beamset JSONL files so each one can be
re-run and inspected on its own; scoring is typically the expensive
step and should not be repeated by accident. Data goes to files,
logs go to stderr.

Exit codes: 0 success, 1 validation/usage error, 2 I/O or transport
error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from typing import List, Optional

from beamjudge import beamset as beamset_mod
from beamjudge import evaltune, rerank, scoring, sqlcanon

logger = logging.getLogger("beamjudge")

ENDPOINT_ENV_VAR = "BEAMJUDGE_SCORER_URL"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class CliError(Exception):
    """Usage or validation failure; maps to exit code 1."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message)


def _parse_threshold(text: str) -> float:
    if text.strip().lower() == "inf":
        return math.inf
    try:
        value = float(text)
    except ValueError:
        raise CliError(f"invalid threshold {text!r}")
    if math.isnan(value) or value < 0:
        raise CliError(f"threshold must be >= 0 or inf, got {text!r}")
    return value


def parse_grid(spec: str) -> List[float]:
    """Grid syntax: comma-separated values, ranges `start:stop:step`, and
    the literal `inf`. +inf is appended when missing, since tuning always
    needs the off switch in the running."""
    values: List[float] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if part.lower() == "inf":
            values.append(math.inf)
            continue
        if ":" in part:
            pieces = part.split(":")
            if len(pieces) != 3:
                raise CliError(f"invalid grid range {part!r}; expected start:stop:step")
            try:
                start, stop, step = (float(p) for p in pieces)
            except ValueError:
                raise CliError(f"invalid grid range {part!r}")
            if step <= 0 or stop < start:
                raise CliError(f"invalid grid range {part!r}")
            count = int(round((stop - start) / step))
            values.extend(round(start + i * step, 10) for i in range(count + 1))
            continue
        try:
            values.append(float(part))
        except ValueError:
            raise CliError(f"invalid grid value {part!r}")
    if not values:
        raise CliError(f"empty threshold grid {spec!r}")
    if not any(math.isinf(v) for v in values):
        logger.info("grid does not include inf; appending it")
        values.append(math.inf)
    return sorted(set(values))


def _config_digest(args: argparse.Namespace) -> str:
    config = {k: repr(v) for k, v in sorted(vars(args).items()) if k != "func"}
    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def _load(path) -> beamset_mod.BeamSet:
    return beamset_mod.load_beamset(path)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_label(args) -> int:
    bs = _load(args.input)
    labeled, stats = beamset_mod.label_beamset(
        bs, sqlcanon.equivalent, string_fallback=not args.strict
    )
    if args.strict and stats.gold_parse_failures:
        raise CliError(
            f"{stats.gold_parse_failures} entries have unparseable gold queries"
            " (re-run without --strict to label them by string match)"
        )
    beamset_mod.save_beamset(labeled, args.output)
    logger.info(
        "labeled %d entries (%d beam hits, %d candidate parse failures)",
        stats.entries, stats.gold_in_beam, stats.candidate_parse_failures,
    )
    return EXIT_OK


def _make_scorer(args):
    if args.scorer == "lexical":
        return scoring.LexicalScorer()
    endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV_VAR)
    if not endpoint:
        raise CliError(
            f"remote scorer needs --endpoint or {ENDPOINT_ENV_VAR}"
        )
    scorer = scoring.RemoteScorer(endpoint)
    scorer.health_check()
    return scorer


def cmd_score(args) -> int:
    bs = _load(args.input)
    scorer = _make_scorer(args)
    scored = scoring.attach_scores(
        bs, scorer, include_schema=args.include_schema, parallelism=args.parallelism
    )
    beamset_mod.save_beamset(scored, args.output)
    logger.info("scored %d entries with the %s scorer", len(scored), scorer.name)
    return EXIT_OK


def cmd_rerank(args) -> int:
    bs = _load(args.input)
    config = rerank.RerankConfig(threshold=args.threshold)
    out = rerank.rerank_beamset(bs, config)
    beamset_mod.save_beamset(out, args.output)
    logger.info(
        "re-ranked %d entries at threshold %s (%s kernels)",
        len(out), args.threshold, rerank.backend_name(),
    )
    return EXIT_OK


def cmd_tune(args) -> int:
    bs = _load(args.input)
    tune_split, eval_split = beamset_mod.split_for_tuning(bs, args.split, args.seed)
    curve = evaltune.tune_threshold(tune_split, args.grid)
    best = curve.best_threshold
    eval_report = evaltune.evaluate(eval_split, best)

    if args.curve_out:
        evaltune.write_curve_csv(curve, args.curve_out)
    if args.splits_out:
        os.makedirs(args.splits_out, exist_ok=True)
        beamset_mod.save_beamset(tune_split, os.path.join(args.splits_out, "tune.jsonl"))
        beamset_mod.save_beamset(eval_split, os.path.join(args.splits_out, "eval.jsonl"))
    if args.summary_out:
        summary = {
            "best_threshold": best,
            "tune_accuracy": curve.best_accuracy(),
            "eval_accuracy": eval_report.overall_accuracy,
            "tune_entries": len(tune_split),
            "eval_entries": len(eval_split),
            "split_ratio": args.split,
            "seed": args.seed,
            "rule_set_version": sqlcanon.HARDNESS_RULES_VERSION,
        }
        with open(args.summary_out, "w", encoding="utf-8") as fh:
            fh.write(evaltune.render_json(summary))
            fh.write("\n")

    print(f"best_threshold={evaltune.format_float(best)}")
    print(f"tune_accuracy={curve.best_accuracy():.6f}")
    print(f"eval_accuracy={eval_report.overall_accuracy:.6f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    bs = _load(args.input)
    report = evaltune.evaluate(bs, args.threshold)
    evaltune.write_report_json(report, args.output)
    print(f"accuracy={report.overall_accuracy:.6f}")
    print(f"beam_hit_rate={report.beam_hit_rate:.6f}")
    return EXIT_OK


def cmd_report(args) -> int:
    bs = _load(args.input)
    os.makedirs(args.out_dir, exist_ok=True)
    report = evaltune.evaluate(bs, args.threshold)
    evaltune.write_report_json(report, os.path.join(args.out_dir, "report.json"))
    written = evaltune.write_hardness_curve_bundle(bs, args.grid, args.out_dir)
    logger.info("wrote report.json and %d curve files to %s", len(written), args.out_dir)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------

def build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(
        prog="beamjudge",
        description="Re-rank and evaluate text-to-SQL beam search outputs.",
    )
    parser.add_argument(
        "--canonical",
        metavar="SQL",
        help="debug: print the canonical form of a SQL string and exit",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("label", help="mark gold-equivalent candidates")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument(
        "--strict", action="store_true",
        help="fail instead of string-matching entries whose gold does not parse",
    )
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("score", help="attach discriminator scores")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--scorer", choices=["lexical", "remote"], default="lexical")
    p.add_argument("--endpoint", help=f"remote scorer URL (default ${ENDPOINT_ENV_VAR})")
    p.add_argument("--include-schema", action="store_true",
                   help="send schema tables with each pair (ablation; off by default)")
    p.add_argument("--parallelism", type=int, default=1)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("rerank", help="reorder candidates by score")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--threshold", type=_parse_threshold, required=True)
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("tune", help="grid-search the threshold on a held-out split")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--split", type=float, default=0.5,
                   help="fraction of entries used for tuning (rest is eval)")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--grid", type=parse_grid, default=evaltune.default_grid(),
                   help="e.g. 0:1:0.01 or 0.1,0.5,inf (inf appended if missing)")
    p.add_argument("--curve-out", help="write threshold,accuracy CSV here")
    p.add_argument("--summary-out", help="write tuning summary JSON here")
    p.add_argument("--splits-out", help="directory for tune.jsonl / eval.jsonl")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("eval", help="evaluate at a fixed threshold")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--threshold", type=_parse_threshold, default=math.inf)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="emit report + per-hardness curve bundle")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--threshold", type=_parse_threshold, default=math.inf)
    p.add_argument("--grid", type=parse_grid, default=evaltune.default_grid())
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.canonical is not None:
            print(sqlcanon.format_tree(sqlcanon.parse_sql(args.canonical)))
            return EXIT_OK
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_VALIDATION
        logger.info(
            "rule_set_version=%s config_digest=%s",
            sqlcanon.HARDNESS_RULES_VERSION,
            _config_digest(args),
        )
        return args.func(args)
    except CliError as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except (beamset_mod.BeamsetFormatError, sqlcanon.SqlParseError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except (scoring.TransportError, scoring.ProtocolError, scoring.ScoringError) as exc:
        logger.error("%s", exc)
        return EXIT_IO
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
