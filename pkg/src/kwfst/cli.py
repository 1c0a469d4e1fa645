"""Command-line interface.

Subcommands: synth, greedy, decode, eval, score, report, assess.
Exit codes: 0 success, 1 usage, 2 data validation, 3 internal invariant.
Every configuration key can be overridden as --<section>.<key> <value>.
"""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import config as config_mod
from . import decoder, evaluate, lattice, report, scoring, synth
from .errors import (DataError, InternalError, KwfstError, UsageError)
from .phonology import SimilarityMatrix, load_inventory


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    parser = _Parser(prog="kwfst", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key = value configuration file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="synthesize a posterior "
                       "lattice with planted disfluencies")
    p.add_argument("--reference", required=True,
                   help='space-separated phonemes, e.g. "B ER D"')
    p.add_argument("--edit", action="append", default=[],
                   help="sub:POS=PH | ins:POS=PH | del:POS | rep:POS=TIMES")
    p.add_argument("--confidence", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames-per-phoneme", type=int, default=4)
    p.add_argument("--blank-frames", type=int, default=1)
    p.add_argument("--out", required=True, help="output .kwpo path; a .truth "
                   "sidecar is written next to it")

    p = sub.add_parser("greedy", help="per-frame argmax + CTC collapse")
    p.add_argument("--posteriors", required=True)

    p = sub.add_parser("decode", help="K-WFST decode to an edit-annotated "
                       "transcription")
    p.add_argument("--posteriors", required=True, nargs="+")
    p.add_argument("--reference", required=True)
    p.add_argument("--k", choices=["1", "3", "auto"])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="output file (single input) or directory")

    p = sub.add_parser("eval", help="corpus PER from reference/hypothesis TSVs")
    p.add_argument("--ref", required=True, help="utt-id TAB phonemes")
    p.add_argument("--hyp", required=True)
    p.add_argument("--out")

    p = sub.add_parser("score", help="LLM-assisted quality score for one "
                       "utterance document")
    p.add_argument("--inputs", required=True, help="JSON with reference, "
                   "transcribed, duration_s, word_count, reference_score?")
    p.add_argument("--out")

    p = sub.add_parser("report", help="assessment report from a transcription "
                       "document")
    p.add_argument("--transcription", required=True)
    p.add_argument("--utterance-id", default="")
    p.add_argument("--out")
    p.add_argument("--text", action="store_true",
                   help="emit the human-readable rendering")

    p = sub.add_parser("assess", help="decode + evaluate + score + report")
    p.add_argument("--posteriors", required=True, nargs="+")
    p.add_argument("--reference", required=True)
    p.add_argument("--k", choices=["1", "3", "auto"])
    p.add_argument("--utterance-id", default="")
    p.add_argument("--word-count", type=int)
    p.add_argument("--reference-score", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="output file (single input) or directory")
    return parser


def _split_overrides(argv):
    """Pull generic --section.key value pairs out of the argument list."""
    rest, overrides = [], {}
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg.startswith("--") and "." in arg.split("=", 1)[0]:
            if "=" in arg:
                key, value = arg[2:].split("=", 1)
            else:
                key = arg[2:]
                i += 1
                if i >= len(argv):
                    raise UsageError(f"missing value for --{key}")
                value = argv[i]
            overrides[key] = value
        else:
            rest.append(arg)
        i += 1
    return rest, overrides


def _context(run_config):
    inv_path = run_config["phonology.inventory_path"] or None
    inventory = load_inventory(inv_path)
    similarity = SimilarityMatrix(inventory, run_config.feature_weights())
    return inventory, similarity


def _parse_edits(specs):
    edits = []
    for spec in specs:
        try:
            kind, rest = spec.split(":", 1)
            if kind == "del":
                edits.append(synth.Delete(int(rest)))
                continue
            pos, value = rest.split("=", 1)
            if kind == "sub":
                edits.append(synth.Substitute(int(pos), value))
            elif kind == "ins":
                edits.append(synth.Insert(int(pos), value))
            elif kind == "rep":
                edits.append(synth.Repeat(int(pos), int(value)))
            else:
                raise ValueError(kind)
        except ValueError:
            raise UsageError(f"bad --edit {spec!r}")
    return edits


def _emit(doc, out):
    text = doc if isinstance(doc, str) else report.dumps(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_tsv(path):
    rows = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise DataError(f"{path}:{lineno}: expected utt-id TAB phonemes")
        utt, phones = line.split("\t", 1)
        rows[utt] = phones.split()
    return rows


def _decode_one(path, reference, cfg, inventory, similarity):
    lat = lattice.read_posteriors(path, inventory)
    return decoder.decode(lat, reference, cfg, inventory, similarity,
                          lattice_id=Path(path).stem)


def _map_ordered(fn, paths, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(fn, paths))
    else:
        results = [fn(p) for p in paths]
    order = sorted(range(len(paths)), key=lambda i: Path(paths[i]).stem)
    return [(paths[i], results[i]) for i in order]


def _write_many(pairs, out, render):
    if len(pairs) == 1 and (not out or not Path(out).is_dir()):
        _emit(render(*pairs[0]), out)
        return
    if not out:
        raise UsageError("--out directory required for multiple inputs")
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    for path, result in pairs:
        _emit(render(path, result), outdir / (Path(path).stem + ".json"))


def _scoring_examples(run_config):
    path = run_config["scoring.examples_path"]
    if path:
        raw = json.loads(Path(path).read_text())
        return [(scoring.ScoringInputs(e["reference"], e["transcribed"],
                                       e["duration_s"], e["word_count"]),
                 float(e["score"])) for e in raw]
    return _DEFAULT_EXAMPLES


_DEFAULT_EXAMPLES = [
    (scoring.ScoringInputs(
        "DH AH K AE T S AE T AA N DH AH M AE T".split(),
        "DH AH K AE T S AE T AA N DH AH M AE T".split(), 6.0, 6), 30.0),
    (scoring.ScoringInputs(
        "DH AH K AE T S AE T AA N DH AH M AE T".split(),
        "D AH K AE S AE T AA DH AH M AE".split(), 8.5, 6), 22.0),
    (scoring.ScoringInputs(
        "DH AH K AE T S AE T AA N DH AH M AE T".split(),
        "D AH T AE".split(), 11.0, 6), 8.0),
]


def _score_inputs(run_config, si):
    client = scoring.make_client(run_config["scoring.backend"],
                                 run_config["scoring.endpoint"] or None,
                                 run_config["scoring.model"] or None)
    prompt = scoring.build_prompt(_scoring_examples(run_config), si)
    outcome = scoring.llm_score(prompt, client,
                                runs=run_config["scoring.runs"],
                                temperature=run_config["scoring.temperature"])
    return outcome, client


def _assess_one(path, args, run_config, cfg, inventory, similarity):
    lat = lattice.read_posteriors(path, inventory)
    reference = args.reference.split()
    tr = decoder.decode(lat, reference, cfg, inventory, similarity,
                        lattice_id=Path(path).stem)
    errors = evaluate.categorize_errors(tr)
    per_result = evaluate.per(reference, tr.verbatim)
    duration = lat.n_frames * lat.frame_duration_ms / 1000.0
    words = args.word_count or max(1, round(len(reference) / 3))
    si = scoring.ScoringInputs(reference, tr.verbatim, duration, words)
    outcome, client = _score_inputs(run_config, si)
    if args.reference_score is not None:
        utt = args.utterance_id or Path(path).stem
        record = scoring.ScoreRecord(utt, outcome.score, args.reference_score)
        score_doc = record.to_dict()
        score_doc.pop("utterance_id")
    else:
        score_doc = {"predicted": outcome.score, "reference": None,
                     "error_rate": None}
    if client.deterministic:
        advice = report.default_advice(errors)
    else:
        advice = client.complete(
            "Give short corrective advice for a child whose reading showed "
            "these phoneme errors: " + json.dumps(errors),
            temperature=run_config["scoring.temperature"])
    return report.generate_report(
        tr, errors, per_result, score=score_doc, advice=advice,
        inventory=inventory,
        utterance_id=args.utterance_id or Path(path).stem)


def run(argv):
    argv, overrides = _split_overrides(argv)
    args = _build_parser().parse_args(argv)
    run_config = config_mod.load_config(args.config, overrides)
    if getattr(args, "k", None):
        run_config = config_mod.load_config(
            args.config, {**overrides, "decoder.k": args.k})
    inventory, similarity = _context(run_config)
    cfg = run_config.decoder_config()

    if args.command == "synth":
        plan = synth.SynthesisPlan(
            base_sequence=args.reference.split(),
            edits=_parse_edits(args.edit),
            frames_per_phoneme=args.frames_per_phoneme,
            blank_frames_between=args.blank_frames,
            confidence=args.confidence,
            seed=args.seed)
        lat = synth.synthesize_posteriors(plan, inventory, similarity)
        lattice.write_posteriors(lat, args.out, inventory)
        realized, truth = synth.apply_edits(plan)
        sidecar = {
            "base_sequence": plan.base_sequence,
            "edits": args.edit,
            "confidence": plan.confidence,
            "seed": plan.seed,
            "realized": realized,
            "truth": truth,
        }
        _emit(sidecar, str(Path(args.out).with_suffix(".truth")))
        return 0

    if args.command == "greedy":
        lat = lattice.read_posteriors(args.posteriors, inventory)
        print(" ".join(decoder.greedy_decode(lat)))
        return 0

    if args.command == "decode":
        reference = args.reference.split()
        pairs = _map_ordered(
            lambda p: _decode_one(p, reference, cfg, inventory, similarity),
            args.posteriors, args.jobs)
        _write_many(pairs, args.out, lambda p, tr: tr.to_dict())
        return 0

    if args.command == "eval":
        refs = _read_tsv(args.ref)
        hyps = _read_tsv(args.hyp)
        if not refs:
            raise DataError("empty corpus")
        if set(refs) != set(hyps):
            diff = sorted(set(refs) ^ set(hyps))
            raise DataError("utterance id mismatch: " + ", ".join(diff))
        result = evaluate.corpus_per(
            [(utt, refs[utt], hyps[utt]) for utt in sorted(refs)])
        doc = {
            "pooled_per": round(result.pooled_per, 6),
            "macro_per": round(result.macro_per, 6),
            "utterances": {utt: r.to_dict()
                           for utt, r in result.utterances.items()},
        }
        _emit(doc, args.out)
        return 0

    if args.command == "score":
        raw = json.loads(Path(args.inputs).read_text())
        si = scoring.ScoringInputs(raw["reference"], raw["transcribed"],
                                   raw["duration_s"], raw["word_count"])
        outcome, _client = _score_inputs(run_config, si)
        doc = {"predicted": outcome.score, "completions": outcome.completions}
        if raw.get("reference_score") is not None:
            record = scoring.ScoreRecord(raw.get("utterance_id", ""),
                                         outcome.score,
                                         raw["reference_score"])
            doc["reference"] = record.reference_score
            doc["error_rate"] = round(record.error_rate, 9)
        _emit(doc, args.out)
        return 0

    if args.command == "report":
        tr = decoder.Transcription.from_dict(
            json.loads(Path(args.transcription).read_text()))
        errors = evaluate.categorize_errors(tr)
        per_result = evaluate.per(tr.reference, tr.verbatim)
        doc = report.generate_report(
            tr, errors, per_result, advice=report.default_advice(errors),
            inventory=inventory, utterance_id=args.utterance_id)
        _emit(report.render_text(doc) if args.text else doc, args.out)
        return 0

    if args.command == "assess":
        if run_config["scoring.backend"] == "http" \
                and not run_config["scoring.endpoint"]:
            raise UsageError("scoring.endpoint is required with the http "
                             "backend")
        pairs = _map_ordered(
            lambda p: _assess_one(p, args, run_config, cfg, inventory,
                                  similarity),
            args.posteriors, args.jobs)
        _write_many(pairs, args.out, lambda p, doc: doc)
        return 0

    raise UsageError(f"unknown command {args.command!r}")


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        return run(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (InternalError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except KwfstError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
