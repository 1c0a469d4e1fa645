"""Extraction CLI.

`kwfst-extract --audio a.wav --model <id> --map labels.map --out a.kwpo`
Exit codes mirror the primary toolkit: 0 success, 1 usage, 2 data
validation, 3 internal invariant.
"""

import argparse
import sys
from pathlib import Path

from kwfst.errors import DataError, InternalError, KwfstError, UsageError
from kwfst.lattice import write_posteriors

from .extract import DEFAULT_SAMPLE_RATE, Extractor, verify_roundtrip


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def run(argv):
    parser = _Parser(prog="kwfst-extract",
                     description=__doc__.splitlines()[0])
    parser.add_argument("--audio", required=True, nargs="+",
                        help="input wav file(s)")
    parser.add_argument("--model", required=True,
                        help="phoneme-CTC checkpoint id or local directory")
    parser.add_argument("--map", required=True, dest="map_path",
                        help="model-label to inventory-label map file")
    parser.add_argument("--out", required=True,
                        help="output .kwpo path (directory for several "
                        "inputs)")
    parser.add_argument("--sample-rate", type=int,
                        default=DEFAULT_SAMPLE_RATE,
                        help="rate the model expects; input is resampled")
    parser.add_argument("--verify", action="store_true",
                        help="round-trip check every emitted file")
    args = parser.parse_args(argv)

    extractor = Extractor(args.model, args.map_path, args.sample_rate)
    out = Path(args.out)
    if len(args.audio) > 1:
        out.mkdir(parents=True, exist_ok=True)
    for audio in args.audio:
        target = out / (Path(audio).stem + ".kwpo") \
            if len(args.audio) > 1 else out
        lat = extractor.lattice(audio)
        write_posteriors(lat, target, extractor.inventory)
        if args.verify and not verify_roundtrip(target, extractor.inventory):
            raise InternalError(f"round-trip verification failed: {target}")
        print(f"{audio} -> {target} ({lat.n_frames} frames, "
              f"{lat.frame_duration_ms:g} ms/frame)")
    return 0


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
