import sys
import json
import logging
import argparse
import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from shuttlehit.constants import (
    VERSION,
    LOG_FORMAT,
    EXIT_SUCCESS,
    EXIT_USAGE_ERROR,
    EXIT_DATA_ERROR,
    PRINTED_SCORE_DECIMALS,
    SYNTH_DEFAULTS,
)
from shuttlehit.pipeline.configuration import load_configuration_from_disk
from shuttlehit.pipeline.errors import ConfigurationError, DataError, PerturbError, UsageError
from shuttlehit.pipeline.rally import (
    Domains,
    list_rally_files,
    read_rally_dir,
    read_rally_file,
    validate,
    write_rally_csv,
    write_rally_file,
)
from shuttlehit.pipeline.scoring import ScoringConfig, dataset_score, pair_rallies
from shuttlehit.pipeline.flow import PreprocConfig, process_sequence
from shuttlehit.pipeline.frames import list_frames
from shuttlehit.pipeline.events import (
    ExtractionConfig,
    HitEvent,
    extract_hits,
    load_streams,
    to_shot_rows,
    write_stream_csv,
)
from shuttlehit.pipeline.detections import DetectionBundle, load_class_probs, load_detections, load_poses, load_track
from shuttlehit.pipeline.assembly import AssemblyConfig, assemble_submission
from shuttlehit.pipeline.utils import log, log_error, log_row
from shuttlehit.synth.random import Xorshift64Star
from shuttlehit.synth.rallies import SynthParams, gen_rallies
from shuttlehit.synth.streams import gen_probability_stream, random_hit_frames
from shuttlehit.synth.motion import gen_motion_sequence, write_motion_sequence


class ArgumentParser(argparse.ArgumentParser):
    """
    Raises UsageError instead of exiting, so that run() decides the exit code.
    """
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _size(value: str):
    try:
        width, height = (int(v) for v in value.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {value!r}") from None
    return width, height


def _pair(value: str):
    try:
        first, second = (int(v) for v in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers like 1,0, got {value!r}") from None
    return first, second


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError("the seed must fit in 64 unsigned bits")
    return seed


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON configuration file")
    common.add_argument("--log-file", type=Path, default=None, help="Also write the logs here")
    common.add_argument("--json-report", type=Path, default=None, help="Write a JSON report here")
    common.add_argument("--seed", type=_seed, default=SYNTH_DEFAULTS["seed"], help="Random seed")
    common.add_argument("--threads", type=int, default=1, help="Worker threads")

    parser = ArgumentParser(prog="shuttlehit", description="Badminton shot analytics pipeline")
    parser.add_argument("--version", action="version", version=f"shuttlehit {VERSION}")
    commands = parser.add_subparsers(dest="command", metavar="command", parser_class=ArgumentParser)
    commands.required = True

    score = commands.add_parser("score", parents=[common], help="Score predictions against ground truth")
    score.add_argument("--gt", type=Path, required=True, help="Directory of ground truth rallies")
    score.add_argument("--pred", type=Path, required=True, help="Directory of predicted rallies")
    score.add_argument("--tolerance", type=int, default=None, help="HitFrame tolerance in frames")
    score.add_argument("--landing-threshold", type=float, default=None)
    score.add_argument("--location-threshold", type=float, default=None)
    score.add_argument("--inclusive-distance", action="store_true", default=None,
                       help="Distances equal to the threshold count as correct")
    score.add_argument("--breakdown", action="store_true", help="Print the share of every column")

    preprocess = commands.add_parser("preprocess", parents=[common], help="Render optical flow frames")
    preprocess.add_argument("--in", dest="input", type=Path, required=True, help="Input frame directory")
    preprocess.add_argument("--out", type=Path, required=True, help="Output frame directory")
    preprocess.add_argument("--window", type=int, default=None, help="Window radius in pixels")
    preprocess.add_argument("--bg-threshold", type=float, default=None, help="Background threshold")
    preprocess.add_argument("--min-eigen", type=float, default=None)
    preprocess.add_argument("--size", type=_size, default=None, help="Output size as WIDTHxHEIGHT")
    preprocess.add_argument("--mode", choices=["magnitude", "hue"], default=None)
    preprocess.add_argument("--keep-background", action="store_true",
                            help="Render the plain optical flow")

    extract = commands.add_parser("extract-events", parents=[common], help="Hit frames from probability streams")
    extract.add_argument("--probs", type=Path, required=True, help="Stream file or directory")
    extract.add_argument("--quantile", type=float, default=None)
    extract.add_argument("--min-gap", type=int, default=None)
    extract.add_argument("--merge", action="store_true", help="Average the fold streams of a rally")
    extract.add_argument("--out", type=Path, required=True, help="Output directory")

    assemble = commands.add_parser("assemble", parents=[common], help="Complete a rally from model outputs")
    assemble.add_argument("--events", type=Path, required=True, help="Rally with ShotSeq and HitFrame")
    assemble.add_argument("--probs", type=Path, required=True, help="Classifier probabilities (JSON lines)")
    assemble.add_argument("--detections", type=Path, required=True, help="Detections (JSON lines)")
    assemble.add_argument("--track", type=Path, default=None, help="Ball trajectory CSV")
    assemble.add_argument("--poses", type=Path, default=None, help="Poses (JSON lines)")
    assemble.add_argument("--side-of-a", choices=["top", "bottom"], default=None)
    assemble.add_argument("--locations", choices=["bbox-vertex", "pose-feet"], default=None)
    assemble.add_argument("--ensemble", choices=["mean", "vote"], default=None)
    assemble.add_argument("--landing-y", choices=["box", "ball"], default=None)
    assemble.add_argument("--no-alternate", action="store_true",
                          help="Keep the per shot hitter predictions")
    assemble.add_argument("--out", type=Path, required=True, help="Output rally CSV")

    synth = commands.add_parser("synth", help="Generate synthetic fixtures")
    kinds = synth.add_subparsers(dest="kind", metavar="kind", parser_class=ArgumentParser)
    kinds.required = True

    rallies = kinds.add_parser("rallies", parents=[common], help="Random valid rallies")
    rallies.add_argument("--n", type=int, default=100)
    rallies.add_argument("--shots", type=_pair, default=None, help="Shot count range, as MIN,MAX")
    rallies.add_argument("--out", type=Path, required=True)

    streams = kinds.add_parser("streams", parents=[common], help="Probability streams with known hits")
    streams.add_argument("--n", type=int, default=10)
    streams.add_argument("--length", type=int, default=120)
    streams.add_argument("--peak-width", type=int, default=6)
    streams.add_argument("--noise", type=float, default=0.05)
    streams.add_argument("--max-hits", type=int, default=8)
    streams.add_argument("--out", type=Path, required=True, help="Directory of stream files")
    streams.add_argument("--truth", type=Path, default=None, help="Directory for the planted hit frames")

    frames = kinds.add_parser("frames", parents=[common], help="Texture moving with a known flow")
    frames.add_argument("--size", type=_size, default=(64, 64))
    frames.add_argument("--shift", type=_pair, default=(1, 0), help="Motion per frame, as DX,DY")
    frames.add_argument("--n-frames", type=int, default=5)
    frames.add_argument("--out", type=Path, required=True)

    check = commands.add_parser("validate", parents=[common], help="Check rally files")
    check.add_argument("path", type=Path, help="Rally file or directory")

    return parser


def _overrides(settings: Dict[str, Any], **flags) -> Dict[str, Any]:
    """
    Command line flags win over the configuration file.
    """
    return {**settings, **{key: value for key, value in flags.items() if value is not None}}


def _typed(factory, settings: Dict[str, Any], **flags):
    """
    Builds a typed config from the file settings, then again with the
    command line flags on top. A bad value in the file is a data error,
    a bad flag a usage error.
    """
    try:
        factory(settings)
    except (ConfigurationError, KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"invalid configuration: {e}") from None
    try:
        return factory(_overrides(settings, **flags))
    except (ConfigurationError, KeyError, TypeError, ValueError) as e:
        raise UsageError(f"invalid settings: {e}") from None


def run_score(args, config) -> Dict[str, Any]:
    domains = _typed(Domains.from_settings, config.get_domain_settings())
    cfg = _typed(
        ScoringConfig.from_settings,
        config.get_scoring_settings(),
        hit_frame_tolerance=args.tolerance,
        landing_threshold=args.landing_threshold,
        location_threshold=args.location_threshold,
        inclusive_distance=args.inclusive_distance,
    )
    pairs, unknown = pair_rallies(read_rally_dir(args.gt, domains), read_rally_dir(args.pred, domains))
    report = dataset_score(pairs, cfg, unknown, threads=args.threads)

    decimals = PRINTED_SCORE_DECIMALS
    for rally_id in sorted(report.per_rally):
        print(f"{rally_id} {report.per_rally[rally_id].total:.{decimals}f}")
    if args.breakdown:
        for column, share in report.column_contributions().items():
            print(f"  {column} {share:.{decimals}f}")
    print(f"total {report.total:.{decimals}f}")
    return report.to_dict()


def run_preprocess(args, config) -> Dict[str, Any]:
    mode = {"magnitude": "magnitude-gray", "hue": "angle-hue", None: None}[args.mode]
    cfg = _typed(
        PreprocConfig.from_settings,
        config.get_preprocess_settings(),
        window_radius=args.window,
        background_threshold=args.bg_threshold,
        min_eigen=args.min_eigen,
        output_size=args.size,
        render_mode=mode,
        remove_background=False if args.keep_background else None,
    )
    outputs = process_sequence(list_frames(args.input), args.out, cfg, threads=args.threads)
    print(f"{len(outputs)} frames written to {args.out}")
    return {"frames": [path.name for path in outputs]}


def run_extract_events(args, config) -> Dict[str, Any]:
    domains = _typed(Domains.from_settings, config.get_domain_settings())
    cfg = _typed(
        ExtractionConfig.from_settings,
        config.get_extraction_settings(),
                 quantile=args.quantile, min_gap=args.min_gap)

    args.out.mkdir(parents=True, exist_ok=True)
    hits = {}
    for stream in load_streams(args.probs, merge=args.merge):
        events = extract_hits(stream, cfg)
        write_rally_file(to_shot_rows(events, stream.rally_id, domains), args.out, domains)
        hits[stream.rally_id] = [event.frame for event in events]
        print(f"{stream.rally_id} {' '.join(str(frame) for frame in hits[stream.rally_id])}".rstrip())
    return {"hits": hits}


def run_assemble(args, config) -> Dict[str, Any]:
    domains = _typed(Domains.from_settings, config.get_domain_settings())
    cfg = _typed(
        AssemblyConfig.from_settings,
        config.get_assembly_settings(),
        side_of_A=args.side_of_a,
        location_mode=args.locations,
        ensemble=args.ensemble,
        landing_y_source=args.landing_y,
        alternate_hitters=False if args.no_alternate else None,
    )
    events = read_rally_file(args.events, domains)
    bundle = DetectionBundle.build(
        load_detections(args.detections),
        track=load_track(args.track) if args.track else None,
        poses=load_poses(args.poses) if args.poses else None,
    )
    rally = assemble_submission(events, load_class_probs(args.probs), bundle, cfg, domains)

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_bytes(write_rally_csv(rally, domains))
    print(f"{len(rally)} shots written to {args.out}")
    return {"rally": rally.rally_id, "shots": len(rally)}


def run_synth(args, config) -> Dict[str, Any]:
    args.out.mkdir(parents=True, exist_ok=True)

    if args.kind == "rallies":
        domains = _typed(Domains.from_settings, config.get_domain_settings())
        params = SynthParams(domains=domains, seed=args.seed,
                             **({"n_shots": args.shots} if args.shots else {}))
        paths = [write_rally_file(rally, args.out, domains) for rally in gen_rallies(args.n, params)]
        print(f"{len(paths)} rallies written to {args.out}")
        return {"files": [path.name for path in paths]}

    if args.kind == "streams":
        rng = Xorshift64Star(args.seed)
        planted = {}
        for i in range(1, args.n + 1):
            rally_id = f"rally_{i:05d}"
            hit_frames = random_hit_frames(rng, args.length, args.peak_width, args.max_hits)
            stream = gen_probability_stream(hit_frames, args.length, args.peak_width,
                                            args.noise, rng.next_u64(), rally_id)
            write_stream_csv(stream, args.out / f"{rally_id}.csv")
            planted[rally_id] = hit_frames
            if args.truth:
                args.truth.mkdir(parents=True, exist_ok=True)
                events = [HitEvent(frame, 1.0) for frame in hit_frames]
                write_rally_file(to_shot_rows(events, rally_id), args.truth)
        print(f"{len(planted)} streams written to {args.out}")
        return {"hits": planted}

    frames = gen_motion_sequence(args.size, args.shift, args.n_frames, args.seed)
    paths = write_motion_sequence(frames, args.out)
    print(f"{len(paths)} frames written to {args.out}")
    return {"frames": [path.name for path in paths], "shift": list(args.shift)}


def run_validate(args, config) -> Dict[str, Any]:
    domains = _typed(Domains.from_settings, config.get_domain_settings())
    paths = [args.path] if args.path.is_file() else list_rally_files(args.path)
    results = {}
    for path in paths:
        report = validate(read_rally_file(path, domains), domains)
        results[path.stem] = [{"row": v.row, "rule": v.rule, "message": v.message}
                              for v in report.violations]
        print(f"{path.name}: {report}")
    return {"violations": results}


COMMANDS = {
    "score": run_score,
    "preprocess": run_preprocess,
    "extract-events": run_extract_events,
    "assemble": run_assemble,
    "synth": run_synth,
    "validate": run_validate,
}


def setup_logging(log_file: Optional[Path] = None) -> None:
    """
    Logs go to stderr, and to the log file if any. Stdout is for results.
    """
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, handlers=handlers, force=True)


def run(argv: Optional[List[str]] = None) -> int:
    """
    Runs one command and returns the exit code: 0 on success, 1 on usage
    errors and 2 on unreadable or invalid data.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"shuttlehit: error: {e}", file=sys.stderr)
        return EXIT_USAGE_ERROR
    except SystemExit as e:
        # --help and --version
        return EXIT_SUCCESS if not e.code else EXIT_USAGE_ERROR

    setup_logging(args.log_file)
    log_row()
    log(f"Running '{args.command}'...")
    start = datetime.datetime.now()
    exit_code = EXIT_SUCCESS

    try:
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        config = load_configuration_from_disk(args.config)
        log(f"Configuration in use:\n{config}")
        report = COMMANDS[args.command](args, config)

        if args.command == "validate" and any(report["violations"].values()):
            exit_code = EXIT_DATA_ERROR
        if args.json_report:
            args.json_report.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")

    except (UsageError, PerturbError) as e:
        log_error(str(e))
        exit_code = EXIT_USAGE_ERROR

    except DataError as e:
        log_error(str(e), fatal="cannot proceed with invalid input data.")
        exit_code = EXIT_DATA_ERROR

    except Exception as e:
        log_error("Something unexpected occurred.", e, fatal="exiting.")
        exit_code = EXIT_DATA_ERROR

    finally:
        end = datetime.datetime.now()
        outcome = "successfully" if exit_code == EXIT_SUCCESS else "with errors"
        log(f"Execution completed {outcome} in: {end - start}")
        log_row()

    return exit_code


def main():
    sys.exit(run())


if "__main__" == __name__:
    main()
