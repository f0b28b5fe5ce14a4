from pathlib import Path

#: ShuttleHit version
VERSION = "1.0.0"


# Base paths
# ##########

#: Folder containing the source code
BASE_PATH = Path(__file__).parent

#: Folder containing the data used by ShuttleHit for its operations
DATA_PATH = BASE_PATH / "data"

#: Default configuration file, optional: defaults below apply if it is absent
CONFIGURATION_FILE = DATA_PATH / "configuration.json"


# Log files
# #########

#: Format of the console logs
LOG_FORMAT = '%(message)s'

#: Used with datetime to prefix every log line
LOG_TIME_FORMAT = "%H:%M:%S"


# Exit codes
# ##########

#: Everything went fine
EXIT_SUCCESS = 0

#: Unknown subcommand, unknown flag or bad flag value
EXIT_USAGE_ERROR = 1

#: Unreadable or invalid input data
EXIT_DATA_ERROR = 2


# Rally files
# ###########

#: Header of every rally CSV, order is fixed
SHOT_COLUMNS = [
    "ShotSeq",
    "HitFrame",
    "Hitter",
    "RoundHead",
    "Backhand",
    "BallHeight",
    "LandingX",
    "LandingY",
    "HitterLocationX",
    "HitterLocationY",
    "DefenderLocationX",
    "DefenderLocationY",
    "BallType",
    "Winner",
]

#: Rally files are named after their clip
RALLY_FILE_SUFFIX = ".csv"

#: Category domains. These are conventions, the competition never listed them.
DOMAIN_DEFAULTS = {
    "hitter": ["A", "B"],
    "round_head": [1, 2],
    "backhand": [1, 2],
    "ball_height": [1, 2],
    "ball_type": [1, 2, 3, 4, 5, 6, 7, 8, 9],
    "winner": ["A", "B", "X"],
}


# Scoring
# #######

#: Weight earned by each column of a gated shot. They add up to 0.9.
SHOT_WEIGHTS = {
    "HitFrame": 0.1,
    "Hitter": 0.1,
    "BallHeight": 0.1,
    "Landing": 0.1,
    "HitterLocation": 0.05,
    "DefenderLocation": 0.05,
    "Backhand": 0.05,
    "RoundHead": 0.05,
    "BallType": 0.2,
    "Winner": 0.1,
}

#: Awarded to a rally whose shot count is right
COUNT_GATE_WEIGHT = 0.1

#: Fallback values for the scoring configuration
SCORING_DEFAULTS = {
    "hit_frame_tolerance": 2,
    "landing_threshold": 6.0,
    "location_threshold": 10.0,
    # The equations use a strict '<', the prose says "not greater than"
    "inclusive_distance": False,
}

#: Decimals used when printing scores on the console
PRINTED_SCORE_DECIMALS = 4


# Optical flow preprocessing
# ##########################

#: Frame files inside a sequence directory
FRAME_NAME_FORMAT = "frame_{:06d}.ppm"

#: Glob matching the frame files of a sequence directory
FRAME_GLOB = "frame_*.ppm"

#: Fallback values for the preprocessing configuration
PREPROC_DEFAULTS = {
    "window_radius": 2,
    "background_threshold": 0.5,
    "min_eigen": 1e-4,
    "output_size": (180, 180),
    "render_mode": "magnitude-gray",
    "remove_background": True,
}

#: Percentile of the flow magnitude mapped to full brightness
RENDER_PERCENTILE = 99

#: Luma weights for RGB to grayscale conversion
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


# Event extraction
# ################

#: Fallback values for the event extraction configuration
EXTRACTION_DEFAULTS = {
    "quantile": 0.8,
    "min_gap": 3,
}

#: A stream whose values span less than this carries no event. The cutoff
#: is absolute: scaling a stream keeps its events only while the scaled
#: range stays at or above it (a range of 1e-6 survives scaling down to
#: 1e-3, not to 1e-4).
FLAT_STREAM_RANGE = 1e-9

#: Header of probability stream files
STREAM_COLUMNS = ["frame", "prob"]


# Attribute assembly
# ##################

#: Fallback values for the assembly configuration
ASSEMBLY_DEFAULTS = {
    "side_of_A": "bottom",
    "location_mode": "bbox-vertex",
    "ankle_indices": (15, 16),  # COCO left and right ankle
    "keypoint_confidence": 0.1,
    "landing_y_source": "box",
    "ensemble": "mean",
    "alternate_hitters": True,
}

#: Number of keypoints of a COCO pose
POSE_KEYPOINTS = 17

#: Columns filled from classifier probabilities, with their domain name
CLASSIFIED_ATTRIBUTES = {
    "Hitter": "hitter",
    "RoundHead": "round_head",
    "Backhand": "backhand",
    "BallHeight": "ball_height",
    "BallType": "ball_type",
    "Winner": "winner",
}


# Synthetic fixtures
# ##################

#: Fallback values for the rally generator
SYNTH_DEFAULTS = {
    "n_shots": (1, 12),
    "frame_gap": (8, 40),
    "first_frame": (0, 30),
    "x_range": (0, 1280),
    "y_range": (0, 720),
    "seed": 7,
}
