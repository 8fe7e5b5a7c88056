"""
Configuration settings for the proxnet analysis pipeline.
"""
import os

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# --- Study grid ---
STUDY_START_DATE = "2015-08-17"
STUDY_END_DATE = "2015-09-11"  # inclusive
STUDY_DAYS_OF_WEEK = (0, 1, 2, 3, 4)  # Monday-Friday
STUDY_DAILY_START = "09:00"
STUDY_DAILY_END = "17:00"
STUDY_TIMEZONE = "Australia/Sydney"

# One discovery scan is scheduled every five minutes
BIN_SECONDS = 300

# --- Identifiers ---
HASH_SALT = os.getenv("PROXNET_HASH_SALT", "")
MAC_SEPARATORS = ":-. "

# --- Ingest ---
MAX_NOMINEES = 5
ACTIVITY_GAP_TOLERANCE = 0  # bins bridged between two evidence bins

# --- Estimation ---
DEFAULT_WEIGHT_MODE = "time_fraction"
DEFAULT_UNIVERSE = "all_office_bins"
MATRIX_DECIMALS = 6

# --- Statistics ---
DEFAULT_PERMUTATIONS = 10000
DEFAULT_BOOTSTRAP = 1000
DEFAULT_CI_LEVEL = 0.95
BOOTSTRAP_MAX_RETRIES = 10  # redraws allowed per replicate on a constant resample
CURVE_S_VALUES = (10, 50, 100, 250, 500)
CURVE_REPEATS = 1000
CURVE_BAND = (0.005, 0.995)  # 99% band
MIN_ROSTER_SIZE = 3

# --- Simulator presets ---
# Twelve scans are scheduled per office hour
PLATFORM_A_ADHERENCE = 0.47  # 5.6 scans per hour
PLATFORM_B_ADHERENCE = 0.09  # 1.1 scans per hour
BADGE_WEAR_PROBABILITY = 0.37

# --- Logging ---
LOGGER_NAME = "proxnet"
LOG_FORMAT = '%(asctime)s [%(levelname)s] %(message)s'
LOG_LEVEL = os.getenv("PROXNET_LOG_LEVEL", "WARNING")
LOG_FILE = os.getenv("PROXNET_LOG_FILE", "")

# --- Exit codes ---
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_STATISTICS = 4

VERSION = "1.0.0"
