"""
Configuration initialization for proxnet.
"""
# Import all configuration from the main config file
from common.config.analysis_config import *
