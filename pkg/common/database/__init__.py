"""
Event store initialization for proxnet.
"""
# Import all database functionality
from common.database.database import *
