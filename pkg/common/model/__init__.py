"""
Core domain types shared by every pipeline stage.
"""
from common.model.activity import *
from common.model.events import *
from common.model.networks import *
from common.model.statistics import *
from common.model.time_grid import *
