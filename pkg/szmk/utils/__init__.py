from . import config
from . import misc
