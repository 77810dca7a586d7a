from .models import *
from .database import *
