from _ovv import *  # noqa: F401,F403
