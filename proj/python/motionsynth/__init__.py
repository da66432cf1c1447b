from ._motionsynth import *  # noqa: F401,F403
