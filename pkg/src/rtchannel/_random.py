import zlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named pipeline stage.

    The stage name is folded into the seed sequence, so re-seeding one stage
    leaves every other stage's draws untouched.
    """
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])
