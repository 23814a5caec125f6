from typing import Literal

COMMANDS = Literal['lsw', 'psi', 'solve', 'sweep', 'residual']
OUTPUT_FORMATS = Literal['csv', 'json']
START_PROFILES = Literal['hat', 'lsw']
MU_POLICIES = Literal['max']
