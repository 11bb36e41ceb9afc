import pytest

from macroplace.bench_gen import generate_benchmark
from macroplace.fileio import parse_layout


MINI_LAYOUT = """\
GRID 12 10
SITETYPE CLB 1 1 LUT:8,FF:16
SITETYPE DSP 1 2 DSP:1
SITETYPE BRAM 1 5 BRAM:1
SITETYPE IO 1 1 IO:2
COLUMN 0 IO
COLUMN 1 CLB
COLUMN 2 CLB
COLUMN 3 DSP
COLUMN 4 CLB
COLUMN 5 BRAM
COLUMN 6 CLB
COLUMN 7 CLB
COLUMN 8 DSP
COLUMN 9 CLB
COLUMN 10 CLB
COLUMN 11 IO
"""


@pytest.fixture(scope="session")
def mini_layout():
    return parse_layout(MINI_LAYOUT)


@pytest.fixture(scope="session")
def tiny_bench():
    return generate_benchmark(1, "tiny")
