import pytest

import renormlab as rl
from renormlab.operators import circle_rotation, lift, onepoint_swap_group


@pytest.fixture(scope="session")
def line_space():
    return rl.builtin_space("line", step=0.01, window=(-10, 10))


@pytest.fixture(scope="session")
def line_cfg(line_space):
    group = rl.GroupSpec.trivial(line_space)
    return rl.build_config(line_space, group, C=1.1, depth=6)


@pytest.fixture(scope="session")
def product_space():
    return rl.builtin_space("circle_x_interval", count=48, levels=16)


@pytest.fixture(scope="session")
def rotation_group(product_space):
    circ = product_space.aux["a"]
    gen = circle_rotation(circ, steps=circ.aux["count"] // 12, label="rot2pi/12")
    return rl.GroupSpec((lift(gen, product_space, "left"),), word_cap=6,
                        closure_tag=True, label="rot12")


@pytest.fixture(scope="session")
def product_cfg(product_space, rotation_group):
    return rl.build_config(product_space, rotation_group, C=1.1, depth=4)


@pytest.fixture(scope="session")
def remark_space():
    return rl.builtin_space("remark25", n_max=50)


@pytest.fixture(scope="session")
def onepoint_space():
    return rl.builtin_space("onepoint01N", n_max=50)


@pytest.fixture(scope="session")
def swap_group(onepoint_space):
    return onepoint_swap_group(onepoint_space, word_cap=2)
