import pytest

from vcnetsim import topology as topo


@pytest.fixture(scope="session")
def hx1d():
    return topo.build(topo.HyperXSpec(n=1, side=64, servers=64))


@pytest.fixture(scope="session")
def hx2d():
    return topo.build(topo.HyperXSpec(n=2, side=16, servers=16))


@pytest.fixture(scope="session")
def hx3d():
    return topo.build(topo.HyperXSpec(n=3, side=8, servers=8))


@pytest.fixture(scope="session")
def df():
    return topo.build(topo.DragonflySpec(a=12, h=6, servers=6, groups=73))


@pytest.fixture(scope="session")
def dfp():
    return topo.build(topo.DragonflyPlusSpec(r=8, servers=8, groups=65))


@pytest.fixture(scope="session")
def hx2d_small():
    return topo.build(topo.HyperXSpec(n=2, side=4, servers=4))


@pytest.fixture(scope="session")
def df_small():
    return topo.build(topo.DragonflySpec(a=4, h=2, servers=2, groups=9))


@pytest.fixture(scope="session")
def dfp_small():
    return topo.build(topo.DragonflyPlusSpec(r=2, servers=1, groups=5))
