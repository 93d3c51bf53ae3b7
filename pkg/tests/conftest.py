import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from symext import Poset, build_instance, build_staged_instance


@pytest.fixture(scope="session")
def reference():
    """|Z|=2 antichain, 2 fibers, 2 slots, cutoff 1, total-domain conditions."""
    poset = Poset.antichain(["a", "b"])
    return build_instance(poset, 2, 2, 1, 8)


@pytest.fixture(scope="session")
def swap_scale():
    """|Z|=2 antichain with 3 fibers: the swap-kernel instance."""
    poset = Poset.antichain(["a", "b"])
    return build_instance(poset, 3, 2, 1)


@pytest.fixture(scope="session")
def single_site_n3():
    """One site, 3 fibers: the pair-name counterexample instance."""
    return build_instance(Poset.antichain(["a"]), 3, 2, 1)


@pytest.fixture(scope="session")
def staged_pair():
    """Two stages of sizes 3 and 4."""
    return build_staged_instance((3, 4), 1)


@pytest.fixture(scope="session")
def tiny():
    """One site, 3 fibers, 1 slot: the smallest valid instance (3 cells),
    for exhaustive sweeps.  (Anything with fewer cells fails the
    trivial-group exclusion.)"""
    return build_instance(Poset.antichain(["a"]), 3, 1, 1)
