import pytest

from perturbtree.digraph import Digraph
from perturbtree.models import doubled_complete_bipartite
from perturbtree.trees import family_tree


@pytest.fixture
def directed_path4():
    return family_tree("directed-path", 4)


@pytest.fixture
def doubled_k22():
    return doubled_complete_bipartite(2, 2)


@pytest.fixture
def directed_cycle4():
    return Digraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


def pytest_terminal_summary(terminalreporter):
    from _report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
