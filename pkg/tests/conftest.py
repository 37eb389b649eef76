import pytest

from mrmc.model import Commodity, NodeSpec, Topology


def chain(radios=1, channels=1, **kw):
    """A(0,0) - M(200,0) - D(400,0), one commodity A->D."""
    nodes = [NodeSpec("A", 0, 0, radios), NodeSpec("M", 200, 0, radios), NodeSpec("D", 400, 0, radios)]
    return Topology(nodes, channels, 250.0, 500.0, [Commodity("A", "D", 1.0)], **kw)


def pair(radios=1, channels=1, **kw):
    nodes = [NodeSpec("A", 0, 0, radios), NodeSpec("B", 100, 0, radios)]
    return Topology(nodes, channels, 250.0, 500.0, [Commodity("A", "B", 1.0)], **kw)


def diamond(radios=1, channels=1, **kw):
    """s->a->d is 2 hops, s->b1->b2->d is 3 hops; every node interferes with every other."""
    nodes = [
        NodeSpec("s", 0, 0, radios), NodeSpec("a", 200, -140, radios),
        NodeSpec("d", 400, 0, radios), NodeSpec("b1", 80, 220, radios),
        NodeSpec("b2", 320, 220, radios),
    ]
    return Topology(nodes, channels, 250.0, 500.0, [Commodity("s", "d", 1.0)], **kw)


def grid(k=5, spacing=200.0):
    nodes = [NodeSpec(f"g{r}_{c}", c * spacing, r * spacing, 1) for r in range(k) for c in range(k)]
    comm = Commodity("g0_0", f"g{k - 1}_{k - 1}", 1.0)
    return Topology(nodes, 1, 250.0, 500.0, [comm])


@pytest.fixture
def chain_topo():
    return chain()
