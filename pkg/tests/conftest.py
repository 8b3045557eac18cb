import pytest

from journeyshare.transit import RelaxedGraph

SIX_STOP_STOPS = [
    "stop_id,name,lat,lon,mode",
    "A,Alpha,55.00,-3.00,rail",
    "B,Beta,55.10,-3.00,rail",
    "C,Gamma,55.20,-3.00,rail",
    "D,Delta,55.30,-3.00,rail",
    "E,Epsilon,55.40,-3.00,rail",
    "F,Zeta,55.50,-3.00,rail",
]

# A->B has two backing runs (50 and 60 min); C..F is served by a stopping run
# whose leg durations 45/70/30 are reused by the shared-cost fixtures
SIX_STOP_TIMETABLE = [
    "service_id,run_id,seq,from_stop,to_stop,departure_min,duration_min",
    "SV1,SV1a,1,A,B,100,50",
    "SV9,SV9a,1,A,B,200,60",
    "SV2,SV2a,1,C,D,100,45",
    "SV2,SV2a,2,D,E,150,70",
    "SV2,SV2a,3,E,F,225,30",
]


def graph_of(edges: dict[tuple[str, str], int], extra_nodes: set[str] = frozenset()) -> RelaxedGraph:
    """Build a relaxed graph directly from an edge-cost mapping."""
    nodes = set(extra_nodes)
    out: dict[str, list[str]] = {}
    backing = {}
    for (a, b), cost in edges.items():
        assert cost > 0
        nodes.update((a, b))
        out.setdefault(a, []).append(b)
        backing[(a, b)] = ("service", "SV", "R", 1)
    return RelaxedGraph(
        nodes=frozenset(nodes),
        edges=dict(edges),
        backing=backing,
        out_neighbours={a: tuple(sorted(bs)) for a, bs in out.items()},
    )


@pytest.fixture
def six_stop_network():
    from journeyshare.transit import load_network

    return load_network(SIX_STOP_STOPS, SIX_STOP_TIMETABLE)


@pytest.fixture
def six_stop_graph(six_stop_network):
    from journeyshare.transit import build_relaxed_graph

    return build_relaxed_graph(six_stop_network)
