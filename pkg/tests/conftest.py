import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

_criteria: list[tuple[str, str]] = []


class TableScorer:
    """Scorer returning hand-assigned values per candidate text (context ignored)."""

    def __init__(self, table, default=0.01):
        self.table = dict(table)
        self.default = default

    def score(self, candidate, context):
        return self.table.get(candidate, self.default)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def fixture_text(name):
    return (FIXTURES / name).read_text(encoding="utf-8")


def fixture_json(name):
    return json.loads(fixture_text(name))


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for name, value in getattr(report, "user_properties", []):
        if name == "criterion":
            _criteria.append((value, report.outcome))


@pytest.fixture
def criterion(request):
    """Tag a test as an acceptance criterion; its outcome is listed in the summary."""
    def tag(name):
        request.node.user_properties.append(("criterion", name))
    return tag


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _criteria:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}")


def random_graph(rng, max_objects=8, max_relations=12, names="abcdefgh"):
    """Random scene graph plus a random LM table over its relation and object phrases."""
    from vqaexplain.scene_graph import BoundingBox, ObjectNode, Relation, SceneGraph

    n = rng.randint(0, max_objects)
    objects = tuple(ObjectNode(f"o{i}", rng.choice(names), (), BoundingBox(i, i, 5, 5))
                    for i in range(n))
    relations = ()
    if n:
        relations = tuple(
            Relation(f"r{j}", f"o{rng.randrange(n)}", rng.choice(["on", "near", "with"]),
                     f"o{rng.randrange(n)}")
            for j in range(rng.randint(0, max_relations)))
    graph = SceneGraph(64, 64, objects, relations)
    table = {}
    for o in objects:
        table.setdefault(o.name, rng.random())
    for r in relations:
        phrase = f"{graph.object(r.subject_id).name} {r.predicate} {graph.object(r.object_id).name}"
        table.setdefault(phrase, rng.random())
    return graph, TableScorer(table)
