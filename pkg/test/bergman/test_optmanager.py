from collections.abc import Sequence
from typing import Optional

import pytest

from bergman import exceptions
from bergman import optmanager
from bergman.options import Options


class TD(optmanager.OptManager):
    def __init__(self) -> None:
        super().__init__()
        self.add_option("one", str, "done", "help")
        self.add_option("two", str, "dtwo", "help")


class TD2(TD):
    def __init__(self) -> None:
        super().__init__()
        self.add_option("three", str, "dthree", "help")
        self.add_option("four", str, "dfour", "help")
        self.add_option("one", str, "xone", "help")


class TDGrid(optmanager.OptManager):
    def __init__(self) -> None:
        super().__init__()
        self.add_option("grid.n", int, 2, "help")
        self.add_option("grid.alphas", Sequence[float], [1.0], "help")
        self.add_option("grid.tags", Sequence[str], [], "help")
        self.add_option("grid.nodes", Optional[int], None, "help")
        self.add_option("grid.fast", bool, False, "help")
        self.add_option("tol", float, 1e-12, "help")
        self.add_option("mode", str, "a", "help", choices=["a", "b"])


class Recorder:
    def __init__(self) -> None:
        self.calls: list[set[str]] = []

    def __call__(self, options: optmanager.OptManager, updated: set[str]) -> None:
        self.calls.append(updated)


def test_defaults() -> None:
    o = TD2()
    defaults = {
        "two": "dtwo",
        "three": "dthree",
        "four": "dfour",
    }

    for k, v in defaults.items():
        assert o.default(k) == v

    assert not o.is_set("one")
    assert "xone" == o.one

    new_values = {
        "two": "xtwo",
        "three": "xthree",
        "four": "xfour"
    }
    o.update(**new_values)
    for k, v in new_values.items():
        assert o.is_set(k)
        assert v == getattr(o, k)


def test_unknown_options() -> None:
    o = TD()
    with pytest.raises(exceptions.OptionError):
        o.update(five="x")
    with pytest.raises(exceptions.OptionError):
        o.default("five")
    with pytest.raises(exceptions.OptionError):
        o.is_set("five")
    with pytest.raises(exceptions.OptionError):
        o.set("five=x")
    assert "one" in o
    assert "five" not in o


def test_namespaces() -> None:
    o = TDGrid()
    assert o.grid.n == 2
    assert o.grid.alphas == [1.0]
    with pytest.raises(exceptions.OptionError):
        o.nothing


def test_set_parses_types() -> None:
    o = TDGrid()
    o.set(
        "grid.n=4",
        "grid.alphas=25, 50,100",
        "grid.tags=x",
        "grid.tags=y",
        "grid.nodes=64",
        "grid.fast",
        "tol=1e-8",
        "mode=b",
    )
    assert o.grid.n == 4
    assert o.grid.alphas == [25.0, 50.0, 100.0]
    assert o.grid.tags == ["x", "y"]
    assert o.grid.nodes == 64
    assert o.grid.fast is True
    assert o.tol == 1e-8
    assert o.mode == "b"

    o.set("grid.nodes=", "grid.fast=false")
    assert o.grid.nodes is None
    assert o.grid.fast is False


@pytest.mark.parametrize(
    "spec",
    [
        "grid.n=four",
        "grid.n",
        "grid.alphas=1,two",
        "tol=small",
        "grid.fast=maybe",
        "mode=c",
    ]
)
def test_set_rejects(spec: str) -> None:
    with pytest.raises(exceptions.OptionError):
        TDGrid().set(spec)


def test_type_checks() -> None:
    o = TDGrid()
    with pytest.raises(exceptions.OptionError):
        o.update(**{"grid.n": 2.5})
    with pytest.raises(exceptions.OptionError):
        o.update(**{"grid.n": True})
    with pytest.raises(exceptions.OptionError):
        o.update(**{"grid.alphas": [1.0, "x"]})
    o.update(tol=1)
    assert o.tol == 1


def test_rollback() -> None:
    o = TDGrid()
    errors: list[Exception] = []
    o.errored.connect(errors.append, weak=False)
    with pytest.raises(exceptions.OptionError):
        o.update(**{"grid.n": 5, "mode": "z"})
    assert o.grid.n == 2
    assert not o.is_set("grid.n")
    assert len(errors) == 1


def test_subscribe() -> None:
    o = TDGrid()
    rec = Recorder()
    o.subscribe(rec, "grid.*")
    o.update(tol=1e-3)
    assert rec.calls == []
    o.update(**{"grid.n": 3})
    assert rec.calls == [{"grid.n"}]

    with pytest.raises(exceptions.OptionError):
        o.subscribe(rec, "nothing.*")
    with pytest.raises(exceptions.OptionError):
        o.subscribe(rec, "nothing")


def test_subscription_is_weak() -> None:
    o = TDGrid()
    rec = Recorder()
    o.subscribe(rec, "tol")
    del rec
    o.update(tol=1e-3)
    assert o._subscriptions == []


def test_parse() -> None:
    assert optmanager.parse("") == {}
    parsed = optmanager.parse("[grid]\nn = 3\nalphas = [10, 20]\n\n[output]\nformat = 'json'\n")
    assert parsed == {"grid.n": 3, "grid.alphas": [10, 20], "output.format": "json"}
    with pytest.raises(exceptions.OptionError):
        optmanager.parse("[grid\n")


def test_parse_expands_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("BERGMAN_TEST_DIR", "/tmp/runs")
    assert optmanager.parse("[output]\npath = '$BERGMAN_TEST_DIR/out.csv'\n") == {"output.path": "/tmp/runs/out.csv"}


def test_load_path(tmp_path) -> None:
    config = tmp_path / "bergman.toml"
    config.write_text("[weight]\nname = 'expcap'\n\n[grid]\nn = 3\nb = [0.5, 1.5]\n")
    o = Options()
    optmanager.load_path(o, config)
    assert o.weight.name == "expcap"
    assert o.grid.n == 3
    assert o.grid.b == [0.5, 1.5]

    with pytest.raises(exceptions.OptionError, match="not found"):
        optmanager.load_path(o, tmp_path / "missing.toml")

    bad = tmp_path / "bad.toml"
    bad.write_text("[weight]\nname = 'flat'\n")
    with pytest.raises(exceptions.OptionError, match="bad.toml"):
        optmanager.load_path(o, bad)
    assert o.weight.name == "expcap"


def test_options_defaults() -> None:
    o = Options()
    assert o.weight.name == "gamma"
    assert o.grid.n == 2
    assert o.grid.alphas == [25.0, 50.0, 100.0, 200.0, 400.0]
    assert o.grid.y == []
    assert o.grid.jacobi_nodes is None
    assert o.output.path is None
    assert o.log.level == "info"
