import pathlib

import pytest

from cd_router.instance import decode

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


@pytest.fixture
def fig1():
    return decode(fixture_text("fig1.json"))


@pytest.fixture
def shared_path_fixture():
    return decode(fixture_text("shared-path.json"))
