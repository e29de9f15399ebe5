import pytest
from hypothesis import settings

from activesep.geometry import LabeledPoint

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def anchors():
    return [LabeledPoint(2.0, 2.0, -1), LabeledPoint(2.0, 10.0, 1),
            LabeledPoint(18.0, 16.0, 1), LabeledPoint(18.0, 4.0, -1)]

