import pytest

from radsigns.corpus import Entity, SecondaryPartDictionary, Sentence, TagSequence

# sentence: patchy dense shadows in the right upper lung, reduced from before
FIG_TEXT = "右上肺见多发斑片状密影较前减少。"
FIG_LABELS = (
    "B-P", "I-P", "I-P", "O", "B-D", "I-D",
    "B-Abn", "I-Abn", "I-Abn", "I-Abn", "I-Abn",
    "O", "O", "O", "O", "O",
)

# sentence: the right upper lung bronchus is partly occluded
OCCLUSION_TEXT = "右上肺支气管部分闭塞。"
OCCLUSION_LABELS = (
    "B-P", "I-P", "I-P", "B-P", "I-P", "I-P",
    "B-D", "I-D", "B-Abn", "I-Abn", "O",
)


@pytest.fixture
def shadow_sentence():
    return Sentence.from_text("s1", FIG_TEXT)


@pytest.fixture
def shadow_tags():
    return TagSequence("s1", FIG_LABELS)


@pytest.fixture
def shadow_entities():
    return [
        Entity("P", 0, 3, "右上肺"),
        Entity("D", 4, 6, "多发"),
        Entity("Abn", 6, 11, "斑片状密影"),
    ]


@pytest.fixture
def occlusion_sentence():
    return Sentence.from_text("s1", OCCLUSION_TEXT)


@pytest.fixture
def occlusion_tags():
    return TagSequence("s1", OCCLUSION_LABELS)


@pytest.fixture
def occlusion_entities():
    return [
        Entity("P", 0, 3, "右上肺"),
        Entity("P", 3, 6, "支气管"),
        Entity("D", 6, 8, "部分"),
        Entity("Abn", 8, 10, "闭塞"),
    ]


@pytest.fixture
def bronchus_dictionary():
    return SecondaryPartDictionary(frozenset({"支气管"}))
