"""Detection classes in report order, plus the id ranges used for non-target geometry."""

CLASS_NAMES = ("body", "gown", "shirt", "pants", "hat", "mask", "glove")
CLASS_IDS = {name: i for i, name in enumerate(CLASS_NAMES)}
GARMENT_CLASSES = CLASS_NAMES[1:]
HUMAN_CLASS_ID = 0

# report headings use capitalized names
REPORT_NAMES = tuple(n.capitalize() for n in CLASS_NAMES)

DISTRACTOR_CLASS_BASE = 200
DISTRACTOR_KINDS = ("box", "sphere", "cylinder")
ENVIRONMENT_CLASS_ID = 210

BACKGROUND_CLASS = 255
BACKGROUND_INSTANCE = 0


def class_name(class_id: int) -> str:
    if 0 <= class_id < len(CLASS_NAMES):
        return CLASS_NAMES[class_id]
    if class_id == ENVIRONMENT_CLASS_ID:
        return "environment"
    if DISTRACTOR_CLASS_BASE <= class_id < DISTRACTOR_CLASS_BASE + len(DISTRACTOR_KINDS):
        return "distractor_" + DISTRACTOR_KINDS[class_id - DISTRACTOR_CLASS_BASE]
    raise KeyError(class_id)
