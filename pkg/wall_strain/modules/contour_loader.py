import logging
from pathlib import Path
from typing import Any, Dict, Union

import yaml
from pydantic import ValidationError

from ..config.models import ContourDocumentModel
from ..core.contours import Contour, ContourFrame
from ..core.pipeline import ContourDocument
from ..errors import ContourError, GeometryError, ParseError, SchemaViolation

logger = logging.getLogger(__name__)


def _frame_of(error: Dict[str, Any]):
    loc = error.get("loc", ())
    if len(loc) >= 2 and loc[0] == "frames" and isinstance(loc[1], int):
        return loc[1]
    return None


def load_contours(path: Union[str, Path]) -> ContourDocument:
    """
    Reads a contour document (JSON or YAML), validates it against the schema
    and builds counter-clockwise, nested contour frames.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read contour document '{path}': {e}") from e

    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ParseError(f"'{path}' is not valid structured text: {getattr(e, 'problem', e)}", line=line) from e

    if not isinstance(raw, dict):
        raise SchemaViolation(f"'{path}' must hold a mapping with 'subject', 'slice' and 'frames'")

    try:
        model = ContourDocumentModel.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(p) for p in first.get("loc", ()))
        raise SchemaViolation(f"{field}: {first.get('msg')}", frame=_frame_of(first)) from e

    frames = []
    for index, frame in enumerate(model.frames):
        try:
            built = ContourFrame(
                t=frame.t,
                inner=Contour.from_points(frame.inner),
                outer=Contour.from_points(frame.outer),
            )
            built.check_nesting()
        except ContourError as e:
            raise GeometryError(f"{type(e).__name__}: {e}", frame=index) from e
        frames.append(built)

    logger.info(f"Loaded {len(frames)} frames for subject '{model.subject}', slice {model.slice} from {path}.")
    return ContourDocument(subject=model.subject, slice=model.slice, frames=frames)
