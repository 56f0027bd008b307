from typing import Optional, Tuple


class WallStrainError(Exception):
    """Base class for every error raised by wall_strain."""


# --- Contours ---
class ContourError(WallStrainError):
    pass


class EmptyContour(ContourError):
    pass


class RefOutsideContour(ContourError):
    pass


class DegenerateAngle(ContourError):
    pass


class CountTooSmall(ContourError):
    pass


class CountMismatch(ContourError):
    pass


class SelfIntersectingContour(ContourError):
    pass


class NonNestedContours(ContourError):
    pass


# --- Mesh ---
class MeshError(WallStrainError):
    pass


class InvertedElement(MeshError):
    pass


class MeshSizeError(MeshError):
    pass


# --- FEM ---
class FEMError(WallStrainError):
    pass


class InvalidMaterial(FEMError):
    pass


class InvalidPoisson(InvalidMaterial):
    pass


class DegenerateElement(FEMError):
    pass


class UnknownMaterial(FEMError):
    pass


class SingularConstraint(FEMError):
    pass


class UnsupportedConstraint(FEMError):
    pass


class ConflictingBC(FEMError):
    pass


class EdgeNotOnBoundary(FEMError):
    pass


class NotPositiveDefinite(FEMError):
    pass


class NoConvergence(FEMError):
    pass


# --- Strain ---
class StrainError(WallStrainError):
    pass


class NodeAtReference(StrainError):
    pass


# --- Benchmark ---
class BenchmarkError(WallStrainError):
    pass


class RadiusOutOfRange(BenchmarkError):
    pass


class InhomogeneousSpec(BenchmarkError):
    pass


class LengthMismatch(BenchmarkError):
    pass


class ZeroVariance(BenchmarkError):
    pass


# --- Documents and outputs ---
class DocumentError(WallStrainError):
    pass


class ParseError(DocumentError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaViolation(DocumentError):
    def __init__(self, message: str, frame: Optional[int] = None):
        self.frame = frame
        if frame is not None:
            message = f"frame {frame}: {message}"
        super().__init__(message)


class GeometryError(DocumentError):
    def __init__(self, message: str, frame: Optional[int] = None):
        self.frame = frame
        if frame is not None:
            message = f"frame {frame}: {message}"
        super().__init__(message)


class FramePairError(WallStrainError):
    """A frame pair failed; `pair` is the (t0, t1) it was processing."""

    def __init__(self, pair: Tuple[int, int], stage: str, cause: Exception):
        self.pair = pair
        self.stage = stage
        self.cause = cause
        super().__init__(f"pair {pair[0]}-{pair[1]} failed during {stage}: {cause}")


class OutputWriteError(WallStrainError):
    pass
