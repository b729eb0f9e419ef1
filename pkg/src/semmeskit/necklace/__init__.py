"""Rectangular solid tori and the Case I Antoine necklace packing."""

from .case1 import (
    Case1Parameters,
    CheckResult,
    NecklaceCertificate,
    NecklaceSolution,
    UnsupportedCase,
    export_obj,
    place_case1,
    solve_case1_parameters,
    verify_necklace,
)
from .geometry import (
    TAU,
    CoreCurve,
    Frame,
    OrientedBox,
    RectTorus,
    box_separation,
    containment_margin,
    contains,
    disjoint,
    disjoint_margin,
    linking_number,
    orientation,
    placed,
    rectangle,
)
