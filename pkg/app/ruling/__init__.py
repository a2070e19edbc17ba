from app.ruling.detect import (
    NodeClass, Direction, constancy_mask, chord_defects, ruling_direction, field_scale,
    region_box, region_nodes,
)
from app.ruling.segments import Segment, trace_segments, crossing_audit, lipschitz_stats
from app.ruling.developability import (
    RulingConfig, RulingReport, RulingComparison, check_developability, compare_rulings,
    orient_line_field, rotate_field_90, transfer_pairing, weak_constancy_test,
)
