from app.weakdet.pairing import ma_pairing, component_pairing
from app.weakdet.degree import (
    PlanarMap, DegreeReport, DegreeScan, brouwer_degree, perturbed_map, gradient_map,
    degree_scan, rectangle_boundary, circle_boundary, map_from_function, delta_ladder,
)
