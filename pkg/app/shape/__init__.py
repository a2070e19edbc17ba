from app.shape.forms import FormField, unit_normal, second_form, second_form_bound, smoothed_immersion
from app.shape.christoffel import ChristoffelField, christoffel
from app.shape.residuals import (
    metric_deviation, codazzi_residual, gauss_pairing, gauss_identity_residual,
    normal_deviation, christoffel_rate, curl_rate, gauss_pairing_rate, residual_rows,
    required_exponents,
)
