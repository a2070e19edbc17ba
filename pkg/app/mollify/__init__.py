from app.mollify.kernel import Kernel, ScaleLadder, DEFAULT_KERNEL
from app.mollify.rates import RateFit, fit_rate
from app.mollify.convolve import (
    mollify, mollified_derivative, mollified_gradient, commutator,
    distributional_product, approximation_bounds, eroded_grid,
)
