from app.fields.grid import Grid2, ScalarField, VectorField, MatrixField, trim, restrict, align
from app.fields.calculus import grad, div, curl2, hess, jacobian
from app.fields.quadrature import TestFunction, pair, integrate, w11_norm, default_battery
from app.fields.holder import HolderProfile, HolderVerdict, holder_profile, little_holder_verdict
from app.fields.sample import sample
from app.fields.fld1 import read_fld1, write_fld1
