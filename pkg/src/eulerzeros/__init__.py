"""Zeros of finite Euler product approximations to the Riemann zeta function."""

from .errors import EulerZerosError
from .specfun import EvalAccuracy, arg_chi_half, exp_integral_e2, f2_kernel, im_f2_imag_axis, lambert_w0
from .zetax import XMode, f_x_star, log_p_x, log_p_x_star, phase, von_mangoldt_table, zeta_afe, zeta_x_star
from .zerolab import ZeroSearchConfig, ZeroTable, count_zeros, find_approx_zero, load_zero_table, match_run

__all__ = [
    "EulerZerosError", "EvalAccuracy", "arg_chi_half", "exp_integral_e2", "f2_kernel", "im_f2_imag_axis",
    "lambert_w0", "XMode", "f_x_star", "log_p_x", "log_p_x_star", "phase", "von_mangoldt_table", "zeta_afe",
    "zeta_x_star", "ZeroSearchConfig", "ZeroTable", "count_zeros", "find_approx_zero", "load_zero_table",
    "match_run",
]
