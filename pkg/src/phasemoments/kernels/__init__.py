"""Sampling kernels for the exponential moments of canonical phase."""

from .evaluate import (
    classical_slope,
    kernel_classical,
    kernel_even,
    kernel_odd,
    kernel_values,
)
from .kummer import kummer_phi, kummer_phi_array
from .mixing import MixingDensity, mixing_density, weight_mass
from .table import (
    KernelTable,
    build_kernel_table,
    covered_levels,
    default_table_grid,
    get_kernel_table,
    kernel_tables,
    load_kernel_table,
    save_kernel_table,
    verify_integral_equation,
)

__all__ = [
    "KernelTable",
    "MixingDensity",
    "build_kernel_table",
    "classical_slope",
    "covered_levels",
    "default_table_grid",
    "get_kernel_table",
    "kernel_classical",
    "kernel_even",
    "kernel_odd",
    "kernel_tables",
    "kernel_values",
    "kummer_phi",
    "kummer_phi_array",
    "load_kernel_table",
    "mixing_density",
    "save_kernel_table",
    "verify_integral_equation",
    "weight_mass",
]
