"""
Exact 1D total variation solvers on chains and trees, and 2D restoration drivers built from them.
"""
