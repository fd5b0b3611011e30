"""
Top-level package for coaglab.

Numerical laboratory for the coagulation equation with constant kernel. The command line interface is in
coaglab.cli, the experiments in coaglab.experiments.
"""
