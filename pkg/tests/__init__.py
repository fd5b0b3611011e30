"""Unit test package for coaglab."""
