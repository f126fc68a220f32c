"""Shared physical constants."""

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# 20*log10(4*pi/c) rounded to the value used throughout the loss model;
# path-loss numbers in docs and tests assume this exact constant.
FSPL_CONST_DB = 147.55
