"""Frozen oracle values computed independently of the package."""

# n=1, p=2: energy conservation u'^2/2 + u^3/3 = 1/3 gives
# r* = sqrt(3/2) * B(1/3, 1/2) / 3
R_STAR_P2 = 1.71731534225441
# int_0^1 V^3 for the p=2 profile on (0, 1), by the same substitution:
# 2 alpha^3 / beta * sqrt(3/2) * int_0^1 u^3 (1 - u^3)^{-1/2} du
V3_P2 = 656.6595496637706
# lambda_K on Interval(0, 1), p=2, from a 1600-cell dense solve
LAMBDA_K_1600 = 2.9999957177625802
