"""Calibrated H0 cumulants for pearson-uniform. Generated by scripts/calibrate_pearson.py."""

VERSION = 1
COUNT = 1000000
SEED = 20240601

# (statistic id, n, N) -> (mean, variance, third cumulant) of N·statistic
TABLE = {
    ('copula:normalized-total/euclidean', 2, 100): (1.009942467887041, 0.3097037301357539, 0.38505160903910024),
    ('copula:normalized-total/euclidean', 3, 100): (4.029842221421771, 1.038971971815586, 1.2445708903372446),
    ('copula:normalized-total/euclidean', 4, 100): (11.061432812301762, 2.3487942570600056, 2.750904940261192),
    ('copula:normalized-total/euclidean', 5, 100): (26.097605303888656, 4.588328602154288, 5.446014774400635),
    ('copula:total/euclidean', 5, 100): (1.5580627808680658, 0.03948013291201936, 0.005538729426339378),
}
