"""Frozen oracle values, produced by tests/oracles/make_oracles.py (exact rationals, mpmath).

Do not edit by hand; regenerate and paste if a definition changes.
"""
GRAY_RED = 76
SSIM_CONST_10_200 = 0.09989658160793254
TH_L1_P05 = 2.995732273553991
TH_L2_P05 = 1.4978661367769954
Z_005 = -2.575829303548901
Z_995 = 2.575829303548901
BAND_100_10 = (74.241706964511, 125.758293035489)
LINE_1x9 = (10.392304845413264, 0.9938079899999065)
RECT_6x3 = (6.928203230275509, 0.8660254037844386)
LINE_40x1 = (46.18802153517006, 0.9996874511566103)
L_SHAPE = (5.163977794943222, 0.8660254037844386)
KS_CONST_1 = 0.6321205588285577
IOU_SHIFTED = 0.14285714285714285
ASSOC_3x2 = (2.414213562373095, (0, 2))
NOISE_DIFF_RATE = {0.25: 0.1666821542168293, 0.5: 0.3335927016588731, 1.0: 0.6691604044405485}
