"""Published method means used as report-rendering fixtures."""

from voxmetrics.report import MethodSummary

# method: dsc overall/sub, iou overall/sub, hd95 overall/sub
PUBLISHED_MEANS = {
    "nnUNetV2 basic": (0.8727, 0.8833, 0.7904, 0.7919, 8.7832, 7.2816),
    "Our Method": (0.8843, 0.8891, 0.8059, 0.8013, 6.9927, 6.9507),
    "nnUNet ResEnc L": (0.8828, 0.8893, 0.8033, 0.8019, 8.4396, 7.0321),
    "ANTs": (0.7998, 0.7638, 0.6889, 0.6182, 14.1072, 7.7786),
}


def published_summaries(n_cases=6):
    out = []
    for method, (d_o, d_s, i_o, i_s, h_o, h_s) in PUBLISHED_MEANS.items():
        out.append(MethodSummary(method, d_o, d_s, i_o, i_s, h_o, h_s, n_cases))
    return out
