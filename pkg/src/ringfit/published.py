"""Published validation results for Cases 1-8, as (mean, std) pairs.

Per component the columns are f (rel.), phi [rad] (abs.), tau (rel.), A (rel.).
"""

PUBLISHED_RESULTS = {
    1: {
        "match": (0.999, 0.006),
        "components": [
            [(0.025, 0.020), (0.046, 0.034), (0.044, 0.033), (0.046, 0.035)],
            [(0.006, 0.005), (0.021, 0.016), (0.019, 0.015), (0.012, 0.009)],
        ],
    },
    2: {
        "match": (0.998, 0.009),
        "components": [
            [(0.007, 0.007), (0.036, 0.031), (0.028, 0.022), (0.033, 0.026)],
            [(0.004, 0.005), (0.032, 0.027), (0.023, 0.018), (0.027, 0.022)],
        ],
    },
    3: {
        "match": (0.985, 0.012),
        "components": [
            [(0.072, 0.056), (0.093, 0.069), (0.049, 0.037), (0.143, 0.127)],
            [(0.045, 0.036), (0.093, 0.068), (0.042, 0.033), (0.068, 0.056)],
            [(0.031, 0.024), (0.088, 0.067), (0.039, 0.030), (0.046, 0.036)],
            [(0.021, 0.017), (0.089, 0.065), (0.034, 0.026), (0.035, 0.026)],
            [(0.014, 0.011), (0.083, 0.061), (0.032, 0.024), (0.028, 0.021)],
        ],
    },
    4: {
        "match": (0.996, 0.005),
        "components": [
            [(0.021, 0.028), (0.040, 0.036), (0.103, 0.119), (0.046, 0.035)],
        ],
    },
    5: {
        "match": (0.993, 0.006),
        "components": [
            [(0.030, 0.040), (0.057, 0.050), (0.099, 0.095), (0.061, 0.044)],
        ],
    },
    6: {
        "match": (1.000, 0.001),
        "components": [
            [(0.008, 0.007), (0.045, 0.037), (0.030, 0.023), (0.048, 0.044)],
            [(0.003, 0.003), (0.023, 0.019), (0.018, 0.014), (0.023, 0.020)],
        ],
    },
    7: {
        "match": (0.999, 0.001),
        "components": [
            [(0.008, 0.006), (0.053, 0.045), (0.043, 0.031), (0.078, 0.072)],
            [(0.005, 0.004), (0.030, 0.026), (0.027, 0.021), (0.033, 0.025)],
        ],
    },
    8: {
        "match": (0.989, 0.013),
        "components": [
            [(0.055, 0.046), (0.086, 0.064), (0.056, 0.042), (0.098, 0.070)],
            [(0.041, 0.030), (0.081, 0.062), (0.056, 0.040), (0.055, 0.042)],
            [(0.019, 0.015), (0.062, 0.046), (0.044, 0.032), (0.040, 0.030)],
        ],
    },
}


def fmt(pair) -> str:
    return f"{pair[0]:.3f} ± {pair[1]:.3f}"
