"""Published full-scale benchmark numbers, stored as labeled reference
fixtures for report output.

These values come from the original full-scale experiments (CNN backbone,
broadcast-video dataset).  They are NOT reproduced by this desk-scale
implementation and are shown in reports purely for orientation.
"""

REFERENCE_LABEL = "reference, not reproduced"

# Retrieval and classification, full-scale test set.
REID_REFERENCE = {
    "reid_map": 72.59,
    "reid_rank1": 89.57,
    "team_map": 92.89,
    "team_rank1": 97.60,
    "role_accuracy": 94.27,
    "role_precision": 74.36,
}

# Tracking with oracle (ground-truth) detections.
TRACKING_REFERENCE_GT = {
    "hota": 90.77, "deta": 99.83, "assa": 82.53,
    "mota": 98.66, "idf1": 88.47, "id_switches": 3355,
}

# Tracking with real detections.
TRACKING_REFERENCE_DET = {
    "hota": 59.77, "deta": 61.09, "assa": 58.55,
    "mota": 73.07, "idf1": 74.44, "id_switches": 1428,
}

# Two-cluster team assignment accuracy by training regime.
TEAM_CLUSTER_REFERENCE = {
    "reid_only": 91.87,
    "reid_team": 95.17,
    "reid_team_role": 95.6,
}
