"""Picking a feature extractor without labels on the target dataset.

Given a score board of past results (P datasets x M extractors), the
leave-one-out rule recommends for a new dataset whichever extractor has
the best mean score on all the *other* datasets.  This is honest: the
held-out row never influences its own recommendation.

Run from the repository root:

    python3 demos/extractor_selection.py
"""

from mvclust import ScoreBoard, bnet_wnet, lnet_select

extractors = ["resnet50", "vgg16", "densenet169", "inception"]
datasets = ["office", "textures", "faces", "aerial", "retail"]
scores = [
    [0.71, 0.58, 0.77, 0.63],
    [0.64, 0.61, 0.69, 0.66],
    [0.88, 0.72, 0.83, 0.70],
    [0.52, 0.49, 0.61, 0.57],
    [0.69, 0.55, 0.74, 0.60],
]
board = ScoreBoard(scores=scores, dataset_names=datasets, extractor_names=extractors)

print("board: %d datasets x %d extractors\n" % (board.n_datasets, board.n_extractors))

# Per-dataset winners and losers, for orientation.
for name in datasets:
    best, worst = bnet_wnet(board.row(name))
    print("%-9s best %-12s worst %s" % (name, extractors[best], extractors[worst]))

# The actual protocol: hold each dataset out, recommend from the rest.
print("\nleave-one-out recommendations:")
for name in datasets:
    pick = lnet_select(board, holdout=name)
    print("  for %-9s -> %s" % (name, extractors[pick]))

# Without a holdout the rule just averages over every row.
overall = lnet_select(board)
print("\noverall recommendation: %s" % extractors[overall])
